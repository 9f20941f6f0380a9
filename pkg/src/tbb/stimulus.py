"""Controlled audio stimulus synthesis and 16-bit PCM WAV I/O.

Builds the clips fed to predictors: window crops, short (truncated) and long
(looped) event variants, and events placed at fixed positions on noise
carriers. All synthesis is deterministic under a fixed seed so manifests and
WAV files are byte-reproducible.
"""

from __future__ import annotations

import hashlib
import json
import wave
from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import (
    ClipTooShort,
    InvalidBucket,
    IoFailure,
    OutOfRange,
    RateMismatch,
    UnsupportedFormat,
)

DEFAULT_SAMPLE_RATE = 16000
FADE_S = 0.01          # trailing fade applied at truncation cuts
POSITION_BUCKETS = 5

I16_MAX = 32767
I16_MIN = -32768


@dataclass(frozen=True)
class AudioBuffer:
    samples: np.ndarray          # int16, mono
    sample_rate_hz: int

    def __post_init__(self):
        if self.sample_rate_hz <= 0:
            raise ValueError("sample_rate_hz must be positive")
        if self.samples.dtype != np.int16:
            raise ValueError("samples must be int16")

    @property
    def duration_s(self) -> float:
        return len(self.samples) / self.sample_rate_hz

    def __len__(self) -> int:
        return len(self.samples)


@dataclass(frozen=True)
class CarrierSpec:
    kind: str = "pink"           # silence | white | pink
    snr_db: float = 20.0
    seed: int = 0


@dataclass
class StimulusRecord:
    stimulus_id: str
    audio_path: str
    window_len_s: float
    query_class: int
    gt_onset_s: float
    duration_variant: str = "natural"    # natural | short | long
    position_bucket: Optional[int] = None
    experiment: str = "length_sweep"     # length_sweep | duration | position
    seed: int = 0
    recording_id: str = ""
    query_class_name: str = ""

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "StimulusRecord":
        return cls(**json.loads(line))


def stimulus_id_for(run_seed: int, recording_id: str, experiment: str,
                    window_len_s: float, query_class: int,
                    bucket: Optional[int], variant: str) -> str:
    """Lowercase-hex 64-bit hash identifying one stimulus."""
    key = repr((run_seed, recording_id, experiment, float(window_len_s),
                query_class, bucket, variant)).encode()
    return hashlib.blake2b(key, digest_size=8).hexdigest()


def derive_seed(run_seed: int, *parts) -> int:
    """Per-stimulus 64-bit seed; stable under addition of other stimuli."""
    key = repr((run_seed,) + tuple(parts)).encode()
    return int.from_bytes(hashlib.blake2b(key, digest_size=8).digest(), "big")


# --- WAV I/O -----------------------------------------------------------------

def read_wav(path) -> AudioBuffer:
    """Read a 16-bit PCM WAV; multi-channel input is mean-downmixed to mono."""
    try:
        with wave.open(str(path), "rb") as wf:
            if wf.getsampwidth() != 2 or wf.getcomptype() != "NONE":
                raise UnsupportedFormat(f"{path}: only 16-bit PCM WAV is supported")
            n_ch = wf.getnchannels()
            rate = wf.getframerate()
            raw = wf.readframes(wf.getnframes())
    except wave.Error as exc:
        raise UnsupportedFormat(str(exc)) from exc
    except OSError as exc:
        raise IoFailure(str(exc)) from exc
    data = np.frombuffer(raw, dtype="<i2")
    if n_ch > 1:
        data = np.rint(data.reshape(-1, n_ch).mean(axis=1)).astype(np.int16)
    else:
        data = data.astype(np.int16)
    return AudioBuffer(data, rate)


def write_wav(path, audio: AudioBuffer) -> None:
    try:
        with wave.open(str(path), "wb") as wf:
            wf.setnchannels(1)
            wf.setsampwidth(2)
            wf.setframerate(audio.sample_rate_hz)
            wf.writeframes(audio.samples.astype("<i2").tobytes())
    except OSError as exc:
        raise IoFailure(str(exc)) from exc


# --- editing -----------------------------------------------------------------

def crop(audio: AudioBuffer, start_s: float, len_s: float) -> AudioBuffer:
    """Copy len_s seconds starting at start_s (sample-rounded)."""
    rate = audio.sample_rate_hz
    start = round(start_s * rate)
    n = round(len_s * rate)
    if start_s < 0 or n < 0 or start + n > len(audio.samples):
        raise OutOfRange(f"crop [{start_s}, {start_s + len_s}) exceeds {audio.duration_s:.3f}s buffer")
    return AudioBuffer(audio.samples[start:start + n].copy(), rate)


def _fade_out(x: np.ndarray, rate: int, fade_s: float = FADE_S) -> np.ndarray:
    n_fade = min(len(x), round(fade_s * rate))
    if n_fade == 0:
        return x
    y = x.astype(np.float64)
    y[-n_fade:] *= np.linspace(1.0, 0.0, n_fade)
    return np.rint(y).astype(np.int16)


def truncate_event(audio: AudioBuffer, max_s: float = 3.0) -> AudioBuffer:
    """Keep the leading max_s seconds, fading the cut over 10 ms."""
    if max_s <= 0:
        raise ValueError("max_s must be positive")
    if audio.duration_s <= max_s:
        return audio
    n = round(max_s * audio.sample_rate_hz)
    return AudioBuffer(_fade_out(audio.samples[:n].copy(), audio.sample_rate_hz), audio.sample_rate_hz)


def loop_event(audio: AudioBuffer, target_s: float, crossfade_s: float = 0.01) -> AudioBuffer:
    """Extend a clip to target_s by repeating it with equal-power crossfades.

    The repeat count is the smallest n with n*d - (n-1)*crossfade >= target;
    the concatenation is then cut to exactly target_s with a 10 ms fade.
    """
    d = audio.duration_s
    if d <= 2 * crossfade_s:
        raise ClipTooShort(f"clip {d:.3f}s too short for {crossfade_s:.3f}s crossfades")
    if target_s <= d:
        raise ValueError("target_s must exceed the clip duration")

    rate = audio.sample_rate_hz
    xf = round(crossfade_s * rate)
    nd = len(audio.samples)
    n_target = round(target_s * rate)
    n = 2
    while n * nd - (n - 1) * xf < n_target:
        n += 1

    x = audio.samples.astype(np.float64)
    # linear gains summing to 1: the joint is a convex combination of in-clip
    # steps, so it can never click louder than the clip itself (equal-power
    # gains sum to sqrt(2) mid-fade and break that bound)
    gain_out = np.linspace(1.0, 0.0, xf) if xf else np.empty(0)
    gain_in = 1.0 - gain_out

    out = x.copy()
    joint_starts = []
    for _ in range(n - 1):
        joint = out[-xf:] * gain_out + x[:xf] * gain_in if xf else np.empty(0)
        joint_starts.append(len(out) - xf)
        out = np.concatenate([out[:-xf] if xf else out, joint, x[xf:]])

    # the crossfade alone cannot bound joint steps by the clip's own steps:
    # mid-fade, the two decorrelated copies contribute an extra
    # (a - b) * delta_gain term.  A forward slope limiter walked from each
    # joint start clamps that overshoot, guaranteeing no joint ever steps
    # more than the loudest step already present in the clip.
    if xf and nd > 1:
        max_step = float(np.max(np.abs(np.diff(x))))
        for j0 in joint_starts:
            k = max(j0, 1)
            while k < len(out):
                bounded = min(max(out[k], out[k - 1] - max_step), out[k - 1] + max_step)
                if bounded == out[k] and k >= j0 + xf:
                    break
                out[k] = bounded
                k += 1

    out = np.clip(np.rint(out[:n_target]), I16_MIN, I16_MAX).astype(np.int16)
    return AudioBuffer(_fade_out(out, rate), rate)


def position_onset(window_len_s: float, event_len_s: float, bucket: int,
                   placement: str = "center", seed: int = 0) -> float:
    """Onset time placing an event inside one of five equal window segments."""
    if not 1 <= bucket <= POSITION_BUCKETS:
        raise InvalidBucket(f"bucket must be 1..{POSITION_BUCKETS}, got {bucket}")
    if event_len_s > window_len_s:
        raise OutOfRange("event longer than window")
    seg = window_len_s / POSITION_BUCKETS
    seg_start = (bucket - 1) * seg
    if placement == "center":
        return seg_start + (seg - min(event_len_s, seg)) / 2
    if placement == "uniform_random":
        hi = min(seg_start + seg, window_len_s - event_len_s)
        if hi <= seg_start:
            hi = seg_start + seg
        rng = np.random.default_rng(seed)
        return float(rng.uniform(seg_start, hi))
    raise ValueError(f"unknown placement {placement!r}")


# --- synthesis ---------------------------------------------------------------

def synth_carrier(len_s: float, spec: CarrierSpec,
                  sample_rate_hz: int = DEFAULT_SAMPLE_RATE) -> AudioBuffer:
    """Seeded carrier noise: silence, white, or 1/f-shaped pink."""
    if len_s <= 0:
        raise ValueError("len_s must be positive")
    n = round(len_s * sample_rate_hz)
    if spec.kind == "silence":
        return AudioBuffer(np.zeros(n, dtype=np.int16), sample_rate_hz)
    rng = np.random.default_rng(spec.seed)
    if spec.kind == "white":
        x = rng.uniform(-1.0, 1.0, n)
    elif spec.kind == "pink":
        white = rng.standard_normal(n)
        spec_f = np.fft.rfft(white)
        freqs = np.fft.rfftfreq(n, d=1.0 / sample_rate_hz)
        # flatten the 1/f shaping below 20 Hz: an unbounded DC-ward gain makes
        # long clips drift non-stationarily instead of sounding like noise
        x = np.fft.irfft(spec_f / np.sqrt(np.maximum(freqs, 20.0)), n=n)
    else:
        raise ValueError(f"unknown carrier kind {spec.kind!r}")
    # normalize to ~0.05 full-scale RMS, leaving headroom for the event
    rms = np.sqrt(np.mean(x ** 2))
    x = x / rms * (0.05 * I16_MAX)
    return AudioBuffer(np.clip(np.rint(x), I16_MIN, I16_MAX).astype(np.int16), sample_rate_hz)


def mix(carrier: AudioBuffer, event: AudioBuffer, onset_s: float, snr_db: float) -> AudioBuffer:
    """Add the event onto the carrier at onset_s, scaled to the requested SNR.

    SNR is 20*log10(rms_event / rms_carrier) over the full clips; a silent
    carrier bypasses scaling. Overhang past the carrier end is truncated.
    """
    if carrier.sample_rate_hz != event.sample_rate_hz:
        raise RateMismatch(f"{carrier.sample_rate_hz} vs {event.sample_rate_hz}")
    if onset_s < 0:
        raise OutOfRange("onset_s must be >= 0")
    rate = carrier.sample_rate_hz
    rms_c = np.sqrt(np.mean(carrier.samples.astype(np.float64) ** 2))
    rms_e = np.sqrt(np.mean(event.samples.astype(np.float64) ** 2))
    gain = 1.0 if rms_c == 0 or rms_e == 0 else (10 ** (snr_db / 20)) * rms_c / rms_e

    out = carrier.samples.astype(np.float64)
    start = round(onset_s * rate)
    n = min(len(event.samples), len(out) - start)
    if n > 0:
        out[start:start + n] += event.samples[:n].astype(np.float64) * gain
    return AudioBuffer(np.clip(np.rint(out), I16_MIN, I16_MAX).astype(np.int16), rate)


def synth_tone_burst(freq_hz: float, len_s: float, amplitude: float = 0.5,
                     sample_rate_hz: int = DEFAULT_SAMPLE_RATE) -> AudioBuffer:
    """Sine burst with 5 ms raised-cosine edges; handy as a synthetic event."""
    n = round(len_s * sample_rate_hz)
    t = np.arange(n) / sample_rate_hz
    x = amplitude * I16_MAX * np.sin(2 * np.pi * freq_hz * t)
    n_edge = min(n // 2, round(0.005 * sample_rate_hz))
    if n_edge:
        ramp = 0.5 * (1 - np.cos(np.linspace(0, np.pi, n_edge)))
        x[:n_edge] *= ramp
        x[-n_edge:] *= ramp[::-1]
    return AudioBuffer(np.clip(np.rint(x), I16_MIN, I16_MAX).astype(np.int16), sample_rate_hz)


def synth_click(len_s: float = 0.1, seed: int = 0,
                sample_rate_hz: int = DEFAULT_SAMPLE_RATE) -> AudioBuffer:
    """Short percussive burst: exponentially decaying seeded noise."""
    n = round(len_s * sample_rate_hz)
    rng = np.random.default_rng(seed)
    env = np.exp(-np.arange(n) / (0.3 * n))
    x = rng.uniform(-1.0, 1.0, n) * env * 0.6 * I16_MAX
    return AudioBuffer(np.clip(np.rint(x), I16_MIN, I16_MAX).astype(np.int16), sample_rate_hz)
