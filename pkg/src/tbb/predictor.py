"""Onset predictors and free-text timestamp parsing.

Three predictor families share one interface: a remote audio-QA HTTP
endpoint, deterministic simulators with injected bias (used as verification
oracles for the metrics), and a short-time-energy onset detector standing in
for a supervised sound-event-detection baseline.
"""

from __future__ import annotations

import base64
import io
import json
import re
import time
import wave
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from importlib import resources
from typing import Optional, Sequence

import numpy as np
import requests

from .errors import (
    EmptyClassName,
    HttpStatus,
    NoOnsetDetected,
    PayloadTooLarge,
    PredictorError,
    Timeout,
)
from .stimulus import AudioBuffer

ONSET_QUERY_TEMPLATE = (
    "At which second does the earliest {class_name} begin? "
    "Answer with a number of seconds."
)
CLASS_INVENTORY_TEMPLATE = "List every sound event class present in this clip."


@dataclass(frozen=True)
class Prompt:
    text: str
    mode: str            # onset_query | class_inventory


@dataclass
class PredictionRecord:
    stimulus_id: str
    raw_text: str
    predictor_name: str
    mode: str = "onset_query"
    parsed_onset_s: Optional[float] = None
    detected_classes: Optional[list[int]] = None
    latency_ms: Optional[int] = None

    def to_json(self) -> str:
        return json.dumps(self.__dict__, sort_keys=True)

    @classmethod
    def from_json(cls, line: str) -> "PredictionRecord":
        return cls(**json.loads(line))


@dataclass(frozen=True)
class SimulatorSpec:
    kind: str = "ideal"   # ideal | constant_bias | proportional_bias | positional_u | gaussian_noise
    b_s: float = 0.0
    alpha: float = 0.0
    u_amp_s: float = 0.0
    sigma_s: float = 0.0
    clamp: bool = True
    seed: int = 0

    def __post_init__(self):
        if self.sigma_s < 0:
            raise ValueError("sigma_s must be >= 0")


@dataclass(frozen=True)
class OnsetDetectorConfig:
    frame_s: float = 0.02
    hop_s: float = 0.01
    threshold_k: float = 3.0
    min_event_frames: int = 3

    def __post_init__(self):
        if not 0 < self.hop_s <= self.frame_s:
            raise ValueError("need 0 < hop_s <= frame_s")


@dataclass
class EndpointConfig:
    url: str
    model: str = "default"
    token: Optional[str] = None
    max_tokens: int = 64
    timeout_s: float = 30.0
    max_retries: int = 3
    backoff_s: float = 0.5
    max_audio_s: float = 300.0
    max_concurrency: int = 4


def build_prompt(class_name: str, mode: str) -> Prompt:
    if mode == "onset_query":
        if not class_name:
            raise EmptyClassName("onset_query needs a class name")
        return Prompt(ONSET_QUERY_TEMPLATE.format(class_name=class_name), mode)
    if mode == "class_inventory":
        return Prompt(CLASS_INVENTORY_TEMPLATE, mode)
    raise ValueError(f"unknown prompt mode {mode!r}")


# --- timestamp parsing -------------------------------------------------------

_NUM = r"\d+(?:\.\d+)?"
_MMSS_RE = re.compile(r"(?<![\d.:\-])(\d{1,3}):([0-5]?\d(?:\.\d+)?)(?![\d:])")
_RANGE_RE = re.compile(
    rf"(?:between\s+({_NUM})\s+and\s+{_NUM})|(?:(?<![\w.:\-])({_NUM})\s*(?:–|—|-|\bto\b)\s*{_NUM})",
    re.IGNORECASE,
)
_UNIT_RE = re.compile(rf"(?<![\w.:\-])({_NUM})\s*(?:s|secs?|seconds?)\b", re.IGNORECASE)
_BARE_RE = re.compile(rf"(?<![\w.:\-])({_NUM})(?![\w:])")


def parse_timestamp(raw_text: str) -> Optional[float]:
    """Extract an onset time in seconds from free-form model output.

    Priority: mm:ss(.fff), then a number with a seconds unit, then the first
    standalone number; range phrasings yield their lower bound. Returns None
    (never raises) when nothing non-negative can be extracted.
    """
    if not isinstance(raw_text, str) or not raw_text:
        return None
    try:
        m = _MMSS_RE.search(raw_text)
        if m:
            value = 60 * int(m.group(1)) + float(m.group(2))
            return value if value >= 0 else None
        m = _RANGE_RE.search(raw_text)
        if m:
            return float(m.group(1) or m.group(2))
        m = _UNIT_RE.search(raw_text)
        if m:
            return float(m.group(1))
        m = _BARE_RE.search(raw_text)
        if m:
            return float(m.group(1))
    except (ValueError, OverflowError):
        return None
    return None


def _default_synonyms() -> dict[str, list[str]]:
    with resources.files("tbb").joinpath("data/synonyms.json").open("r") as fh:
        return json.load(fh)


def parse_class_inventory(raw_text: str, label_map: dict[int, str],
                          synonyms: Optional[dict[str, list[str]]] = None) -> set[int]:
    """Case-insensitive substring match of label names (and synonyms)."""
    if not label_map:
        raise ValueError("label_map must be non-empty")
    if synonyms is None:
        synonyms = _default_synonyms()
    text = raw_text.lower()
    found: set[int] = set()
    for class_id, name in label_map.items():
        terms = [name] + synonyms.get(name, [])
        # word-bounded so "male speech" never fires inside "female speech"
        if any(re.search(r"\b" + re.escape(t.lower()) + r"\b", text) for t in terms):
            found.add(class_id)
    return found


# --- simulators --------------------------------------------------------------

def simulate(spec: SimulatorSpec, gt_onset_s: float, window_len_s: float,
             bucket: Optional[int] = None, sample_seed: Optional[int] = None) -> str:
    """Render a biased onset prediction as decimal text (3 fractional digits).

    The output goes through the normal text parser downstream, exercising the
    full pipeline. `sample_seed` overrides spec.seed for per-stimulus noise.
    """
    if not 0 <= gt_onset_s <= window_len_s:
        raise ValueError("gt_onset_s outside [0, window_len_s]")
    if spec.kind == "ideal":
        value = gt_onset_s
    elif spec.kind == "constant_bias":
        value = gt_onset_s + spec.b_s
    elif spec.kind == "proportional_bias":
        value = gt_onset_s - spec.alpha * window_len_s
    elif spec.kind == "positional_u":
        p = gt_onset_s / window_len_s if window_len_s > 0 else 0.0
        value = gt_onset_s + spec.u_amp_s * 2 * abs(p - 0.5)
    elif spec.kind == "gaussian_noise":
        rng = np.random.default_rng(spec.seed if sample_seed is None else sample_seed)
        value = gt_onset_s + float(rng.normal(0.0, spec.sigma_s))
    else:
        raise ValueError(f"unknown simulator kind {spec.kind!r}")
    if spec.clamp:
        value = min(max(value, 0.0), window_len_s)
    return f"{value:.3f}"


# --- energy onset detector ---------------------------------------------------

_QUANT_EPS = 1.0 / 32768.0


def detect_onset(audio: AudioBuffer, cfg: OnsetDetectorConfig = OnsetDetectorConfig()) -> float:
    """First time the short-time RMS rises and stays above the noise floor.

    Noise floor is the median RMS of the first five frames; onset is the start
    of the first run of min_event_frames frames with RMS above
    threshold_k * (floor + one quantization step).
    """
    if audio.duration_s < cfg.frame_s:
        raise ValueError("audio shorter than one analysis frame")
    rate = audio.sample_rate_hz
    frame = round(cfg.frame_s * rate)
    hop = round(cfg.hop_s * rate)
    x = audio.samples.astype(np.float64) / 32768.0
    if len(x) < frame:
        raise ValueError("audio shorter than one analysis frame")
    n_frames = 1 + (len(x) - frame) // hop
    idx = np.arange(frame)[None, :] + hop * np.arange(n_frames)[:, None]
    rms = np.sqrt(np.mean(x[idx] ** 2, axis=1))

    # leading-frame floor fails when the event starts at t=0; the whole-clip
    # median is a safe bound for sparse events, so take the smaller
    floor = min(float(np.median(rms[:5])), float(np.median(rms)))
    threshold = cfg.threshold_k * (floor + _QUANT_EPS)

    above = rms > threshold
    run = 0
    for i, hit in enumerate(above):
        run = run + 1 if hit else 0
        if run >= cfg.min_event_frames:
            return (i - cfg.min_event_frames + 1) * cfg.hop_s
    raise NoOnsetDetected("no frame run crossed the energy threshold")


# --- remote endpoint ---------------------------------------------------------

def _audio_to_wav_b64(audio: AudioBuffer) -> str:
    buf = io.BytesIO()
    with wave.open(buf, "wb") as wf:
        wf.setnchannels(1)
        wf.setsampwidth(2)
        wf.setframerate(audio.sample_rate_hz)
        wf.writeframes(audio.samples.astype("<i2").tobytes())
    return base64.b64encode(buf.getvalue()).decode("ascii")


def remote_predict(cfg: EndpointConfig, audio: AudioBuffer, prompt: Prompt) -> str:
    """POST one audio-QA request, retrying transient failures with backoff."""
    if audio.duration_s > cfg.max_audio_s:
        raise PayloadTooLarge(f"audio {audio.duration_s:.1f}s exceeds {cfg.max_audio_s:.1f}s limit")
    body = {
        "model": cfg.model,
        "prompt": prompt.text,
        "audio_b64": _audio_to_wav_b64(audio),
        "max_tokens": cfg.max_tokens,
    }
    headers = {"Content-Type": "application/json"}
    if cfg.token:
        headers["Authorization"] = f"Bearer {cfg.token}"

    last_exc: PredictorError = PredictorError("no attempt made")
    for attempt in range(cfg.max_retries + 1):
        if attempt:
            time.sleep(cfg.backoff_s * (2 ** (attempt - 1)))
        try:
            resp = requests.post(cfg.url, json=body, headers=headers, timeout=cfg.timeout_s)
        except requests.Timeout:
            last_exc = Timeout(f"no response within {cfg.timeout_s}s")
            continue
        except requests.RequestException as exc:
            last_exc = PredictorError(str(exc))
            continue
        if resp.status_code == 200:
            try:
                return resp.json()["text"]
            except (ValueError, KeyError) as exc:
                raise PredictorError(f"malformed response body: {exc}") from exc
        if resp.status_code == 413:
            raise PayloadTooLarge("endpoint rejected payload size")
        last_exc = HttpStatus(resp.status_code)
        if 400 <= resp.status_code < 500 and resp.status_code != 429:
            break    # client errors other than rate limiting are not transient
    raise last_exc


def remote_predict_batch(cfg: EndpointConfig, items: Sequence[tuple[str, AudioBuffer, Prompt]],
                         predictor_name: str = "remote") -> list[PredictionRecord]:
    """Run a batch with bounded concurrency; one record per item, in order.

    Failures become records with no parsed onset; no item is ever dropped.
    """
    def one(item: tuple[str, AudioBuffer, Prompt]) -> PredictionRecord:
        stimulus_id, audio, prompt = item
        t0 = time.monotonic()
        try:
            text = remote_predict(cfg, audio, prompt)
        except PredictorError as exc:
            return PredictionRecord(stimulus_id, f"<error: {exc}>", predictor_name,
                                    mode=prompt.mode,
                                    latency_ms=int(1000 * (time.monotonic() - t0)))
        rec = PredictionRecord(stimulus_id, text, predictor_name, mode=prompt.mode,
                               latency_ms=int(1000 * (time.monotonic() - t0)))
        if prompt.mode == "onset_query":
            rec.parsed_onset_s = parse_timestamp(text)
        return rec

    with ThreadPoolExecutor(max_workers=max(1, cfg.max_concurrency)) as pool:
        return list(pool.map(one, items))
