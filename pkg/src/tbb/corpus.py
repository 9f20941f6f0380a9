"""Bundled synthetic corpus: recordings with known event annotations.

Generates STARSS22-style metadata CSVs plus matching WAV audio in which each
event is a class-distinct tone burst over a quiet pink bed. Fully seeded, so
the corpus is byte-reproducible and usable as ground truth in tests and demos.
"""

from __future__ import annotations

import json
from pathlib import Path

import numpy as np

from . import stimulus
from .stimulus import AudioBuffer, CarrierSpec, derive_seed
from .timeline import DEFAULT_FRAME_HOP_S, Event, EventTimeline

LABEL_MAP = {
    0: "Female Speech",
    1: "Male Speech",
    2: "Laughter",
    3: "Clap",
    4: "Knock",
    5: "Door Closing",
    6: "Footsteps",
    7: "Telephone",
    8: "Bell",
}

SUSTAINED_CLASSES = (0, 1, 2)
CLASS_FREQS_HZ = {c: 300.0 + 150.0 * c for c in LABEL_MAP}


def _random_events(rng: np.random.Generator, duration_s: float,
                   hop_s: float) -> list[Event]:
    """Non-overlapping per-class events on the annotation frame grid."""
    events: list[Event] = []
    for class_id in LABEL_MAP:
        n_occurrences = int(rng.integers(2, 5))
        taken: list[tuple[float, float]] = []
        for _ in range(n_occurrences):
            if class_id in SUSTAINED_CLASSES:
                ev_len = float(rng.uniform(4.0, 8.0))
            else:
                ev_len = float(rng.uniform(0.3, 1.5))
            ev_len = max(hop_s, round(ev_len / hop_s) * hop_s)
            for _attempt in range(20):
                onset = round(float(rng.uniform(0.5, duration_s - ev_len - 0.5)) / hop_s) * hop_s
                if all(onset >= b or onset + ev_len <= a for a, b in taken):
                    taken.append((onset, onset + ev_len))
                    events.append(Event(class_id, onset, onset + ev_len))
                    break
    events.sort(key=lambda e: (e.onset_s, e.class_id))
    return events


def _events_to_csv(events: list[Event], hop_s: float) -> str:
    rows = []
    for ev in events:
        first = round(ev.onset_s / hop_s)
        last = round(ev.offset_s / hop_s) - 1
        for idx in range(first, last + 1):
            rows.append((idx, ev.class_id, 0))
    rows.sort()
    return "\n".join(f"{f},{c},{s}" for f, c, s in rows) + "\n"


def _render_audio(events: list[Event], duration_s: float, seed: int,
                  sample_rate_hz: int) -> AudioBuffer:
    bed = stimulus.synth_carrier(duration_s, CarrierSpec("pink", seed=seed), sample_rate_hz)
    out = bed.samples.astype(np.float64) * 0.2   # quiet bed under the events
    for ev in events:
        burst = stimulus.synth_tone_burst(
            CLASS_FREQS_HZ[ev.class_id], ev.offset_s - ev.onset_s,
            amplitude=0.3, sample_rate_hz=sample_rate_hz)
        start = round(ev.onset_s * sample_rate_hz)
        out[start:start + len(burst.samples)] += burst.samples
    clipped = np.clip(np.rint(out), stimulus.I16_MIN, stimulus.I16_MAX).astype(np.int16)
    return AudioBuffer(clipped, sample_rate_hz)


def make_corpus(out_dir, seed: int = 0, n_recordings: int = 2,
                duration_s: float = 130.0,
                sample_rate_hz: int = stimulus.DEFAULT_SAMPLE_RATE,
                hop_s: float = DEFAULT_FRAME_HOP_S,
                write_audio: bool = True) -> list[EventTimeline]:
    """Write meta/*.csv, audio/*.wav, and labels.json under out_dir."""
    out_dir = Path(out_dir)
    meta_dir = out_dir / "meta"
    audio_dir = out_dir / "audio"
    meta_dir.mkdir(parents=True, exist_ok=True)
    audio_dir.mkdir(parents=True, exist_ok=True)

    (out_dir / "labels.json").write_text(
        json.dumps({str(k): v for k, v in LABEL_MAP.items()}, indent=2, sort_keys=True) + "\n")

    timelines: list[EventTimeline] = []
    for i in range(n_recordings):
        rec_id = f"synth{i:02d}"
        rng = np.random.default_rng(derive_seed(seed, "corpus", rec_id))
        events = [Event(e.class_id, e.onset_s, e.offset_s, rec_id)
                  for e in _random_events(rng, duration_s, hop_s)]
        (meta_dir / f"{rec_id}.csv").write_text(_events_to_csv(events, hop_s))
        if write_audio:
            audio = _render_audio(events, duration_s, derive_seed(seed, "bed", rec_id),
                                  sample_rate_hz)
            stimulus.write_wav(audio_dir / f"{rec_id}.wav", audio)
        timelines.append(EventTimeline(rec_id, duration_s, tuple(events)))
    return timelines
