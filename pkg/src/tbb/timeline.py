"""Event timelines: frame-level annotation parsing, merging, and windowing.

Annotations arrive as per-frame CSV rows (frame index, class id, source id).
Adjacent frames of the same class/source merge into contiguous events; long
recordings are cut into fixed non-overlapping windows for evaluation.
"""

from __future__ import annotations

import json
import random
from dataclasses import dataclass
from typing import IO, Iterable, Sequence

from .errors import ClassAbsent, EmptyInput, InvalidLength, MalformedRow

DEFAULT_FRAME_HOP_S = 0.1


@dataclass(frozen=True)
class FrameAnnotation:
    frame_index: int
    class_id: int
    source_id: int


@dataclass(frozen=True)
class Event:
    class_id: int
    onset_s: float
    offset_s: float
    recording_id: str = ""

    def __post_init__(self):
        if self.offset_s <= self.onset_s:
            raise ValueError("offset_s must exceed onset_s")


@dataclass(frozen=True)
class Window:
    recording_id: str
    start_s: float
    length_s: float

    @property
    def end_s(self) -> float:
        return self.start_s + self.length_s


@dataclass(frozen=True)
class EventTimeline:
    recording_id: str
    duration_s: float
    events: tuple[Event, ...]


def parse_frame_csv(raw: bytes | str | IO) -> list[FrameAnnotation]:
    """Parse STARSS22-style metadata rows `frame,class,source[,...]`.

    Extra columns (azimuth/elevation) are ignored. Raises MalformedRow on a
    non-integer required column, EmptyInput when no data rows are present.
    """
    if isinstance(raw, bytes):
        text = raw.decode("utf-8")
    elif isinstance(raw, str):
        text = raw
    else:
        data = raw.read()
        text = data.decode("utf-8") if isinstance(data, bytes) else data

    out: list[FrameAnnotation] = []
    for line_no, line in enumerate(text.splitlines(), start=1):
        if not line.strip():
            continue
        cols = [c.strip() for c in line.split(",")]
        if len(cols) < 3:
            raise MalformedRow(line_no, "expected at least 3 columns")
        try:
            frame, cls, src = int(cols[0]), int(cols[1]), int(cols[2])
        except ValueError:
            raise MalformedRow(line_no, "non-integer column") from None
        if frame < 0:
            raise MalformedRow(line_no, "negative frame index")
        out.append(FrameAnnotation(frame, cls, src))
    if not out:
        raise EmptyInput("no annotation rows")
    return out


def merge_frames(
    frames: Iterable[FrameAnnotation],
    frame_hop_s: float = DEFAULT_FRAME_HOP_S,
    gap_tolerance_frames: int = 0,
    recording_id: str = "",
) -> list[Event]:
    """Merge per-frame annotations into contiguous events.

    Per (class, source), frames whose index gap is at most 1 + tolerance form
    one event spanning [first*hop, (last+1)*hop). Overlapping same-class
    events from distinct sources are then unioned so each class has a single
    non-overlapping event timeline.
    """
    if frame_hop_s <= 0:
        raise InvalidLength("frame_hop_s must be positive")
    if gap_tolerance_frames < 0:
        raise ValueError("gap_tolerance_frames must be >= 0")

    by_key: dict[tuple[int, int], list[int]] = {}
    for f in frames:
        by_key.setdefault((f.class_id, f.source_id), []).append(f.frame_index)

    def at(frame_index: int) -> float:
        # round away float artifacts like 3 * 0.1 = 0.30000000000000004
        return round(frame_index * frame_hop_s, 9)

    raw: list[Event] = []
    for (cls, _src), idxs in by_key.items():
        idxs = sorted(set(idxs))
        run_start = idxs[0]
        prev = idxs[0]
        for i in idxs[1:]:
            if i - prev > 1 + gap_tolerance_frames:
                raw.append(Event(cls, at(run_start), at(prev + 1), recording_id))
                run_start = i
            prev = i
        raw.append(Event(cls, at(run_start), at(prev + 1), recording_id))

    # union overlapping or touching events of the same class (multi-source);
    # touching ones must coalesce so the result is a fixed point of
    # frame-expansion followed by another merge
    merged: list[Event] = []
    by_class: dict[int, list[Event]] = {}
    for ev in raw:
        by_class.setdefault(ev.class_id, []).append(ev)
    for cls, evs in by_class.items():
        evs.sort(key=lambda e: e.onset_s)
        cur = evs[0]
        for ev in evs[1:]:
            if ev.onset_s <= cur.offset_s:
                cur = Event(cls, cur.onset_s, max(cur.offset_s, ev.offset_s), recording_id)
            else:
                merged.append(cur)
                cur = ev
        merged.append(cur)

    merged.sort(key=lambda e: (e.onset_s, e.class_id))
    return merged


def segment_windows(duration_s: float, window_len_s: float, recording_id: str = "") -> list[Window]:
    """Cut [0, duration) into equal non-overlapping windows; partial tail dropped."""
    if window_len_s <= 0:
        raise InvalidLength("window_len_s must be positive")
    if duration_s < 0:
        raise InvalidLength("duration_s must be non-negative")
    n = int(duration_s // window_len_s)
    return [Window(recording_id, k * window_len_s, window_len_s) for k in range(n)]


def events_in_window(timeline: EventTimeline, window: Window) -> list[Event]:
    """Events overlapping the window, clipped and rebased to window-relative time."""
    out: list[Event] = []
    for ev in timeline.events:
        lo = max(ev.onset_s, window.start_s)
        hi = min(ev.offset_s, window.end_s)
        if hi > lo:
            out.append(Event(ev.class_id, lo - window.start_s, hi - window.start_s, ev.recording_id))
    return out


def earliest_onset(events: Sequence[Event], class_id: int) -> float:
    onsets = [ev.onset_s for ev in events if ev.class_id == class_id]
    if not onsets:
        raise ClassAbsent(class_id)
    return min(onsets)


def select_query_classes(events: Sequence[Event], max_classes: int = 4, seed: int = 0) -> list[int]:
    """Draw up to max_classes distinct classes, deterministically under seed."""
    if max_classes < 1:
        raise ValueError("max_classes must be >= 1")
    classes = sorted({ev.class_id for ev in events})
    if not classes:
        return []
    k = min(max_classes, len(classes))
    return random.Random(seed).sample(classes, k)


def frames_from_events(events: Sequence[Event], frame_hop_s: float = DEFAULT_FRAME_HOP_S) -> list[FrameAnnotation]:
    """Expand events back to per-frame annotations (inverse of merge_frames)."""
    out: list[FrameAnnotation] = []
    for ev in events:
        first = round(ev.onset_s / frame_hop_s)
        last = round(ev.offset_s / frame_hop_s) - 1
        for idx in range(first, last + 1):
            out.append(FrameAnnotation(idx, ev.class_id, 0))
    return out


def timeline_to_jsonl(timeline: EventTimeline, label_map: dict[int, str]) -> str:
    """Serialize one timeline as JSON Lines, one object per event."""
    lines = []
    for ev in timeline.events:
        lines.append(json.dumps({
            "recording_id": timeline.recording_id,
            "class_id": ev.class_id,
            "class_name": label_map.get(ev.class_id, str(ev.class_id)),
            "onset_s": ev.onset_s,
            "offset_s": ev.offset_s,
        }, sort_keys=True))
    return "\n".join(lines) + ("\n" if lines else "")


def timelines_from_jsonl(text: str, durations: dict[str, float] | None = None) -> list[EventTimeline]:
    """Parse event JSON Lines back into per-recording timelines."""
    by_rec: dict[str, list[Event]] = {}
    for line in text.splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        by_rec.setdefault(obj["recording_id"], []).append(
            Event(int(obj["class_id"]), float(obj["onset_s"]), float(obj["offset_s"]), obj["recording_id"])
        )
    out = []
    for rec_id in sorted(by_rec):
        evs = sorted(by_rec[rec_id], key=lambda e: (e.onset_s, e.class_id))
        dur = max(e.offset_s for e in evs)
        if durations and rec_id in durations:
            dur = durations[rec_id]
        out.append(EventTimeline(rec_id, dur, tuple(evs)))
    return out
