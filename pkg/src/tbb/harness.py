"""End-to-end experiment orchestration.

Runs the three studies (length sweep, duration, position) as file-backed
stages: synth writes a stimulus manifest (and WAVs), predict writes one
JSONL of prediction records per predictor, score joins predictions with
ground truth into samples, report renders the result tables and the
positional-bias plot. Each stage is resumable from the files of the previous
one, and all outputs are sorted before writing so bytes are reproducible.
"""

from __future__ import annotations

import json
import logging
import os
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import metrics, predictor, report, stimulus, timeline
from .errors import ConfigError, NoOnsetDetected, UnknownStimulusId
from .metrics import SampleResult
from .predictor import (
    EndpointConfig,
    OnsetDetectorConfig,
    PredictionRecord,
    SimulatorSpec,
    build_prompt,
    parse_class_inventory,
    parse_timestamp,
    remote_predict_batch,
)
from .stimulus import AudioBuffer, CarrierSpec, StimulusRecord, derive_seed, stimulus_id_for

log = logging.getLogger(__name__)

DEFAULT_WINDOW_LENGTHS = [5.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 90.0, 120.0]
TABLE2_WINDOW_LENGTHS = [5.0, 30.0, 60.0, 90.0, 120.0]
DEFAULT_POSITION_LENGTHS = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0]


@dataclass
class PredictorSpec:
    name: str
    kind: str = "simulator"              # simulator | detector | remote
    simulator: SimulatorSpec = field(default_factory=SimulatorSpec)
    detector: OnsetDetectorConfig = field(default_factory=OnsetDetectorConfig)
    endpoint: Optional[EndpointConfig] = None


@dataclass
class ExperimentConfig:
    experiment: str = "length_sweep"     # length_sweep | duration | position
    window_lengths_s: list = field(default_factory=lambda: list(DEFAULT_WINDOW_LENGTHS))
    position_lengths_s: list = field(default_factory=lambda: list(DEFAULT_POSITION_LENGTHS))
    duration_targets: tuple = (3.0, 8.0)     # (short_max_s, long_target_s)
    buckets: int = 5
    max_query_classes: int = 4
    predictors: list = field(default_factory=list)
    run_seed: int = 0
    carrier: CarrierSpec = field(default_factory=CarrierSpec)
    paths: dict = field(default_factory=dict)    # data_dir, out_dir
    repetitions: int = 20
    emit_audio: bool = True
    sample_rate_hz: int = stimulus.DEFAULT_SAMPLE_RATE
    placement: str = "center"
    duration_window_len_s: float = 10.0
    long_target_uniform: bool = False    # draw the long target in [7, 10] per stimulus

    def __post_init__(self):
        if not self.window_lengths_s or any(w <= 0 for w in self.window_lengths_s):
            raise ConfigError("window_lengths_s must be non-empty and positive")
        if self.buckets != stimulus.POSITION_BUCKETS:
            raise ConfigError("only 5 position buckets are supported")

    @property
    def data_dir(self) -> Path:
        return Path(self.paths.get("data_dir", "."))

    @property
    def out_dir(self) -> Path:
        return Path(self.paths.get("out_dir", "run"))


@dataclass
class RunArtifacts:
    manifest_path: Path
    predictions_paths: dict
    samples_path: Path
    report_dir: Path


def load_config(path) -> ExperimentConfig:
    """Load an ExperimentConfig from a TOML file mirroring its field names."""
    try:
        with open(path, "rb") as fh:
            raw = tomllib.load(fh)
    except (OSError, tomllib.TOMLDecodeError) as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    return config_from_dict(raw)


def config_from_dict(raw: dict) -> ExperimentConfig:
    raw = dict(raw)
    try:
        if "carrier" in raw:
            raw["carrier"] = CarrierSpec(**raw["carrier"])
        if "duration_targets" in raw:
            raw["duration_targets"] = tuple(raw["duration_targets"])
        preds = []
        for p in raw.get("predictors", []):
            p = dict(p)
            if "simulator" in p:
                p["simulator"] = SimulatorSpec(**p["simulator"])
            if "detector" in p:
                p["detector"] = OnsetDetectorConfig(**p["detector"])
            if "endpoint" in p:
                ep = dict(p["endpoint"])
                ep.setdefault("token", os.environ.get("TBB_API_TOKEN"))
                p["endpoint"] = EndpointConfig(**ep)
            preds.append(PredictorSpec(**p))
        raw["predictors"] = preds
        return ExperimentConfig(**raw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(str(exc)) from exc


# --- prepare -----------------------------------------------------------------

def load_label_map(path) -> dict[int, str]:
    with open(path) as fh:
        return {int(k): v for k, v in json.load(fh).items()}


def prepare(meta_dir, audio_dir, out_dir, label_map: Optional[dict[int, str]] = None,
            frame_hop_s: float = timeline.DEFAULT_FRAME_HOP_S,
            gap_tolerance_frames: int = 0) -> Path:
    """Parse metadata CSVs into merged event timelines (JSONL + durations)."""
    meta_dir, audio_dir, out_dir = Path(meta_dir), Path(audio_dir), Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    if label_map is None:
        labels_path = meta_dir.parent / "labels.json"
        label_map = load_label_map(labels_path) if labels_path.exists() else {}

    lines: list[str] = []
    durations: dict[str, float] = {}
    for csv_path in sorted(meta_dir.glob("*.csv")):
        rec_id = csv_path.stem
        frames = timeline.parse_frame_csv(csv_path.read_bytes())
        events = timeline.merge_frames(frames, frame_hop_s, gap_tolerance_frames, rec_id)
        wav_path = audio_dir / f"{rec_id}.wav"
        if wav_path.exists():
            durations[rec_id] = stimulus.read_wav(wav_path).duration_s
        else:
            durations[rec_id] = max(e.offset_s for e in events)
        tl = timeline.EventTimeline(rec_id, durations[rec_id], tuple(events))
        lines.append(timeline.timeline_to_jsonl(tl, label_map))

    events_path = out_dir / "events.jsonl"
    events_path.write_text("".join(lines))
    (out_dir / "durations.json").write_text(json.dumps(durations, sort_keys=True) + "\n")
    if label_map:
        (out_dir / "labels.json").write_text(
            json.dumps({str(k): v for k, v in label_map.items()}, indent=2, sort_keys=True) + "\n")
    return events_path


def _load_timelines(cfg: ExperimentConfig) -> tuple[list[timeline.EventTimeline], dict[int, str]]:
    data_dir = cfg.data_dir
    label_map = load_label_map(data_dir / "labels.json") if (data_dir / "labels.json").exists() else {}
    timelines = []
    for csv_path in sorted((data_dir / "meta").glob("*.csv")):
        rec_id = csv_path.stem
        frames = timeline.parse_frame_csv(csv_path.read_bytes())
        events = timeline.merge_frames(frames, recording_id=rec_id)
        wav_path = data_dir / "audio" / f"{rec_id}.wav"
        duration = (stimulus.read_wav(wav_path).duration_s if wav_path.exists()
                    else max(e.offset_s for e in events))
        timelines.append(timeline.EventTimeline(rec_id, duration, tuple(events)))
    if not timelines:
        raise ConfigError(f"no metadata CSVs under {data_dir / 'meta'}")
    return timelines, label_map


def _recording_audio(cfg: ExperimentConfig, rec_id: str) -> AudioBuffer:
    return stimulus.read_wav(cfg.data_dir / "audio" / f"{rec_id}.wav")


# --- synth -------------------------------------------------------------------

@dataclass
class EventClip:
    class_id: int
    length_s: float
    audio: Optional[AudioBuffer] = None


def build_event_clips(cfg: ExperimentConfig,
                      timelines: Sequence[timeline.EventTimeline]) -> dict[int, EventClip]:
    """First event occurrence per class, cropped from the source recordings."""
    clips: dict[int, EventClip] = {}
    for tl in timelines:
        audio = _recording_audio(cfg, tl.recording_id) if cfg.emit_audio else None
        for ev in tl.events:
            if ev.class_id in clips:
                continue
            length = ev.offset_s - ev.onset_s
            clip_audio = None
            if audio is not None:
                clip_audio = stimulus.crop(audio, ev.onset_s, length)
            clips[ev.class_id] = EventClip(ev.class_id, length, clip_audio)
    return clips


def _write_stimulus_audio(path: Path, audio: AudioBuffer) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    stimulus.write_wav(path, audio)


def _synth_length_sweep(cfg: ExperimentConfig, run_dir: Path,
                        timelines, label_map) -> list[StimulusRecord]:
    records: list[StimulusRecord] = []
    for tl in timelines:
        audio = _recording_audio(cfg, tl.recording_id) if cfg.emit_audio else None
        for length in cfg.window_lengths_s:
            for k, win in enumerate(timeline.segment_windows(tl.duration_s, length, tl.recording_id)):
                evs = timeline.events_in_window(tl, win)
                if not evs:
                    continue
                classes = timeline.select_query_classes(
                    evs, cfg.max_query_classes,
                    seed=derive_seed(cfg.run_seed, "qc", tl.recording_id, length, k))
                audio_path = ""
                if audio is not None:
                    rel = f"wavs/win_{tl.recording_id}_{length:g}_{k:03d}.wav"
                    _write_stimulus_audio(run_dir / rel,
                                          stimulus.crop(audio, win.start_s, length))
                    audio_path = rel
                for cls in sorted(classes):
                    sid = stimulus_id_for(cfg.run_seed, f"{tl.recording_id}#w{k}",
                                          "length_sweep", length, cls, None, "natural")
                    records.append(StimulusRecord(
                        stimulus_id=sid, audio_path=audio_path, window_len_s=float(length),
                        query_class=cls, gt_onset_s=timeline.earliest_onset(evs, cls),
                        duration_variant="natural", position_bucket=None,
                        experiment="length_sweep",
                        seed=derive_seed(cfg.run_seed, "stim", sid),
                        recording_id=tl.recording_id,
                        query_class_name=label_map.get(cls, str(cls))))
    return records


def _duration_variants(cfg: ExperimentConfig, clip: EventClip,
                       target_s: float) -> dict[str, tuple[float, Optional[AudioBuffer]]]:
    short_max, _ = cfg.duration_targets
    out: dict[str, tuple[float, Optional[AudioBuffer]]] = {}

    short_len = min(clip.length_s, short_max)
    short_audio = None
    if clip.audio is not None:
        short_audio = stimulus.truncate_event(clip.audio, short_max)
        short_len = short_audio.duration_s
    out["short"] = (short_len, short_audio)

    long_audio = None
    if clip.audio is not None:
        if clip.audio.duration_s > target_s:
            long_audio = stimulus.crop(clip.audio, 0.0, target_s)
        else:
            long_audio = stimulus.loop_event(clip.audio, target_s)
    out["long"] = (target_s, long_audio)
    return out


def _synth_duration(cfg: ExperimentConfig, run_dir: Path,
                    timelines, label_map) -> list[StimulusRecord]:
    clips = build_event_clips(cfg, timelines)
    expected = sorted(label_map) if label_map else sorted(clips)
    records: list[StimulusRecord] = []
    short_max, long_target = cfg.duration_targets
    window_len = cfg.duration_window_len_s
    for cls in expected:
        if cls not in clips:
            log.warning("duration study: class %s absent from corpus, skipped", cls)
            continue
        clip = clips[cls]
        for rep in range(cfg.repetitions):
            target = long_target
            if cfg.long_target_uniform:
                rng_t = np.random.default_rng(derive_seed(cfg.run_seed, "longtgt", cls, rep))
                target = float(rng_t.uniform(7.0, 10.0))
            for variant, (ev_len, ev_audio) in _duration_variants(cfg, clip, target).items():
                sid = stimulus_id_for(cfg.run_seed, f"clip:{cls}:r{rep}", "duration",
                                      window_len, cls, None, variant)
                rng = np.random.default_rng(derive_seed(cfg.run_seed, "onset", sid))
                hi = max(0.0, window_len - ev_len - 0.2)
                onset = float(rng.uniform(0.2, hi)) if hi > 0.2 else 0.0
                audio_path = ""
                if cfg.emit_audio and ev_audio is not None:
                    carrier = stimulus.synth_carrier(
                        window_len,
                        CarrierSpec(cfg.carrier.kind, cfg.carrier.snr_db,
                                    derive_seed(cfg.run_seed, "carrier", sid)),
                        cfg.sample_rate_hz)
                    mixed = stimulus.mix(carrier, ev_audio, onset, cfg.carrier.snr_db)
                    rel = f"wavs/{sid}.wav"
                    _write_stimulus_audio(run_dir / rel, mixed)
                    audio_path = rel
                records.append(StimulusRecord(
                    stimulus_id=sid, audio_path=audio_path, window_len_s=window_len,
                    query_class=cls, gt_onset_s=onset, duration_variant=variant,
                    position_bucket=None, experiment="duration",
                    seed=derive_seed(cfg.run_seed, "stim", sid),
                    recording_id=f"clip:{cls}",
                    query_class_name=label_map.get(cls, str(cls))))
    return records


def _synth_position(cfg: ExperimentConfig, run_dir: Path,
                    timelines, label_map) -> list[StimulusRecord]:
    clips = build_event_clips(cfg, timelines)
    classes = sorted(clips)
    records: list[StimulusRecord] = []
    short_max, _ = cfg.duration_targets
    for length in cfg.position_lengths_s:
        for bucket in range(1, cfg.buckets + 1):
            for rep in range(cfg.repetitions):
                cls = classes[rep % len(classes)]
                clip = clips[cls]
                ev_len = min(clip.length_s, short_max)
                ev_audio = clip.audio
                if ev_audio is not None and ev_audio.duration_s > short_max:
                    ev_audio = stimulus.truncate_event(ev_audio, short_max)
                    ev_len = ev_audio.duration_s
                sid = stimulus_id_for(cfg.run_seed, f"pos:{cls}:r{rep}", "position",
                                      length, cls, bucket, "natural")
                onset = stimulus.position_onset(
                    length, ev_len, bucket, cfg.placement,
                    seed=derive_seed(cfg.run_seed, "place", sid))
                audio_path = ""
                if cfg.emit_audio and ev_audio is not None:
                    carrier = stimulus.synth_carrier(
                        length,
                        CarrierSpec(cfg.carrier.kind, cfg.carrier.snr_db,
                                    derive_seed(cfg.run_seed, "carrier", sid)),
                        cfg.sample_rate_hz)
                    mixed = stimulus.mix(carrier, ev_audio, onset, cfg.carrier.snr_db)
                    rel = f"wavs/{sid}.wav"
                    _write_stimulus_audio(run_dir / rel, mixed)
                    audio_path = rel
                records.append(StimulusRecord(
                    stimulus_id=sid, audio_path=audio_path, window_len_s=float(length),
                    query_class=cls, gt_onset_s=onset, duration_variant="natural",
                    position_bucket=bucket, experiment="position",
                    seed=derive_seed(cfg.run_seed, "stim", sid),
                    recording_id=f"clip:{cls}",
                    query_class_name=label_map.get(cls, str(cls))))
    return records


def synth(cfg: ExperimentConfig) -> Path:
    """Build the stimulus manifest (and WAVs) for the configured experiment."""
    run_dir = cfg.out_dir
    run_dir.mkdir(parents=True, exist_ok=True)
    timelines, label_map = _load_timelines(cfg)
    if label_map:
        (run_dir / "labels.json").write_text(
            json.dumps({str(k): v for k, v in label_map.items()}, indent=2, sort_keys=True) + "\n")

    if cfg.experiment == "length_sweep":
        records = _synth_length_sweep(cfg, run_dir, timelines, label_map)
    elif cfg.experiment == "duration":
        records = _synth_duration(cfg, run_dir, timelines, label_map)
    elif cfg.experiment == "position":
        records = _synth_position(cfg, run_dir, timelines, label_map)
    else:
        raise ConfigError(f"unknown experiment {cfg.experiment!r}")

    records.sort(key=lambda r: r.stimulus_id)
    manifest_path = run_dir / "manifest.jsonl"
    manifest_path.write_text("".join(r.to_json() + "\n" for r in records))
    return manifest_path


def load_manifest(run_dir) -> list[StimulusRecord]:
    path = Path(run_dir) / "manifest.jsonl"
    return [StimulusRecord.from_json(line)
            for line in path.read_text().splitlines() if line.strip()]


# --- predict -----------------------------------------------------------------

def _predict_simulator(spec: PredictorSpec, stimuli: Sequence[StimulusRecord],
                       label_map: dict[int, str]) -> list[PredictionRecord]:
    out: list[PredictionRecord] = []
    for stim in stimuli:
        inv_raw = stim.query_class_name or str(stim.query_class)
        detected = (sorted(parse_class_inventory(inv_raw, label_map))
                    if label_map else [stim.query_class])
        out.append(PredictionRecord(stim.stimulus_id, inv_raw, spec.name,
                                    mode="class_inventory", detected_classes=detected))
        raw = predictor.simulate(spec.simulator, stim.gt_onset_s, stim.window_len_s,
                                 stim.position_bucket,
                                 sample_seed=derive_seed(spec.simulator.seed, "sim", stim.stimulus_id))
        out.append(PredictionRecord(stim.stimulus_id, raw, spec.name,
                                    mode="onset_query", parsed_onset_s=parse_timestamp(raw)))
    return out


def _predict_detector(spec: PredictorSpec, stimuli: Sequence[StimulusRecord],
                      run_dir: Path, label_map: dict[int, str]) -> list[PredictionRecord]:
    out: list[PredictionRecord] = []
    for stim in stimuli:
        inv_raw = stim.query_class_name or str(stim.query_class)
        detected = (sorted(parse_class_inventory(inv_raw, label_map))
                    if label_map else [stim.query_class])
        out.append(PredictionRecord(stim.stimulus_id, inv_raw, spec.name,
                                    mode="class_inventory", detected_classes=detected))
        if not stim.audio_path:
            out.append(PredictionRecord(stim.stimulus_id, "<no audio available>", spec.name,
                                        mode="onset_query"))
            continue
        audio = stimulus.read_wav(run_dir / stim.audio_path)
        try:
            raw = f"{predictor.detect_onset(audio, spec.detector):.3f}"
        except NoOnsetDetected:
            raw = "<no onset detected>"
        out.append(PredictionRecord(stim.stimulus_id, raw, spec.name,
                                    mode="onset_query", parsed_onset_s=parse_timestamp(raw)))
    return out


def _predict_remote(spec: PredictorSpec, stimuli: Sequence[StimulusRecord],
                    run_dir: Path, label_map: dict[int, str]) -> list[PredictionRecord]:
    if spec.endpoint is None:
        raise ConfigError(f"remote predictor {spec.name!r} needs an endpoint config")
    inv_items, onset_items = [], []
    for stim in stimuli:
        audio = stimulus.read_wav(run_dir / stim.audio_path)
        inv_items.append((stim.stimulus_id, audio, build_prompt("", "class_inventory")))
        onset_items.append((stim.stimulus_id, audio,
                            build_prompt(stim.query_class_name or str(stim.query_class),
                                         "onset_query")))
    inv_recs = remote_predict_batch(spec.endpoint, inv_items, spec.name)
    for rec in inv_recs:
        if label_map and not rec.raw_text.startswith("<error"):
            rec.detected_classes = sorted(parse_class_inventory(rec.raw_text, label_map))
    onset_recs = remote_predict_batch(spec.endpoint, onset_items, spec.name)
    return list(inv_recs) + list(onset_recs)


def predict(cfg: ExperimentConfig, predictor_name: str) -> Path:
    """Run one predictor over the manifest; two records per stimulus."""
    run_dir = cfg.out_dir
    specs = [p for p in cfg.predictors if p.name == predictor_name]
    if not specs:
        raise ConfigError(f"no predictor named {predictor_name!r} in config")
    spec = specs[0]
    stimuli = load_manifest(run_dir)
    labels_path = run_dir / "labels.json"
    label_map = load_label_map(labels_path) if labels_path.exists() else {}

    if spec.kind == "simulator":
        records = _predict_simulator(spec, stimuli, label_map)
    elif spec.kind == "detector":
        records = _predict_detector(spec, stimuli, run_dir, label_map)
    elif spec.kind == "remote":
        records = _predict_remote(spec, stimuli, run_dir, label_map)
    else:
        raise ConfigError(f"unknown predictor kind {spec.kind!r}")

    records.sort(key=lambda r: (r.stimulus_id, r.mode))
    path = run_dir / f"predictions_{predictor_name}.jsonl"
    path.write_text("".join(r.to_json() + "\n" for r in records))
    return path


# --- score -------------------------------------------------------------------

def join_samples(manifest: Sequence[StimulusRecord],
                 predictions: Sequence[PredictionRecord]
                 ) -> tuple[list[SampleResult], list[dict]]:
    """Inner-join predictions with ground truth; tally unparsable onsets."""
    by_id = {m.stimulus_id: m for m in manifest}
    inventory: dict[str, Optional[list[int]]] = {}
    onsets: list[PredictionRecord] = []
    for rec in predictions:
        if rec.stimulus_id not in by_id:
            raise UnknownStimulusId(rec.stimulus_id)
        if rec.mode == "class_inventory":
            inventory[rec.stimulus_id] = rec.detected_classes
        else:
            onsets.append(rec)

    samples: list[SampleResult] = []
    invalid: list[dict] = []
    for rec in onsets:
        stim = by_id[rec.stimulus_id]
        if rec.parsed_onset_s is None:
            invalid.append({
                "stimulus_id": stim.stimulus_id,
                "predictor_name": rec.predictor_name,
                "window_len_s": stim.window_len_s,
                "duration_variant": stim.duration_variant,
                "position_bucket": stim.position_bucket,
                "query_class": stim.query_class,
                "raw_text": rec.raw_text,
            })
            continue
        samples.append(SampleResult(
            stimulus_id=stim.stimulus_id,
            gt_onset_s=stim.gt_onset_s,
            pred_onset_s=rec.parsed_onset_s,
            window_len_s=stim.window_len_s,
            query_class=stim.query_class,
            duration_variant=stim.duration_variant,
            position_bucket=stim.position_bucket,
            category=metrics.categorize(stim.query_class, inventory.get(stim.stimulus_id)),
            predictor_name=rec.predictor_name))
    return samples, invalid


def score(run_dir) -> Path:
    """Join every predictions file in the run with the manifest."""
    run_dir = Path(run_dir)
    manifest = load_manifest(run_dir)
    all_samples: list[SampleResult] = []
    all_invalid: list[dict] = []
    for pred_path in sorted(run_dir.glob("predictions_*.jsonl")):
        predictions = [PredictionRecord.from_json(line)
                       for line in pred_path.read_text().splitlines() if line.strip()]
        samples, invalid = join_samples(manifest, predictions)
        all_samples.extend(samples)
        all_invalid.extend(invalid)

    all_samples.sort(key=lambda s: (s.predictor_name, s.stimulus_id))
    all_invalid.sort(key=lambda d: (d["predictor_name"], d["stimulus_id"]))
    samples_path = run_dir / "samples.jsonl"
    samples_path.write_text("".join(s.to_json() + "\n" for s in all_samples))
    (run_dir / "invalid.jsonl").write_text(
        "".join(json.dumps(d, sort_keys=True) + "\n" for d in all_invalid))
    return samples_path


def load_samples(run_dir) -> list[SampleResult]:
    path = Path(run_dir) / "samples.jsonl"
    return [SampleResult.from_json(line)
            for line in path.read_text().splitlines() if line.strip()]


def _load_invalid(run_dir) -> list[dict]:
    path = Path(run_dir) / "invalid.jsonl"
    if not path.exists():
        return []
    return [json.loads(line) for line in path.read_text().splitlines() if line.strip()]


# --- report ------------------------------------------------------------------

def _invalid_counts(invalid: list[dict], key_fn) -> dict[tuple, int]:
    counts: dict[tuple, int] = {}
    for d in invalid:
        k = key_fn(d)
        counts[k] = counts.get(k, 0) + 1
    return counts


def _report_length_sweep(run_dir: Path, samples, invalid, fmt: str) -> None:
    inv_by_pl = _invalid_counts(invalid, lambda d: (d["predictor_name"], d["window_len_s"]))
    header = ["predictor", "category", "window_len"] + list(report.SUMMARY_COLUMNS)
    rows = []
    split = metrics.aggregate(samples, ["predictor", "category", "window_len"])
    overall = metrics.aggregate(samples, ["predictor", "window_len"], inv_by_pl)
    for (pred, cat, length), summ in split.items():
        rows.append([pred, cat, length] + report.summary_row(summ))
    for (pred, length), summ in overall.items():
        rows.append([pred, "overall", length] + report.summary_row(summ))
    rows.sort(key=lambda r: (r[0], r[1], r[2]))
    ext = "csv" if fmt == "csv" else "md"
    (run_dir / f"report_exp1.{ext}").write_bytes(render_report_table(header, rows, fmt))

    split_header = ["predictor", "window_len"] + list(report.SUMMARY_COLUMNS)
    split_rows = [[pred, length] + report.summary_row(summ)
                  for (pred, length), summ in overall.items()]
    (run_dir / f"report_exp1_split.{ext}").write_bytes(
        render_report_table(split_header, split_rows, fmt))


def _report_duration(run_dir: Path, samples, invalid, fmt: str,
                     label_map: dict[int, str]) -> None:
    grouped = metrics.aggregate(samples, ["predictor", "query_class", "duration_variant"])
    header = ["predictor", "class_id", "class_name", "short_mae", "long_mae", "delta_long_short"]
    cells: dict[tuple, dict[str, metrics.MetricSummary]] = {}
    for (pred, cls, variant), summ in grouped.items():
        cells.setdefault((pred, cls), {})[variant] = summ
    rows = []
    for (pred, cls) in sorted(cells, key=lambda k: (k[0], k[1])):
        pair = cells[(pred, cls)]
        if "short" not in pair or "long" not in pair:
            log.warning("duration report: class %s lacks a variant for %s", cls, pred)
            continue
        rows.append([pred, cls, label_map.get(cls, str(cls)),
                     pair["short"].mae_s, pair["long"].mae_s,
                     metrics.delta_long_short(pair["short"], pair["long"])])
    ext = "csv" if fmt == "csv" else "md"
    (run_dir / f"report_exp2.{ext}").write_bytes(render_report_table(header, rows, fmt))


def _report_position(run_dir: Path, samples, invalid, fmt: str, plot: bool) -> None:
    grouped = metrics.aggregate(samples, ["predictor", "window_len", "position_bucket"])
    header = ["predictor", "window_len", "position_bucket"] + list(report.SUMMARY_COLUMNS)
    rows = [[pred, length, bucket] + report.summary_row(summ)
            for (pred, length, bucket), summ in grouped.items()]
    ext = "csv" if fmt == "csv" else "md"
    (run_dir / f"report_exp3.{ext}").write_bytes(render_report_table(header, rows, fmt))
    if plot:
        predictors = sorted({k[0] for k in grouped})
        plot_data = {}
        for (pred, length, bucket), summ in grouped.items():
            label = f"L={length:g}s" if len(predictors) == 1 else f"{pred} L={length:g}s"
            plot_data[(label, bucket)] = summ
        (run_dir / "position_bias.svg").write_bytes(report.render_position_plot(plot_data))


render_report_table = report.render_report


def render_reports(run_dir, fmt: str = "csv", plot: bool = False) -> Path:
    """Write the experiment-shaped report files from scored samples."""
    run_dir = Path(run_dir)
    samples = load_samples(run_dir)
    invalid = _load_invalid(run_dir)
    manifest = load_manifest(run_dir)
    experiment = manifest[0].experiment if manifest else "length_sweep"
    labels_path = run_dir / "labels.json"
    label_map = load_label_map(labels_path) if labels_path.exists() else {}

    if experiment == "length_sweep":
        _report_length_sweep(run_dir, samples, invalid, fmt)
    elif experiment == "duration":
        _report_duration(run_dir, samples, invalid, fmt, label_map)
    elif experiment == "position":
        _report_position(run_dir, samples, invalid, fmt, plot)
    return run_dir


# --- full runs ---------------------------------------------------------------

def _run_all(cfg: ExperimentConfig, plot: bool = False) -> RunArtifacts:
    manifest_path = synth(cfg)
    pred_paths = {p.name: predict(cfg, p.name) for p in cfg.predictors}
    samples_path = score(cfg.out_dir)
    render_reports(cfg.out_dir, plot=plot)
    return RunArtifacts(manifest_path, pred_paths, samples_path, cfg.out_dir)


def run_length_sweep(cfg: ExperimentConfig) -> RunArtifacts:
    cfg.experiment = "length_sweep"
    return _run_all(cfg)


def run_duration_study(cfg: ExperimentConfig) -> RunArtifacts:
    cfg.experiment = "duration"
    return _run_all(cfg)


def run_position_study(cfg: ExperimentConfig) -> RunArtifacts:
    cfg.experiment = "position"
    return _run_all(cfg, plot=True)
