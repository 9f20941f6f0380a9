"""Acceptance gate: end-to-end checks that the harness recovers known answers.

Each test prints one [PASS]/[FAIL] line (visible with ``pytest -s``); the
assertions carry the stated tolerances, so a red line always comes with a
failing test.
"""

import contextlib
import json
import math
import time
from fractions import Fraction

import numpy as np
import pytest

from tbb import corpus, harness, metrics, stimulus, timeline
from tbb.harness import ExperimentConfig, PredictorSpec
from tbb.metrics import SampleResult
from tbb.predictor import SimulatorSpec, detect_onset, parse_timestamp
from tbb.stimulus import AudioBuffer, CarrierSpec, loop_event, mix, position_onset, synth_carrier, synth_click
from tbb.timeline import FrameAnnotation, frames_from_events, merge_frames, segment_windows

from test_predictor import PARSER_CORPUS

DEFAULT_GRID = [5.0, 10.0, 20.0, 30.0, 40.0, 50.0, 60.0, 90.0, 120.0]


@contextlib.contextmanager
def criterion(number, description):
    try:
        yield
    except BaseException:
        print(f"[FAIL] criterion {number:2d}: {description}")
        raise
    print(f"[PASS] criterion {number:2d}: {description}")


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    root = tmp_path_factory.mktemp("corpus")
    corpus.make_corpus(root, seed=20, n_recordings=2, duration_s=130.0)
    return root


def make_sample(pred, gt, window=60.0, sid=None, **kw):
    return SampleResult(stimulus_id=sid or f"{pred}:{gt}", gt_onset_s=gt,
                        pred_onset_s=pred, window_len_s=window, query_class=0, **kw)


def sweep_cfg(corpus_dir, out_dir, predictors):
    return ExperimentConfig(
        experiment="length_sweep", window_lengths_s=list(DEFAULT_GRID),
        predictors=predictors, run_seed=101,
        paths={"data_dir": str(corpus_dir), "out_dir": str(out_dir)},
        emit_audio=False)


@pytest.fixture(scope="module")
def constant_bias_run(corpus_dir, tmp_path_factory):
    out = tmp_path_factory.mktemp("c2")
    cfg = sweep_cfg(corpus_dir, out, [
        PredictorSpec("cbias", "simulator", SimulatorSpec("constant_bias", b_s=-5.0, clamp=False)),
        PredictorSpec("gauss", "simulator", SimulatorSpec("gaussian_noise", sigma_s=1.0, clamp=True)),
    ])
    t0 = time.perf_counter()
    artifacts = harness.run_length_sweep(cfg)
    elapsed = time.perf_counter() - t0
    samples = harness.load_samples(artifacts.report_dir)
    invalid = [json.loads(line) for line in
               (artifacts.report_dir / "invalid.jsonl").read_text().splitlines()]
    manifest = harness.load_manifest(artifacts.report_dir)
    return samples, invalid, manifest, elapsed


class TestAcceptance:
    def test_01_metric_oracle_equivalence(self):
        rng = np.random.default_rng(1)
        preds = rng.uniform(0.0, 60.0, 1000)
        gts = rng.uniform(0.0, 60.0, 1000)
        samples = [make_sample(float(p), float(g), sid=str(i))
                   for i, (p, g) in enumerate(zip(preds, gts))]
        t0 = time.perf_counter()
        got_tbi = metrics.tbi(samples)
        got_mae = metrics.mae(samples)
        # exact-rational oracle: doubles are rationals, Fraction sums exactly
        exact_tbi = sum(Fraction(float(p)) - Fraction(float(g))
                        for p, g in zip(preds, gts)) / 1000
        exact_mae = sum(abs(Fraction(float(p)) - Fraction(float(g)))
                        for p, g in zip(preds, gts)) / 1000
        elapsed = time.perf_counter() - t0
        with criterion(1, "tbi/mae match exact-summation oracle (rel err <= 1e-12, < 1 s)"):
            assert abs(Fraction(got_tbi) - exact_tbi) <= abs(exact_tbi) * Fraction(1, 10**12)
            assert abs(Fraction(got_mae) - exact_mae) <= exact_mae * Fraction(1, 10**12)
            assert elapsed < 1.0

    def test_02_injected_constant_bias(self, constant_bias_run):
        samples, invalid, manifest, elapsed = constant_bias_run
        mine = [s for s in samples if s.predictor_name == "cbias"]
        by_len = {}
        for s in mine:
            by_len.setdefault(s.window_len_s, []).append(s)
        with criterion(2, "constant_bias b=-5: TBI=-5.000 +/- 0.001, MAE=5.000 +/- 0.001 per length cell (< 2 min)"):
            # lengths up to 5 s never contain an onset >= 5 s, so every
            # prediction there renders negative, is unparsable, and the cell
            # holds no valid samples -- it must be fully accounted as invalid
            n_l5 = sum(1 for m in manifest if m.window_len_s == 5.0)
            n_l5_invalid = sum(1 for d in invalid
                               if d["predictor_name"] == "cbias" and d["window_len_s"] == 5.0)
            assert 5.0 not in by_len and n_l5_invalid == n_l5 > 0
            assert set(by_len) == set(DEFAULT_GRID) - {5.0}
            for length, cell in by_len.items():
                assert metrics.tbi(cell) == pytest.approx(-5.0, abs=1e-3)
                assert metrics.mae(cell) == pytest.approx(5.0, abs=1e-3)
            assert elapsed < 120.0

    def test_03_length_scaling(self, corpus_dir, tmp_path):
        cfg = sweep_cfg(corpus_dir, tmp_path / "c3", [
            PredictorSpec("prop", "simulator", SimulatorSpec("proportional_bias", alpha=0.2, clamp=False)),
        ])
        artifacts = harness.run_length_sweep(cfg)
        samples = harness.load_samples(artifacts.report_dir)
        by_len = {}
        for s in samples:
            by_len.setdefault(s.window_len_s, []).append(s)
        with criterion(3, "proportional_bias alpha=0.2: per-length MAE = 0.2*L +/- 0.001 over default grid"):
            assert set(by_len) == set(DEFAULT_GRID)
            maes = {length: metrics.mae(cell) for length, cell in sorted(by_len.items())}
            for length, value in maes.items():
                assert value == pytest.approx(0.2 * length, abs=1e-3)
            assert list(maes.values()) == sorted(maes.values())  # monotone growth exposed

    def test_04_positional_u_shape(self, corpus_dir, tmp_path):
        lengths = [10.0, 20.0, 30.0, 40.0, 50.0, 60.0]
        cfg = ExperimentConfig(
            experiment="position", position_lengths_s=lengths,
            predictors=[PredictorSpec("ushape", "simulator",
                                      SimulatorSpec("positional_u", u_amp_s=2.0, clamp=False))],
            run_seed=104, repetitions=3, emit_audio=False,
            paths={"data_dir": str(corpus_dir), "out_dir": str(tmp_path / "c4")})
        artifacts = harness.run_position_study(cfg)
        samples = harness.load_samples(artifacts.report_dir)
        grouped = metrics.aggregate(samples, ["window_len", "position_bucket"])
        with criterion(4, "positional_u u_amp=2: nmad(b1) > nmad(b3) and nmad(b5) > nmad(b3) per length"):
            for length in lengths:
                nmad = {b: grouped[(length, b)].normalized_mad for b in (1, 3, 5)}
                assert nmad[1] > nmad[3]
                assert nmad[5] > nmad[3]

    def test_05_energy_detector_baseline(self):
        rng = np.random.default_rng(5)
        samples = []
        for i in range(100):
            length = float(rng.uniform(5.0, 60.0))
            onset = float(rng.uniform(0.5, length - 0.5))
            carrier = synth_carrier(length, CarrierSpec("pink", seed=500 + i))
            audio = mix(carrier, synth_click(seed=900 + i), onset, 20.0)
            samples.append(make_sample(detect_onset(audio), onset, window=length, sid=str(i)))
        with criterion(5, "energy detector on 100 click-in-pink stimuli: MAE <= 0.10 s, |TBI| <= 0.05 s"):
            assert metrics.mae(samples) <= 0.10
            assert abs(metrics.tbi(samples)) <= 0.05

    def test_06_early_late_bookkeeping(self, constant_bias_run):
        samples, _, _, _ = constant_bias_run
        cells = {}
        for s in samples:
            cells.setdefault((s.predictor_name, s.window_len_s), []).append(s)
        with criterion(6, "strict early/late partition reconstructs n*TBI to 1e-9 in every cell; zeros count on both sides"):
            for cell in cells.values():
                neg = [s.bias_s for s in cell if s.bias_s < 0]
                nonneg = [s.bias_s for s in cell if s.bias_s >= 0]
                total = (len(neg) * (math.fsum(neg) / len(neg)) if neg else 0.0) + \
                        (len(nonneg) * (math.fsum(nonneg) / len(nonneg)) if nonneg else 0.0)
                assert abs(total - len(cell) * metrics.tbi(cell)) <= 1e-9
            zeros = [make_sample(1.0, 1.0, sid="z1"), make_sample(2.0, 2.0, sid="z2"),
                     make_sample(3.0, 4.0, sid="z3")]
            n_early, _, n_late, _ = metrics.early_late_split(zeros)
            assert (n_early, n_late) == (3, 2)

    def test_07_delta_column(self):
        def summ(mae_s):
            return metrics.MetricSummary(4, 0.0, 0.0, mae_s, 0.0, 0, None, 4, 0.0, 0.0)
        with criterion(7, "delta operation reproduces (3.237, 4.342) -> +1.105 and (4.987, 7.502) -> +2.515"):
            assert metrics.delta_long_short(summ(3.237), summ(4.342)) == pytest.approx(1.105, abs=1e-12)
            assert metrics.delta_long_short(summ(4.987), summ(7.502)) == pytest.approx(2.515, abs=1e-12)

    def test_08_stimulus_invariant_suites(self):
        rng = np.random.default_rng(8)
        n_cases = 10_000

        with criterion(8, "10,000-case suites: merge idempotence, window disjointness, "
                          "loop duration, loop smoothness, bucket containment -- zero violations"):
            for _ in range(n_cases):  # merge idempotence
                frames = [FrameAnnotation(int(i), int(rng.integers(0, 3)), int(rng.integers(0, 2)))
                          for i in rng.integers(0, 40, size=rng.integers(1, 15))]
                events = merge_frames(frames)
                again = merge_frames(frames_from_events(events))
                assert again == events

            for _ in range(n_cases):  # window disjointness
                duration = float(rng.uniform(0.0, 400.0))
                length = float(rng.uniform(0.5, 130.0))
                wins = segment_windows(duration, length)
                assert len(wins) == int(duration // length)
                for a, b in zip(wins, wins[1:]):
                    assert b.start_s == pytest.approx(a.end_s, abs=1e-9)
                if wins:
                    assert wins[0].start_s == 0.0
                    assert wins[-1].end_s <= duration + 1e-9

            rate = 2000  # loop duration + joint smoothness on the same draws
            n_fade = round(0.01 * rate)
            for _ in range(n_cases):
                clip_n = int(rng.integers(3 * n_fade, 12 * n_fade))
                clip = AudioBuffer(
                    rng.integers(-20000, 20000, clip_n).astype(np.int16), rate)
                target_s = clip.duration_s * float(rng.uniform(1.3, 5.0))
                out = loop_event(clip, target_s)
                assert abs(len(out.samples) - target_s * rate) <= 1
                max_step_clip = int(np.max(np.abs(np.diff(clip.samples.astype(np.int64)))))
                steps = np.abs(np.diff(out.samples[:-n_fade].astype(np.int64)))
                assert int(steps.max()) <= max_step_clip + 1

            for _ in range(n_cases):  # position-in-bucket containment
                window = float(rng.uniform(1.0, 120.0))
                event = float(rng.uniform(0.0, window))
                bucket = int(rng.integers(1, 6))
                placement = ("center", "uniform_random")[int(rng.integers(0, 2))]
                onset = position_onset(window, event, bucket, placement,
                                       seed=int(rng.integers(0, 2**32)))
                seg = window / 5
                assert (bucket - 1) * seg - 1e-9 <= onset <= bucket * seg + 1e-9
                assert 0.0 <= onset <= window

    def test_09_parser_corpus_and_fuzz(self):
        rng = np.random.default_rng(9)
        with criterion(9, "25 pinned phrasings parse as expected; 100,000-case byte fuzz: no crash, never negative"):
            assert len(PARSER_CORPUS) == 25
            for text, expected in PARSER_CORPUS:
                assert parse_timestamp(text) == expected
            for _ in range(100_000):
                blob = rng.integers(0, 256, size=int(rng.integers(0, 60))).astype(np.uint8)
                out = parse_timestamp(blob.tobytes().decode("latin-1"))
                assert out is None or out >= 0

    def test_10_full_run_determinism(self, corpus_dir, tmp_path):
        def run(out):
            cfg = ExperimentConfig(
                experiment="position", position_lengths_s=[10.0, 20.0],
                predictors=[
                    PredictorSpec("energy", "detector"),
                    PredictorSpec("ideal", "simulator", SimulatorSpec("ideal", clamp=False)),
                ],
                run_seed=110, repetitions=2, emit_audio=True,
                carrier=CarrierSpec("pink", 20.0, 3),
                paths={"data_dir": str(corpus_dir), "out_dir": str(out)})
            return harness.run_position_study(cfg).report_dir

        t0 = time.perf_counter()
        dir_a = run(tmp_path / "a")
        dir_b = run(tmp_path / "b")
        elapsed = time.perf_counter() - t0
        with criterion(10, "two identically seeded runs: byte-identical manifest, WAVs, CSV, SVG (< 5 min)"):
            rel_a = sorted(p.relative_to(dir_a) for p in dir_a.rglob("*") if p.is_file())
            rel_b = sorted(p.relative_to(dir_b) for p in dir_b.rglob("*") if p.is_file())
            assert rel_a == rel_b
            names = {p.name for p in rel_a}
            assert {"manifest.jsonl", "report_exp3.csv", "position_bias.svg"} <= names
            assert any(p.suffix == ".wav" for p in rel_a)
            for rel in rel_a:
                assert (dir_a / rel).read_bytes() == (dir_b / rel).read_bytes(), rel
            assert elapsed < 300.0
