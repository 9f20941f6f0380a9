"""Length-sweep walkthrough: recover an injected constant bias per window length.

Builds a small synthetic corpus, runs the full pipeline (synth -> predict ->
score -> report) with two simulated predictors, and prints the per-length
signed bias each one leaves in the tables.  The constant_bias simulator
answers 3 s early everywhere; the proportional one drifts with window length.
"""

import tempfile
from pathlib import Path

from tbb import corpus, harness, metrics
from tbb.harness import ExperimentConfig, PredictorSpec
from tbb.predictor import SimulatorSpec


def main():
    root = Path(tempfile.mkdtemp(prefix="tbb_demo_"))
    print(f"working under {root}")

    print("1) generating a 2-recording synthetic corpus ...")
    corpus.make_corpus(root / "data", seed=7, n_recordings=2, duration_s=130.0)

    cfg = ExperimentConfig(
        experiment="length_sweep",
        window_lengths_s=[5.0, 10.0, 20.0, 30.0, 60.0, 120.0],
        predictors=[
            PredictorSpec("early3", "simulator",
                          SimulatorSpec("constant_bias", b_s=-3.0, clamp=True)),
            PredictorSpec("drift", "simulator",
                          SimulatorSpec("proportional_bias", alpha=0.1, clamp=True)),
        ],
        run_seed=42,
        emit_audio=False,          # simulators never open the WAVs
        paths={"data_dir": str(root / "data"), "out_dir": str(root / "run")},
    )

    print("2) running synth -> predict -> score -> report ...")
    artifacts = harness.run_length_sweep(cfg)
    samples = harness.load_samples(artifacts.report_dir)

    print("3) per-length signed bias (TBI) and MAE:\n")
    grouped = metrics.aggregate(samples, ["predictor", "window_len"])
    print(f"{'predictor':<10}{'L (s)':>8}{'n':>6}{'TBI (s)':>10}{'MAE (s)':>10}")
    for (name, length), summ in grouped.items():
        print(f"{name:<10}{length:>8g}{summ.n:>6}{summ.tbi_s:>10.3f}{summ.mae_s:>10.3f}")

    print(f"\nfull tables: {artifacts.report_dir / 'report_exp1.csv'}")
    print("note how 'early3' converges to -3.000 as L grows (clamping at zero")
    print("shrinks it in short windows), while 'drift' grows linearly with L.")


if __name__ == "__main__":
    main()
