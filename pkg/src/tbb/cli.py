"""Command-line pipeline: prepare -> synth -> predict -> score -> report."""

from __future__ import annotations

import argparse
import logging
import sys

from . import corpus, harness
from .errors import ConfigError, TbbError

EXIT_OK = 0
EXIT_STAGE_FAILURE = 1
EXIT_CONFIG_ERROR = 2


def _build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="tbb",
                                     description="Temporal-bias benchmark for audio onset localization")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("prepare", help="merge frame annotations into event timelines")
    p.add_argument("--meta", required=True, help="directory of frame-annotation CSVs")
    p.add_argument("--audio", required=True, help="directory of recording WAVs")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--labels", help="label map JSON {class_id: name}")
    p.add_argument("--hop", type=float, default=0.1, help="annotation frame hop in seconds")
    p.add_argument("--gap-tolerance", type=int, default=0, help="frame gap bridged when merging")

    p = sub.add_parser("synth", help="synthesize stimuli and write the manifest")
    p.add_argument("--config", required=True)

    p = sub.add_parser("predict", help="run one predictor over the manifest")
    p.add_argument("--config", required=True)
    p.add_argument("--predictor", required=True)

    p = sub.add_parser("score", help="join predictions with ground truth")
    p.add_argument("--run", required=True, help="run directory")

    p = sub.add_parser("report", help="render report tables (and plot)")
    p.add_argument("--run", required=True)
    p.add_argument("--format", choices=["csv", "markdown"], default="csv")
    p.add_argument("--plot", action="store_true")

    p = sub.add_parser("corpus", help="generate the bundled synthetic corpus")
    p.add_argument("--out", required=True)
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--recordings", type=int, default=2)
    p.add_argument("--duration", type=float, default=130.0)
    p.add_argument("--no-audio", action="store_true", help="metadata only, skip WAVs")
    return parser


def main(argv=None) -> int:
    args = _build_parser().parse_args(argv)
    logging.basicConfig(level=logging.DEBUG if args.verbose else logging.INFO,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        if args.command == "prepare":
            label_map = harness.load_label_map(args.labels) if args.labels else None
            harness.prepare(args.meta, args.audio, args.out, label_map,
                            frame_hop_s=args.hop, gap_tolerance_frames=args.gap_tolerance)
        elif args.command == "synth":
            harness.synth(harness.load_config(args.config))
        elif args.command == "predict":
            harness.predict(harness.load_config(args.config), args.predictor)
        elif args.command == "score":
            harness.score(args.run)
        elif args.command == "report":
            harness.render_reports(args.run, fmt=args.format, plot=args.plot)
        elif args.command == "corpus":
            corpus.make_corpus(args.out, seed=args.seed, n_recordings=args.recordings,
                               duration_s=args.duration, write_audio=not args.no_audio)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG_ERROR
    except TbbError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_STAGE_FAILURE
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return EXIT_STAGE_FAILURE
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
