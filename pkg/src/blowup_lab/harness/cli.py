"""``blowup-lab <experiment> --config <path> [--out DIR] [--workers N] [--force]``

Exit status: 0 success, 1 usage or configuration error, 2 contract violation
(a module invariant failed or a module refused its input).
"""
from __future__ import annotations

import argparse
import logging
import os
import sys

from ..errors import BlowupLabError, ConfigError
from .config import EXPERIMENTS, ExperimentConfig, load_config
from .run import execute

OUT_ENV = "BLOWUP_LAB_OUT"
EXIT_OK, EXIT_USAGE, EXIT_CONTRACT = 0, 1, 2


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="blowup-lab", description="Blow-up experiments with CSV output.")
    parser.add_argument("experiment", choices=EXPERIMENTS)
    parser.add_argument("--config", help="TOML file, or a JSON sidecar from an earlier run "
                                         "(optional for 'check')")
    parser.add_argument("--out", help=f"output directory (default: ${OUT_ENV} or ./out)")
    parser.add_argument("--workers", type=int, default=1, help="worker processes for sweeps")
    parser.add_argument("--force", action="store_true",
                        help="run even when the domination gate refuses (logs a warning)")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    if args.workers < 1:
        print("blowup-lab: error: --workers must be at least 1", file=sys.stderr)
        return EXIT_USAGE
    out_dir = args.out or os.environ.get(OUT_ENV) or "out"
    try:
        if args.config is None:
            if args.experiment != "check":
                raise ConfigError("--config is required", "--config")
            cfg = ExperimentConfig(experiment="check")
        else:
            cfg = load_config(args.config, experiment=args.experiment)
        result = execute(cfg, out_dir, workers=args.workers, force=args.force)
    except ConfigError as exc:
        print(f"blowup-lab: config error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except BlowupLabError as exc:
        print(f"blowup-lab: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_CONTRACT
    for path in result.artifacts:
        print(path)
    return EXIT_OK


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
