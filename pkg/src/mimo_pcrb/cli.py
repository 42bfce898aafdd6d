"""Command line driver.

    mimo-pcrb run --config exp.json --out result.csv [--seed N] [--threads N]
    mimo-pcrb validate --config exp.json

Exit codes: 0 success, 1 configuration error, 2 property-suite failure.
"""

from __future__ import annotations

import argparse
import dataclasses
import logging
import os
import sys

from .config import ConfigError, load_config
from .experiments import run_experiment

log = logging.getLogger("mimo_pcrb")

EXIT_OK, EXIT_CONFIG, EXIT_PROPERTY = 0, 1, 2


def _threads(arg) -> int:
    if arg is not None:
        return max(1, arg)
    env = os.environ.get("PCRB_THREADS")
    if env:
        try:
            return max(1, int(env))
        except ValueError:
            raise ConfigError(f"PCRB_THREADS: expected an integer, got {env!r}")
    return 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="mimo-pcrb", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run the experiment described by a config file")
    run.add_argument("--config", required=True)
    run.add_argument("--out", required=True, help="CSV output path")
    run.add_argument("--seed", type=int, default=None, help="override the config seed")
    run.add_argument("--threads", type=int, default=None, help="worker threads (default: $PCRB_THREADS or 1)")

    val = sub.add_parser("validate", help="parse and check a config file without running it")
    val.add_argument("--config", required=True)
    parser.add_argument("-v", "--verbose", action="store_true")
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING, format="%(message)s")
    try:
        config = load_config(args.config)
        if args.command == "validate":
            print(f"{args.config}: ok ({config.experiment})")
            return EXIT_OK
        if args.seed is not None:
            config = dataclasses.replace(config, seed=args.seed)
        threads = _threads(args.threads)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG

    log.info("running %s with %d thread(s)", config.experiment, threads)
    table = run_experiment(config, threads=threads)
    table.write_csv(args.out)
    log.info("wrote %d rows to %s", len(table.rows), args.out)
    if config.experiment == "property-suite" and not table.metadata.get("all_passed", False):
        failed = [row[0] for row in table.rows if row[2] > 0]
        print(f"property failures: {', '.join(failed)}", file=sys.stderr)
        return EXIT_PROPERTY
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
