"""Exact PCRB of each design across the SNR sweep, with the upper bound and average CRB.

Usage: python3 scripts/pcrb_vs_snr.py [--out results/pcrb_vs_snr.csv] [--config configs/pcrb_vs_snr.json] [extra cli flags]
"""

import argparse
import sys
from pathlib import Path

from mimo_pcrb import cli

ROOT = Path(__file__).resolve().parents[1]


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--config", default=str(ROOT / "configs" / "pcrb_vs_snr.json"))
    parser.add_argument("--out", default=str(ROOT / "results" / "pcrb_vs_snr.csv"))
    args, rest = parser.parse_known_args()
    Path(args.out).parent.mkdir(parents=True, exist_ok=True)
    code = cli.main(["run", "--config", args.config, "--out", args.out, *rest])
    if code in (cli.EXIT_OK, cli.EXIT_PROPERTY):
        text = Path(args.out).read_text()
        lines = text.splitlines()
        print(text if len(lines) <= 60 else f"wrote {len(lines)} lines to {args.out}")
    return code


if __name__ == "__main__":
    sys.exit(main())
