"""Run every figure pipeline into one output directory.

    python3 scripts/run_figures.py --out runs/figures --seed 0
"""

import argparse
import sys

from photonsqueeze.cli import main


def run(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="runs/figures")
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--figures", nargs="+", default=["fig2", "fig3", "supplfig1", "supplfig2"])
    args = ap.parse_args(argv)
    for fig in args.figures:
        code = main(["--out", f"{args.out}/{fig}", "--seed", str(args.seed), "reproduce", fig])
        if code:
            return code
    return 0


if __name__ == "__main__":
    sys.exit(run())
