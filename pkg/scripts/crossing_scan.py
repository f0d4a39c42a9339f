"""Find where the anticorrelation parameter A of S(gamma)|1> reaches the classical value 1.

A < 1 signals photon antibunching; coherent states give A = 1 for any detector
efficiency. Both singles definitions are scanned.
"""

import argparse

import numpy as np
from scipy.optimize import brentq

from photonsqueeze.fock import make_fock
from photonsqueeze.gates import squeeze
from photonsqueeze.metrics import anticorrelation


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--cutoff", type=int, default=80)
    ap.add_argument("--gamma-max", type=float, default=1.0)
    ap.add_argument("--points", type=int, default=21)
    ap.add_argument("--eta", type=float, nargs="+", default=[1.0, 0.5])
    args = ap.parse_args(argv)
    one = make_fock(1, args.cutoff)
    grid = np.linspace(0.05, args.gamma_max, args.points)
    for singles in ("marginal", "exactly-one"):
        for eta in args.eta:
            def excess(g):
                return anticorrelation(squeeze(one, g), eta, singles).a_value - 1.0

            vals = np.array([excess(g) for g in grid])
            idx = np.flatnonzero(np.diff(np.sign(vals)))
            if idx.size == 0:
                print(f"{singles:12s} eta={eta:.2f}: A stays below 1 (max {vals.max() + 1:.3f})")
                continue
            g0 = brentq(excess, grid[idx[0]], grid[idx[0] + 1], xtol=1e-6)
            print(f"{singles:12s} eta={eta:.2f}: A = 1 at |gamma| = {g0:.5f}")


if __name__ == "__main__":
    main()
