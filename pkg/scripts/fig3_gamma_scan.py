"""Find the squeeze-x strength that maps the odd CSS back closest to a single photon.

Shows the residual quadrature-variance spread of the output for the ideal and the
experimental ancilla as gamma varies around -0.26.
"""

import argparse

import numpy as np

from photonsqueeze.fock import fidelity, make_css, make_fock
from photonsqueeze.phasespace import marginal_variances
from photonsqueeze.squeezer import SqueezeGateConfig, mb_squeeze_channel


def spread(rho) -> float:
    v = marginal_variances(rho, np.linspace(0, np.pi, 24, endpoint=False))
    return float((v.max() - v.min()) / v.mean())


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--alpha", type=float, default=0.97)
    ap.add_argument("--cutoff", type=int, default=40)
    args = ap.parse_args(argv)
    css = make_css(args.alpha, "odd", args.cutoff)
    one = make_fock(1, args.cutoff)
    print("gamma    ideal: F(|1>) spread    paper: F(|1>) spread")
    for g in np.arange(-0.20, -0.36, -0.02):
        ideal = mb_squeeze_channel(css, SqueezeGateConfig.ideal(g, squeezed_variance=0.5e-4))
        paper = mb_squeeze_channel(css, SqueezeGateConfig.paper(g))
        print(f"{g:+.2f}   {fidelity(ideal, one):.4f}  {spread(ideal):.3f}       "
              f"{fidelity(paper, one):.4f}  {spread(paper):.3f}")


if __name__ == "__main__":
    main()
