"""Homodyne tomography round trips over several seeds for a set of reference states."""

import argparse

import numpy as np

from photonsqueeze.fock import embed, fidelity, make_css, make_fock
from photonsqueeze.gates import LossBudget, prepare_experimental_photon, squeeze
from photonsqueeze.phasespace import wigner_min
from photonsqueeze.tomography import maxlik_reconstruct, sample_quadratures, uniform_phases


def states(N: int) -> dict:
    return {
        "vacuum": make_fock(0, N),
        "photon": make_fock(1, N),
        "experimental photon": prepare_experimental_photon(LossBudget.paper(), N),
        "odd CSS 0.97": make_css(0.97, "odd", N),
        "S(0.26)|1>": squeeze(make_fock(1, N), 0.26),
        "S(0.67)|1>": squeeze(make_fock(1, N), 0.67),
    }


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--seeds", type=int, default=4)
    ap.add_argument("--samples", type=int, default=100_000)
    ap.add_argument("--phases", type=int, default=12)
    ap.add_argument("--tomo-cutoff", type=int, default=15)
    args = ap.parse_args(argv)
    per_phase = -(-args.samples // args.phases)
    for name, rho in states(40).items():
        fs, dw = [], []
        for seed in range(args.seeds):
            recs = sample_quadratures(rho, uniform_phases(args.phases), per_phase, seed=seed)
            rep = maxlik_reconstruct(recs, args.tomo_cutoff)
            fs.append(fidelity(embed(rep.rho, rho.dim), rho))
            dw.append(wigner_min(rep.rho)[0] - wigner_min(rho)[0])
        print(f"{name:20s} F mean {np.mean(fs):.5f} min {np.min(fs):.5f}   "
              f"dWmin max |{np.max(np.abs(dw)):.4f}|")


if __name__ == "__main__":
    main()
