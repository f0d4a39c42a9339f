"""Compare the Monte-Carlo trajectory average with the deterministic gate channel."""

import argparse
import time

from photonsqueeze.fock import make_fock, trace_distance
from photonsqueeze.squeezer import SqueezeGateConfig, mb_squeeze_channel, mb_squeeze_mc


def main(argv=None) -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--gamma", type=float, default=0.26)
    ap.add_argument("--cutoff", type=int, default=30)
    ap.add_argument("--shots", type=int, nargs="+", default=[1000, 3000, 10000])
    ap.add_argument("--seed", type=int, default=0)
    args = ap.parse_args(argv)
    cfg = SqueezeGateConfig.paper(args.gamma)
    rho = make_fock(1, args.cutoff)
    ref = mb_squeeze_channel(rho, cfg, max_deficit=1e-3)
    print("shots  trace_distance  seconds")
    for n in args.shots:
        t0 = time.perf_counter()
        _, avg = mb_squeeze_mc(rho, cfg, n, seed=args.seed, keep_states=False)
        print(f"{n:6d}  {trace_distance(avg, ref):.5f}        {time.perf_counter() - t0:.1f}")


if __name__ == "__main__":
    main()
