"""Empirical level and power of the Wald-type slope test.

The local-alternative mode shifts the tested coefficient by d/sqrt(n) and
tops out near the information bound (about 0.61 at d = 1.5 for this
design); --fixed-shift instead moves the coefficient by d itself, which
is the regime in which rejection rates saturate at 1.

Usage:
    python scripts/run_level_power.py --mode level --epsilon 0.05
    python scripts/run_level_power.py --mode power --d 1.5 [--fixed-shift]
"""
import argparse
import time

import numpy as np

from snfit.simulate import SimConfig, run_level_power
from snfit.sn_dist import SnParams
from snfit.wald import coefficient_hypothesis


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--mode", choices=("level", "power"), default="level")
    ap.add_argument("--n", type=int, default=200)
    ap.add_argument("--reps", type=int, default=500)
    ap.add_argument("--epsilon", type=float, default=0.0)
    ap.add_argument("--contamination", default="-5,1,2")
    ap.add_argument("--d", type=float, default=1.5)
    ap.add_argument("--fixed-shift", action="store_true")
    ap.add_argument("--alphas", default="0,0.1,0.3,0.5,0.7,1")
    ap.add_argument("--seed", type=int, default=2024)
    args = ap.parse_args()

    cont = None
    if args.epsilon > 0:
        mu, s, g = (float(v) for v in args.contamination.split(","))
        cont = SnParams(mu, s, g)
    alphas = tuple(float(a) for a in args.alphas.split(","))
    cfg = SimConfig(n=args.n, reps=args.reps, alphas=alphas,
                    master_seed=args.seed, contamination_fraction=args.epsilon,
                    contamination_error=cont)
    hyp = coefficient_hypothesis(1, 2.0, 5, name="x1")
    d = None
    if args.mode == "power":
        d = args.d * np.sqrt(args.n) if args.fixed_shift else args.d
    t0 = time.perf_counter()
    rep = run_level_power(cfg, hyp, tau=0.05, contiguous_d=d)
    print(f"{rep.mode}: n={args.n} reps={args.reps} epsilon={args.epsilon} "
          f"({time.perf_counter() - t0:.0f} s)")
    for a, r, se, nf in zip(rep.alphas, rep.rejection_rate,
                            rep.mc_standard_error, rep.n_failed):
        print(f"  alpha={a:<4g} rate={r:.3f} (mc se {se:.3f}, {nf} failed)")


if __name__ == "__main__":
    main()
