"""Bias/MSE study of the estimator under clean and contaminated data.

Desk scale by default (100 replications); --full-scale switches to 500.

Usage:
    python scripts/run_bias_mse.py [--n 100] [--epsilon 0.05] [--full-scale]
"""
import argparse
import time

from snfit.simulate import SimConfig, run_bias_mse
from snfit.sn_dist import SnParams


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--n", type=int, default=100)
    ap.add_argument("--epsilon", type=float, default=0.0)
    ap.add_argument("--contamination", default="-10,1,2")
    ap.add_argument("--seed", type=int, default=314)
    ap.add_argument("--full-scale", action="store_true")
    args = ap.parse_args()

    reps = 500 if args.full_scale else 100
    cont = None
    if args.epsilon > 0:
        mu, s, g = (float(v) for v in args.contamination.split(","))
        cont = SnParams(mu, s, g)
    cfg = SimConfig(n=args.n, reps=reps, alphas=(0, 0.1, 0.3, 0.5, 0.7, 1.0),
                    master_seed=args.seed, contamination_fraction=args.epsilon,
                    contamination_error=cont)
    t0 = time.perf_counter()
    rep = run_bias_mse(cfg)
    print(f"n={args.n} reps={reps} epsilon={args.epsilon} "
          f"({time.perf_counter() - t0:.0f} s)")
    print("alpha".rjust(10) + "".join(f"{a:>10g}" for a in rep.alphas))
    for j, name in enumerate(rep.parameter_names):
        print(f"{name:>10}" + "".join(f"{b:>10.4f}" for b in rep.bias[:, j])
              + "   bias")
        print(f"{'':>10}" + "".join(f"{m:>10.4f}" for m in rep.mse[:, j])
              + "   mse")
    if rep.invalid.any():
        print("invalid alphas:", [a for a, bad in zip(rep.alphas, rep.invalid)
                                  if bad])


if __name__ == "__main__":
    main()
