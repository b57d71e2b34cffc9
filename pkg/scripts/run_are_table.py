"""Print the asymptotic-relative-efficiency table for several error laws.

Usage:
    python scripts/run_are_table.py [--alphas 0,0.1,0.3,0.5,0.7,1]
"""
import argparse

from snfit.asymptotics import are_table
from snfit.sn_dist import SnParams


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--alphas", default="0,0.1,0.3,0.5,0.7,1")
    args = ap.parse_args()
    alphas = tuple(float(a) for a in args.alphas.split(","))

    laws = [(1.0, -2.0), (1.0, 0.0), (4.0, 0.0), (1.0, 2.0)]
    header = "alpha".rjust(28) + "".join(f"{a:>9g}" for a in alphas)
    print(header)
    for sigma, gamma in laws:
        table = are_table(SnParams(0.0, sigma, gamma), alphas)
        label = f"SN(0,{sigma:g},{gamma:g})"
        for c, comp in enumerate(table.components):
            row = "".join(f"{v:9.2f}" for v in table.values[c])
            print(f"{label:>18} {comp:>9}{row}")
        if table.closed_form_beta is not None:
            row = "".join(f"{v:9.2f}" for v in table.closed_form_beta)
            print(f"{'':>18} {'beta(cf)':>9}{row}")
        print()


if __name__ == "__main__":
    main()
