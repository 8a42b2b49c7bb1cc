"""Locate the critical lambda of the unit step for a density family.

Prints the estimate, the analytic bracket and the trial history; for
mu <= 2 (omega_inf infinite) it reports that no jump regime exists.

    python3 scripts/critical_lambda.py --mu 3 --tol 0.01
"""

import argparse

from tvgrowth.analysis import find_lambda_crit
from tvgrowth.densities import make_density


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--density", default="phi-mu", choices=("phi-mu", "f-eps"))
    ap.add_argument("--mu", type=float, default=3.0)
    ap.add_argument("--eps", type=float, default=1.0)
    ap.add_argument("--tol", type=float, default=0.02)
    ap.add_argument("--n", type=int, default=1001)
    ap.add_argument("--no-cross-check", action="store_true", help="skip the grid minimiser at every trial")
    args = ap.parse_args()
    d = make_density(args.density, mu=args.mu, eps=args.eps)
    res = find_lambda_crit(d, tol=args.tol, n=args.n, cross_check=not args.no_cross_check)
    print("\n".join(res.lines()))


if __name__ == "__main__":
    main()
