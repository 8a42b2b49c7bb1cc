"""Classify minimisers of a datum over a range of lambda values.

    python3 scripts/lambda_sweep.py --mu 3 --start 0.5 --stop 8 --count 16 --datum step
"""

import argparse

import numpy as np

from tvgrowth.experiment import ExperimentSpec, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--density", default="phi-mu", choices=("phi-mu", "f-eps"))
    ap.add_argument("--mu", type=float, default=3.0)
    ap.add_argument("--eps", type=float, default=1.0)
    ap.add_argument("--datum", default="step")
    ap.add_argument("--start", type=float, default=0.5)
    ap.add_argument("--stop", type=float, default=8.0)
    ap.add_argument("--count", type=int, default=16)
    ap.add_argument("--n", type=int, default=1001)
    ap.add_argument("--workers", type=int, default=4)
    ap.add_argument("--out", default="out/sweep")
    args = ap.parse_args()
    params = {"mu": args.mu} if args.density == "phi-mu" else {"eps": args.eps}
    spec = ExperimentSpec(
        family=args.density,
        density_params=params,
        datum=args.datum,
        lambdas=tuple(np.linspace(args.start, args.stop, args.count)),
        n=args.n,
        out_dir=args.out,
        workers=args.workers,
    )
    for r in run_experiment(spec):
        print(f"{r['lambda']:8.4f}  {r['classification']:13s}  max_slope={r['max_slope']:.4g}  "
              f"jump_height={r['jump_height']:.4g}")
    print(f"summary: {args.out}/sweep.csv")


if __name__ == "__main__":
    main()
