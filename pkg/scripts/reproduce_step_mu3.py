"""Unit step, Phi_3, lambda in {4, 4.16, 5}: solve, shoot, classify, write CSVs.

    python3 scripts/reproduce_step_mu3.py [--out out/step_mu3] [--workers 3]
"""

import argparse

from tvgrowth.experiment import run_experiment, step_mu3_spec


def main():
    ap = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    ap.add_argument("--out", default="out/step_mu3")
    ap.add_argument("--workers", type=int, default=1)
    args = ap.parse_args()
    rows = run_experiment(step_mu3_spec(args.out, args.workers))
    for r in rows:
        print(f"lambda={r['lambda']:g} classification={r['classification']} u0={r['u0']:.6f} "
              f"max_slope={r['max_slope']:.4g} jump_height={r['jump_height']:.4g} gap={r['duality_gap']:.2e}")
    print(f"artifacts in {args.out}/")


if __name__ == "__main__":
    main()
