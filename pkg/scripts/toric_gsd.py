"""Averaged singular values at the lowest cluster of the 2x4 toric code on a
torus and a cylinder; the count above tau estimates the ground-state degeneracy.

    python3 scripts/toric_gsd.py --trials 10 --count 15 --beta 10
"""
import argparse
import dataclasses

from qfames.experiments import mean_singular_values, preset, run_experiment


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--trials", type=int, default=10)
    ap.add_argument("--count", type=int, default=15, help="number of initial states L = R")
    ap.add_argument("--beta", type=float, default=10.0)
    args = ap.parse_args()

    for name in ("toric-torus-2x4", "toric-cyl-2x4"):
        cfg = preset(name)
        tau = args.count / 15
        cfg = dataclasses.replace(
            cfg,
            states=dataclasses.replace(cfg.states, count=args.count, beta=args.beta),
            qfames=dataclasses.replace(cfg.qfames, tau=tau),
            seeds=tuple(range(args.trials)),
        )
        rows = [v for c, _, v, _ in mean_singular_values(run_experiment(cfg)) if c == 0]
        above = sum(v > tau for v in rows)
        print(f"{name}: {above} singular values above tau={tau:.3g}; leading {[round(v, 3) for v in rows[:6]]}")


if __name__ == "__main__":
    main()
