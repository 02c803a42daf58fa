"""Error versus T on the 3x3 illustrative model, QFAMES against the
single-state baseline at matched simulation budget.

    python3 scripts/illustrative_sweep.py --seeds 10 --out sweep_illustrative.csv
"""
import argparse
import csv

import numpy as np

from qfames.experiments import SWEEP_COLUMNS, preset, sweep_seed

T_VALUES = (40, 50, 60, 80, 100, 200, 400, 800)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seeds", type=int, default=10)
    ap.add_argument("--out", default="sweep_illustrative.csv")
    args = ap.parse_args()

    cfg = preset("illustrative")
    rows = [r for s in range(args.seeds) for r in sweep_seed(cfg, s, T_VALUES)]
    with open(args.out, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([r.seed, r.method, r.T, r.T_max, r.T_total, r.error, r.multiplicities])

    print(f"{'T':>5} {'qfames':>10} {'qmegs':>10}")
    med = {}
    for T in T_VALUES:
        for m in ("qfames", "qmegs"):
            med[m, T] = np.median([r.error for r in rows if r.method == m and r.T == T])
        print(f"{T:>5} {med['qfames', T]:>10.2e} {med['qmegs', T]:>10.2e}")
    logT = np.log(T_VALUES)
    for m in ("qfames", "qmegs"):
        slope = np.polyfit(logT, np.log([med[m, T] for T in T_VALUES]), 1)[0]
        print(f"{m}: log-log slope {slope:.2f}")


if __name__ == "__main__":
    main()
