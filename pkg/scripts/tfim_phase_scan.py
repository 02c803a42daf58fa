"""Ground-cluster multiplicity and S^z spectrum of the transverse-field Ising
chain across the transition, compared with exact diagonalization.

    python3 scripts/tfim_phase_scan.py --L 8 --g 0.5,0.9,1.1,1.5 --seeds 3
"""
import argparse
import dataclasses

import numpy as np

from qfames.experiments import TruthSpec, observable_operator, prepare_problem, preset, run_seed


def oracle(cfg, problem, width=0.01):
    spec = problem.spectrum
    idx = np.flatnonzero(spec.eigenvalues <= spec.eigenvalues[0] + width)
    op, _ = observable_operator(cfg, problem.hamiltonian)
    v = spec.eigenvectors[:, idx]
    return np.linalg.eigvalsh(v.conj().T @ op.to_dense() @ v)


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--L", type=int, default=10)
    ap.add_argument("--g", default="0.5,1.5")
    ap.add_argument("--seeds", type=int, default=3)
    args = ap.parse_args()

    base = preset("tfim")
    for g in (float(x) for x in args.g.split(",")):
        cfg = dataclasses.replace(base, model=dataclasses.replace(base.model, L=args.L, g=g),
                                  truth=TruthSpec(c_p=10, delta=0.1, width=0.01), seeds=tuple(range(args.seeds)))
        exact = oracle(cfg, prepare_problem(cfg, 0))
        for seed in cfg.seeds:
            r = run_seed(cfg, seed)
            c = r.estimate.clusters[0]
            print(f"g={g:<5} seed={seed}  theta*={c.theta_star / r.estimate.norm_scale:+.5f}  m={c.multiplicity}  "
                  f"S^z={np.round(r.spectra[0].eigenvalues, 4)}  oracle={np.round(exact, 4)}")


if __name__ == "__main__":
    main()
