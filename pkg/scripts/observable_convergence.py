"""Observable eigenvalues within a degenerate pair versus sample count, on a
4-level synthetic Hamiltonian with no tail weight.

    python3 scripts/observable_convergence.py --seeds 20
"""
import argparse

import numpy as np

from qfames.acquisition import (
    SignalTensor,
    observable_exact_signal,
    observable_shot_sample,
    sample_observable_times,
    sample_times,
    signal_from_overlaps,
)
from qfames.core import multiplicities
from qfames.models import PauliSumHamiltonian, eigendecompose
from qfames.observables import observable_spectra
from qfames.stateprep import StateSet, haar_random_states, overlap_matrices


def main():
    ap = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    ap.add_argument("--seeds", type=int, default=20)
    ap.add_argument("--T", type=float, default=60.0)
    args = ap.parse_args()

    spec = eigendecompose(PauliSumHamiltonian(n_qubits=0, dense_matrix=np.diag([-0.9, 0.0, 0.0, 0.8])))
    states = StateSet(haar_random_states(2, 3, 12).states @ spec.eigenvectors[:, 1:3].T)
    u = np.linalg.qr(haar_random_states(4, 4, 5).states)[0]
    obs = u @ np.diag([1.0, -1.0, 1.0, -1.0]) @ u.conj().T
    v = spec.eigenvectors[:, 1:3]
    exact = np.linalg.eigvalsh(v.conj().T @ obs @ v)
    phi, _ = overlap_matrices(spec, states, states)
    print("oracle", np.round(exact, 5))
    for N in (100, 300, 1000, 3000, 10000):
        errs = []
        for seed in range(args.seeds):
            ts = sample_times(args.T, 1.0, N, seed, "conditional")
            kept, _ = multiplicities(SignalTensor(signal_from_overlaps(spec.eigenvalues, phi, phi, ts), "exact", ts), [0.0], 0.2)
            tt, tp = sample_observable_times(args.T, 1.0, N, seed + 1000, "iid-pairs", "conditional")
            o = observable_shot_sample(observable_exact_signal(spec, states, states, obs, tt, tp), seed)
            ev = observable_spectra(o, kept)[0].eigenvalues
            errs.append(np.max(np.abs(np.sort(ev) - exact)) if ev.size == 2 else np.inf)
        print(f"N={N:>6}  median error {np.median(errs):.4f}  sqrt(N) * error {np.sqrt(N) * np.median(errs):.3f}")


if __name__ == "__main__":
    main()
