"""Initial-state families and overlap diagnostics.

Overlap matrices follow the convention ``Phi[l, m] = <phi_l|E_m>``.
"""
from __future__ import annotations

import json
import logging
import math
from dataclasses import dataclass, field

import numpy as np

from .models import PauliSumHamiltonian, Spectrum, imaginary_evolve
from .models.evolution import EvolutionBackend

log = logging.getLogger(__name__)


@dataclass(frozen=True, eq=False)
class StateSet:
    """Normalized states stored as rows of ``states`` (shape (count, dim))."""

    states: np.ndarray
    labels: tuple[str, ...] = ()

    def __post_init__(self):
        s = np.atleast_2d(np.asarray(self.states, dtype=complex))
        norms = np.linalg.norm(s, axis=1)
        if np.abs(norms - 1).max(initial=0.0) > 1e-10:
            raise ValueError("every state must have unit norm")
        object.__setattr__(self, "states", s)
        if not self.labels:
            object.__setattr__(self, "labels", tuple(f"state{i}" for i in range(len(s))))

    def __len__(self):
        return self.states.shape[0]

    @property
    def dim(self) -> int:
        return self.states.shape[1]

    def subset(self, count: int) -> "StateSet":
        return StateSet(self.states[:count], self.labels[:count])

    def to_json(self) -> dict:
        return {"labels": list(self.labels), "states": complex_pairs(self.states)}

    @classmethod
    def from_json(cls, doc: dict) -> "StateSet":
        return cls(from_complex_pairs(doc["states"]), tuple(doc.get("labels", ())))


def complex_pairs(a: np.ndarray) -> list:
    """Row-major nested lists with complex entries written as [re, im]."""
    a = np.asarray(a)
    return np.stack([a.real, a.imag], axis=-1).tolist()


def from_complex_pairs(data) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    return arr[..., 0] + 1j * arr[..., 1]


def states_from_overlaps(spectrum: Spectrum, phi: np.ndarray) -> StateSet:
    """States whose overlaps with the eigenbasis are exactly the rows of ``phi``."""
    phi = np.asarray(phi, dtype=complex)
    if phi.shape[1] != spectrum.eigenvectors.shape[1]:
        raise ValueError("overlap matrix needs one column per eigenvector")
    rows = np.linalg.norm(phi, axis=1)
    if np.abs(rows - 1).max() > 1e-8:
        raise ValueError("each overlap row must have unit norm")
    # |phi_l> = sum_m conj(Phi[l, m]) |E_m>
    return StateSet((spectrum.eigenvectors @ phi.conj().T).T, tuple(f"phi{i}" for i in range(len(phi))))


def haar_random_states(dim: int, count: int, seed) -> StateSet:
    """Haar-distributed pure states from normalized complex Gaussian vectors."""
    if dim < 1:
        raise ValueError("dim must be positive")
    rng = np.random.default_rng(seed)
    z = rng.standard_normal((count, dim)) + 1j * rng.standard_normal((count, dim))
    z /= np.linalg.norm(z, axis=1, keepdims=True)
    return StateSet(z, tuple(f"haar{i}" for i in range(count)))


def boosted_random_states(h: PauliSumHamiltonian, backend: EvolutionBackend, beta: float, count: int, seed) -> StateSet:
    """Haar states pushed towards the low-energy subspace by exp(-beta H)."""
    if beta < 0:
        raise ValueError("beta must be non-negative")
    base = haar_random_states(h.dim, count, seed)
    if beta == 0:
        return base
    out = np.empty_like(base.states)
    for i, s in enumerate(base.states):
        out[i], _ = imaginary_evolve(h, backend, s, beta)
    return StateSet(out, tuple(f"boost{i}" for i in range(count)))


def overlap_matrices(spectrum: Spectrum, left: StateSet, right: StateSet):
    """(Phi, Psi) with Phi[l, m] = <phi_l|E_m> and Psi[r, m] = <psi_r|E_m>."""
    if left.dim != spectrum.dim or right.dim != spectrum.dim:
        raise ValueError("state and spectrum dimensions differ")
    v = spectrum.eigenvectors
    return left.states.conj() @ v, right.states.conj() @ v


def boost_overlaps(eigenvalues: np.ndarray, x: np.ndarray, beta: float) -> np.ndarray:
    """Overlap rows after exp(-beta H) and renormalization, computed in the
    eigenbasis; rows of ``x`` must be complete (unit norm)."""
    # subtract the minimum energy so the weights cannot overflow
    w = np.exp(-beta * (np.asarray(eigenvalues) - np.min(eigenvalues)))
    y = x * w[None, :]
    return y / np.linalg.norm(y, axis=1, keepdims=True)


@dataclass
class DominanceDiagnostics:
    p_per_eigenvector: np.ndarray
    dominant: tuple[int, ...]
    p_min: float
    p_tail: float
    dominance_ratio: float
    satisfies_dominance: bool
    chi_per_cluster: list[float]
    cluster_index_sets: list[tuple[int, ...]]
    warnings: list[str] = field(default_factory=list)


def overlap_scores(phi: np.ndarray, psi: np.ndarray) -> np.ndarray:
    """p_m = ||Phi[:, m]|| * ||Psi[:, m]||."""
    return np.linalg.norm(phi, axis=0) * np.linalg.norm(psi, axis=0)


def singular_spread(a: np.ndarray) -> tuple[float, float]:
    """(s_min, s_avg) of a tall-or-wide block, with s_min = 0 when the block has
    more columns than rows."""
    s = np.linalg.svd(a, compute_uv=False)
    ncol = a.shape[1]
    s_avg = np.linalg.norm(a) / math.sqrt(ncol)
    s_min = 0.0 if len(s) < ncol else float(s.min())
    return s_min, float(s_avg)


def minimal_chi(a: np.ndarray) -> float:
    """Least chi >= 0 with s_min(a) >= s_avg(a) / (1 + chi); inf when rank deficient."""
    s_min, s_avg = singular_spread(a)
    if s_min <= 1e-12 * max(s_avg, 1e-300):
        return math.inf
    return max(s_avg / s_min - 1.0, 0.0)


def dominance_diagnostics(phi, psi, dominant, clusters, c_p: float = 10.0) -> DominanceDiagnostics:
    """Overlap scores, the dominance test p_min >= C_p p_tail and the minimal
    uniform-overlap constant chi for each cluster."""
    dominant = tuple(int(m) for m in dominant)
    if not dominant:
        raise ValueError("dominant set is empty")
    if sorted(i for c in clusters for i in c) != sorted(dominant):
        raise ValueError("clusters must partition the dominant set")
    p = overlap_scores(phi, psi)
    tail = [m for m in range(p.size) if m not in set(dominant)]
    p_min = float(p[list(dominant)].min())
    p_tail = float(p[tail].sum()) if tail else 0.0
    ratio = math.inf if p_tail == 0 else p_min / p_tail
    chis, warnings = [], []
    for idx in clusters:
        idx = list(idx)
        chi = max(minimal_chi(phi[:, idx]), minimal_chi(psi[:, idx]))
        if math.isinf(chi):
            msg = (
                f"cluster {idx}: overlap block is rank deficient; its multiplicity cannot be "
                "resolved from this data by any post-processing"
            )
            warnings.append(msg)
            log.warning(msg)
        chis.append(chi)
    return DominanceDiagnostics(
        p_per_eigenvector=p,
        dominant=dominant,
        p_min=p_min,
        p_tail=p_tail,
        dominance_ratio=ratio,
        satisfies_dominance=p_min >= c_p * p_tail,
        chi_per_cluster=chis,
        cluster_index_sets=[tuple(int(i) for i in c) for c in clusters],
        warnings=warnings,
    )


def save_overlaps(path, phi, psi):
    with open(path, "w") as fh:
        json.dump({"phi": complex_pairs(phi), "psi": complex_pairs(psi)}, fh)


def load_overlaps(path):
    with open(path) as fh:
        doc = json.load(fh)
    return from_complex_pairs(doc["phi"]), from_complex_pairs(doc["psi"])
