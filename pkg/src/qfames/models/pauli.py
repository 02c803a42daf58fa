"""Pauli strings and weighted Pauli-sum Hamiltonians on qubit statevectors.

Qubit 0 is the most significant bit of a basis index, so the dense matrix of a
string ``P0 P1 ... P(n-1)`` equals ``kron(P0, P1, ..., P(n-1))``.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Sequence

import numpy as np
import scipy.sparse as sp

PAULI_LETTERS = "IXYZ"


@dataclass(frozen=True)
class PauliTerm:
    coefficient: float
    letters: str

    def __post_init__(self):
        if not np.isfinite(self.coefficient) or np.iscomplexobj(self.coefficient):
            raise ValueError(f"coefficient must be real and finite, got {self.coefficient!r}")
        if any(c not in PAULI_LETTERS for c in self.letters):
            raise ValueError(f"letters must be drawn from {PAULI_LETTERS!r}, got {self.letters!r}")
        object.__setattr__(self, "coefficient", float(self.coefficient))

    @property
    def n_qubits(self) -> int:
        return len(self.letters)

    @cached_property
    def masks(self) -> tuple[int, int, int]:
        """(x_mask, z_mask, number of Y letters)."""
        n = len(self.letters)
        x = z = ny = 0
        for q, c in enumerate(self.letters):
            bit = 1 << (n - 1 - q)
            if c in "XY":
                x |= bit
            if c in "ZY":
                z |= bit
            ny += c == "Y"
        return x, z, ny

    def commutes_with(self, other: "PauliTerm") -> bool:
        # two strings commute iff they anticommute on an even number of sites
        clashes = sum(
            a != "I" and b != "I" and a != b for a, b in zip(self.letters, other.letters)
        )
        return clashes % 2 == 0


def _popcount(a: np.ndarray) -> np.ndarray:
    return np.bitwise_count(a).astype(np.int64)


def pauli_action(term: PauliTerm, dim: int) -> tuple[np.ndarray, np.ndarray]:
    """Index permutation and phases so that ``(P v)[k] = phase[k] * v[perm[k]]``."""
    x, z, ny = term.masks
    k = np.arange(dim, dtype=np.int64)
    perm = k ^ x
    sign = 1 - 2 * (_popcount(perm & z) & 1)
    return perm, (1j**ny) * sign


@dataclass(frozen=True, eq=False)
class PauliSumHamiltonian:
    """Hermitian operator stored as real-weighted Pauli strings, or as an explicit
    dense Hermitian matrix for systems that are not qubit registers."""

    n_qubits: int
    terms: tuple[PauliTerm, ...] = ()
    dense_matrix: np.ndarray | None = None
    norm_scale: float = 1.0
    all_commuting: bool = field(default=None)  # type: ignore[assignment]
    zero_flag: bool = False

    def __post_init__(self):
        object.__setattr__(self, "terms", tuple(self.terms))
        if self.norm_scale <= 0 or not np.isfinite(self.norm_scale):
            raise ValueError("norm_scale must be positive")
        if self.dense_matrix is not None:
            m = np.asarray(self.dense_matrix, dtype=complex)
            if m.ndim != 2 or m.shape[0] != m.shape[1]:
                raise ValueError("dense_matrix must be square")
            if np.abs(m - m.conj().T).max(initial=0.0) > 1e-12:
                raise ValueError("dense_matrix is not Hermitian")
            if self.terms:
                raise ValueError("give either Pauli terms or a dense matrix, not both")
            object.__setattr__(self, "dense_matrix", m)
        for t in self.terms:
            if t.n_qubits != self.n_qubits:
                raise ValueError(
                    f"term {t.letters!r} has {t.n_qubits} letters, expected {self.n_qubits}"
                )
        flag = _pairwise_commuting(self.terms) if self.dense_matrix is None else False
        if self.all_commuting is None:
            object.__setattr__(self, "all_commuting", flag)
        elif self.all_commuting and not flag:
            raise ValueError("all_commuting=True but some pair of terms anticommutes")

    @property
    def dim(self) -> int:
        if self.dense_matrix is not None:
            return self.dense_matrix.shape[0]
        return 2**self.n_qubits

    @property
    def coefficient_bound(self) -> float:
        """Upper bound on the spectral radius: sum of |coefficients| (or the
        exact spectral norm for dense systems)."""
        if self.dense_matrix is not None:
            return float(np.abs(np.linalg.eigvalsh(self.dense_matrix)).max(initial=0.0))
        return float(sum(abs(t.coefficient) for t in self.terms))

    @cached_property
    def _actions(self):
        return [pauli_action(t, self.dim) for t in self.terms]

    def pauli(self, j: int, v: np.ndarray) -> np.ndarray:
        """Apply the j-th Pauli string (without its coefficient) to ``v``."""
        perm, phase = self._actions[j]
        if v.ndim == 1:
            return phase * v[perm]
        return phase[:, None] * v[perm]

    def matvec(self, v: np.ndarray) -> np.ndarray:
        if self.dense_matrix is not None:
            return self.dense_matrix @ v
        out = np.zeros_like(v, dtype=complex)
        for j, t in enumerate(self.terms):
            out += t.coefficient * self.pauli(j, v)
        return out

    @cached_property
    def sparse(self) -> sp.csr_matrix:
        if self.dense_matrix is not None:
            return sp.csr_matrix(self.dense_matrix)
        dim = self.dim
        rows = np.arange(dim)
        mat = sp.csr_matrix((dim, dim), dtype=complex)
        for t, (perm, phase) in zip(self.terms, self._actions):
            mat = mat + sp.csr_matrix(
                (t.coefficient * np.broadcast_to(phase, (dim,)), (rows, perm)), shape=(dim, dim)
            )
        return mat.tocsr()

    def to_dense(self) -> np.ndarray:
        if self.dense_matrix is not None:
            return self.dense_matrix.copy()
        return self.sparse.toarray()

    def scaled(self, s: float) -> "PauliSumHamiltonian":
        """The operator ``s * H`` with ``norm_scale`` multiplied by ``s``."""
        if self.dense_matrix is not None:
            return replace(self, dense_matrix=s * self.dense_matrix, norm_scale=self.norm_scale * s)
        terms = tuple(PauliTerm(s * t.coefficient, t.letters) for t in self.terms)
        return replace(self, terms=terms, norm_scale=self.norm_scale * s)

    # -- serialization -------------------------------------------------
    def to_json(self) -> dict:
        doc = {
            "n_qubits": self.n_qubits,
            "terms": [{"coeff": t.coefficient, "paulis": t.letters} for t in self.terms],
        }
        if self.dense_matrix is not None:
            m = self.dense_matrix
            doc["dense"] = [[float(z.real), float(z.imag)] for z in m.ravel()]
            doc["dim"] = m.shape[0]
        if self.norm_scale != 1.0:
            doc["norm_scale"] = self.norm_scale
        return doc

    @classmethod
    def from_json(cls, doc: dict | str) -> "PauliSumHamiltonian":
        if isinstance(doc, str):
            doc = json.loads(doc)
        dense = None
        if doc.get("dense") is not None:
            pairs = np.asarray(doc["dense"], dtype=float)
            dim = int(doc.get("dim") or round(np.sqrt(len(pairs))))
            if pairs.shape != (dim * dim, 2):
                raise ValueError("dense block must hold dim*dim [re, im] pairs")
            dense = (pairs[:, 0] + 1j * pairs[:, 1]).reshape(dim, dim)
        terms = [PauliTerm(t["coeff"], t["paulis"]) for t in doc.get("terms", [])]
        return cls(
            n_qubits=int(doc["n_qubits"]),
            terms=tuple(terms),
            dense_matrix=dense,
            norm_scale=float(doc.get("norm_scale", 1.0)),
        )


def _pairwise_commuting(terms: Sequence[PauliTerm]) -> bool:
    for i, a in enumerate(terms):
        for b in terms[i + 1 :]:
            if not a.commutes_with(b):
                return False
    return True


def single_site(letter: str, site: int, n: int) -> str:
    s = ["I"] * n
    s[site] = letter
    return "".join(s)
