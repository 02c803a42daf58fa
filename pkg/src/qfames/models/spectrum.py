"""Exact eigen-decompositions used as ground truth."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse.linalg as spla

from .pauli import PauliSumHamiltonian

DENSE_LIMIT = 2**13


@dataclass(frozen=True, eq=False)
class Spectrum:
    """Ascending eigenvalues with eigenvectors as columns.

    ``complete`` is False when only the lowest levels were computed, in which
    case overlap matrices built from it do not have unit rows.
    """

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray
    norm_scale: float = 1.0
    complete: bool = True

    @property
    def dim(self) -> int:
        return self.eigenvectors.shape[0]

    def physical(self, values=None) -> np.ndarray:
        """Map normalized energies back to the unscaled Hamiltonian's units."""
        vals = self.eigenvalues if values is None else np.asarray(values)
        return vals / self.norm_scale

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def eigendecompose(h: PauliSumHamiltonian, k: int | None = None) -> Spectrum:
    """Full dense diagonalization, or the lowest ``k`` levels by Lanczos.

    Dense mode is limited to ``DENSE_LIMIT`` dimensions.
    """
    if k is None:
        if h.dim > DENSE_LIMIT:
            raise ValueError(
                f"dimension {h.dim} exceeds the dense limit {DENSE_LIMIT}; pass k for Lanczos mode"
            )
        mat = h.to_dense()
        if np.abs(mat.imag).max(initial=0.0) == 0.0:
            mat = mat.real
        w, v = np.linalg.eigh(mat)
        return Spectrum(w, v.astype(complex), h.norm_scale)
    if k >= h.dim - 1:
        return eigendecompose(h)
    w, v = spla.eigsh(h.sparse, k=k, which="SA", tol=1e-12)
    order = np.argsort(w)
    return Spectrum(w[order], v[:, order].astype(complex), h.norm_scale, complete=False)


def energy_resolve(h: PauliSumHamiltonian, state: np.ndarray, tol: float = 1e-13):
    """Split ``state`` into its components on the distinct eigenvalues of a
    commuting Pauli sum.

    Terms are applied one at a time as the projector pair (I +- P_j)/2 and
    components landing on equal partial energies are merged, so the work is
    (#terms) x (#distinct partial energies) Pauli applications. Returns
    ``(energies, components)`` with ``components[k]`` the projection of ``state``
    onto the eigenspace with energy ``energies[k]``; the components sum to the
    input exactly.
    """
    if not h.all_commuting or h.dense_matrix is not None:
        raise ValueError("energy_resolve needs a commuting Pauli Hamiltonian")
    state = np.asarray(state, dtype=complex)
    scale = np.linalg.norm(state)
    energies = np.zeros(1)
    comps = state[None, :].copy()
    for j, term in enumerate(h.terms):
        perm, phase = h._actions[j]
        moved = phase[None, :] * comps[:, perm]
        plus, minus = (comps + moved) / 2, (comps - moved) / 2
        cand_e = np.concatenate([energies + term.coefficient, energies - term.coefficient])
        cand_v = np.concatenate([plus, minus])
        keys = np.round(cand_e, 10)
        uniq, inverse = np.unique(keys, return_inverse=True)
        merged = np.zeros((len(uniq), state.size), dtype=complex)
        for src, dst in enumerate(inverse):
            merged[dst] += cand_v[src]
        keep = np.linalg.norm(merged, axis=1) > tol * max(scale, 1.0)
        energies, comps = uniq[keep], merged[keep]
    return energies, comps


def walsh_hadamard(v: np.ndarray) -> np.ndarray:
    """Normalized Hadamard transform on every qubit of the last axis."""
    out = np.array(v, dtype=complex, copy=True)
    lead = out.shape[:-1]
    dim = out.shape[-1]
    n = dim.bit_length() - 1
    flat = out.reshape(-1, dim)
    for q in range(n):
        view = flat.reshape(flat.shape[0], 2**q, 2, dim >> (q + 1))
        a, b = view[:, :, 0], view[:, :, 1]
        diff = a - b
        a += b
        b[...] = diff
    flat /= np.sqrt(dim)
    return flat.reshape(*lead, dim)


def _diagonal_energies(h, terms_and_masks, dim):
    k = np.arange(dim, dtype=np.int64)
    e = np.zeros(dim)
    for coeff, mask in terms_and_masks:
        e += coeff * (1 - 2 * (np.bitwise_count(k & mask).astype(np.int64) & 1))
    return e


def level_grams(h: PauliSumHamiltonian, states: np.ndarray):
    """Energy-resolved Gram matrices ``G[k][s, s'] = <s| P_k |s'>`` of the
    eigenspace projectors P_k of a commuting Pauli sum.

    ``states`` has shape (S, dim). CSS Hamiltonians (every term all-X or
    all-Z) use diagonal Z energies plus a Hadamard-rotated X part; anything
    else falls back to ``energy_resolve`` state by state.
    """
    states = np.asarray(states, dtype=complex)
    if not h.all_commuting or h.dense_matrix is not None:
        raise ValueError("level_grams needs a commuting Pauli Hamiltonian")
    zs = [(t.coefficient, t.masks[1]) for t in h.terms if set(t.letters) <= set("IZ")]
    xs = [(t.coefficient, t.masks[0]) for t in h.terms if set(t.letters) <= set("IX")]
    if len(zs) + len(xs) != len(h.terms):
        return _level_grams_generic(h, states)
    dim = h.dim
    ez = np.round(_diagonal_energies(h, zs, dim), 10)
    ex = np.round(_diagonal_energies(h, xs, dim), 10)
    rotated = walsh_hadamard(states)
    # the two projector families commute, so loop over whichever has fewer
    # levels: one transform per level of the outer family
    outer, inner = (ez, ex) if np.unique(ez).size <= np.unique(ex).size else (ex, ez)
    base, other = (states, rotated) if outer is ez else (rotated, states)
    inner_levels = [(b, np.flatnonzero(inner == b)) for b in np.unique(inner)]
    grams: dict[float, np.ndarray] = {}
    for a in np.unique(outer):
        left = walsh_hadamard(np.where(outer == a, base, 0))
        for b, idx in inner_levels:
            g = left[:, idx].conj() @ other[:, idx].T
            key = float(a + b)
            grams[key] = grams.get(key, 0) + g
    return _merge_levels(grams)


def _merge_levels(grams: dict, tol: float = 1e-8):
    """Sum Gram matrices whose energies agree within ``tol``; rounding the two
    partial energies separately can otherwise split one level in two."""
    keys = sorted(grams)
    energies, out = [], []
    for e in keys:
        if energies and e - energies[-1][-1] <= tol * max(1.0, abs(e)):
            energies[-1].append(e)
            out[-1] = out[-1] + grams[e]
        else:
            energies.append([e])
            out.append(grams[e])
    return np.array([float(np.mean(g)) for g in energies]), np.stack(out)


def _level_grams_generic(h, states):
    grams: dict[float, np.ndarray] = {}
    S = states.shape[0]
    for s in range(S):
        energies, comps = energy_resolve(h, states[s])
        for e, c in zip(energies, comps):
            key = round(float(e), 10)
            grams.setdefault(key, np.zeros((S, S), dtype=complex))[:, s] = states.conj() @ c
    energies = np.array(sorted(grams))
    return energies, np.stack([grams[e] for e in energies])


def factor_levels(energies, grams, rank_tol: float = 1e-10):
    """Turn per-level Gram matrices into overlaps with an orthonormal basis of
    each eigenspace's reachable part.

    Returns ``(eigenvalues, X)`` where ``X[s, m] = <s|E_m>`` for basis vectors
    |E_m> spanning P_k applied to the states; eigenvalues repeat once per
    basis vector. ``X[:, cols_k] @ X[:, cols_k]^dagger`` reproduces ``grams[k]``.
    """
    vals, cols = [], []
    for e, g in zip(energies, grams):
        g = (g + g.conj().T) / 2
        w, u = np.linalg.eigh(g)
        keep = w > rank_tol * max(1.0, w.max(initial=0.0))
        # G = u w u^dagger = X X^dagger with X = u sqrt(w)
        cols.append(u[:, keep] * np.sqrt(w[keep]))
        vals.extend([e] * int(keep.sum()))
    return np.asarray(vals), np.concatenate(cols, axis=1)
