"""Real- and imaginary-time evolution backends for statevectors."""
from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache

import numpy as np
import scipy.linalg as sla

from .pauli import PauliSumHamiltonian
from .spectrum import DENSE_LIMIT, eigendecompose, energy_resolve

BACKEND_KINDS = ("dense-eigen", "commuting-product", "krylov")


class BackendMismatch(ValueError):
    pass


class DegenerateOverlap(ArithmeticError):
    """Imaginary-time evolution annihilated the state."""


@dataclass(frozen=True)
class EvolutionBackend:
    kind: str = "dense-eigen"
    tol: float = 1e-10
    max_subspace: int = 40

    def __post_init__(self):
        if self.kind not in BACKEND_KINDS:
            raise ValueError(f"backend kind must be one of {BACKEND_KINDS}")

    def check(self, h: PauliSumHamiltonian):
        if self.kind == "commuting-product" and not h.all_commuting:
            raise BackendMismatch("commuting-product backend needs all terms to commute")
        if self.kind == "dense-eigen" and h.dim > DENSE_LIMIT:
            raise BackendMismatch(f"dense-eigen backend is limited to {DENSE_LIMIT} dimensions")


def default_backend(h: PauliSumHamiltonian) -> EvolutionBackend:
    if h.dim <= DENSE_LIMIT:
        return EvolutionBackend("dense-eigen")
    if h.all_commuting:
        return EvolutionBackend("commuting-product")
    return EvolutionBackend("krylov")


@lru_cache(maxsize=8)
def _eig(h: PauliSumHamiltonian):
    return eigendecompose(h)


def _apply_function(h, backend, state, fn, imaginary_factor):
    """Apply f(H) to ``state`` where f(x) = fn(x) on the eigenvalues;
    ``imaginary_factor`` is the complex z with f(x) = exp(z x) for the
    term-product and Krylov routes."""
    if backend.kind == "dense-eigen":
        spec = _eig(h)
        v = spec.eigenvectors
        coeffs = v.conj().T @ state
        f = fn(spec.eigenvalues)
        return v @ (f[:, None] * coeffs if coeffs.ndim == 2 else f * coeffs)
    if backend.kind == "commuting-product":
        out = np.array(state, dtype=complex, copy=True)
        for j, term in enumerate(h.terms):
            a = imaginary_factor * term.coefficient
            # exp(a P) = cosh(a) I + sinh(a) P for any Pauli string P
            out = np.cosh(a) * out + np.sinh(a) * h.pauli(j, out)
        return out
    return lanczos_expm(h, state, imaginary_factor, tol=backend.tol, max_subspace=backend.max_subspace)


def evolve(h: PauliSumHamiltonian, backend: EvolutionBackend, state: np.ndarray, t: float):
    """exp(-iHt) |state>; ``state`` may be a vector or a (dim, k) block."""
    backend.check(h)
    if not np.isfinite(t):
        raise ValueError("evolution time must be finite")
    state = np.asarray(state, dtype=complex)
    if t == 0:
        return state.copy()
    return _apply_function(h, backend, state, lambda x: np.exp(-1j * x * t), -1j * t)


def imaginary_evolve(h: PauliSumHamiltonian, backend: EvolutionBackend, state, beta: float):
    """Normalized exp(-beta H)|state> together with c = ||exp(-beta H)|state>||.

    ``beta`` may be negative (used for the exp(+hH) step of ancilla-free
    reconstruction). The caller must pass a normalized state.
    """
    backend.check(h)
    state = np.asarray(state, dtype=complex)
    if beta == 0:
        return state.copy(), 1.0
    out = _apply_function(h, backend, state, lambda x: np.exp(-beta * x), -beta)
    c = float(np.linalg.norm(out))
    if c < 1e-300:
        raise DegenerateOverlap("state annihilated by imaginary-time evolution")
    return out / c, c


def lanczos_expm(h, state, z, tol=1e-10, max_subspace=40):
    """exp(z H) v by Lanczos projection with time splitting.

    Each substep covers a slice of |z| small enough that a ``max_subspace``
    Krylov space converges; the substep is accepted once the a-posteriori
    residual estimate (last Lanczos coefficient times the corner entry of the
    small exponential) drops below ``tol`` relative to the vector norm.
    """
    v = np.asarray(state, dtype=complex)
    if v.ndim == 2:
        return np.stack([lanczos_expm(h, v[:, k], z, tol, max_subspace) for k in range(v.shape[1])], 1)
    hnorm = max(h.coefficient_bound, 1e-300)
    remaining = 1.0
    # |z| ||H|| per substep kept near 20 so the Krylov series converges well below m = 40
    step = min(1.0, 20.0 / (abs(z) * hnorm))
    while remaining > 0:
        dt = min(step, remaining)
        try:
            v = _lanczos_step(h, v, z * dt, tol, max_subspace)
        except _NotConverged:
            step /= 2
            continue
        remaining -= dt
    return v


class _NotConverged(RuntimeError):
    pass


def _lanczos_step(h, v, z, tol, m):
    beta0 = np.linalg.norm(v)
    if beta0 == 0:
        return v.copy()
    basis = [v / beta0]
    alphas, betas = [], []
    for j in range(m):
        w = h.matvec(basis[j])
        a = np.vdot(basis[j], w).real
        w = w - a * basis[j] - (betas[-1] * basis[j - 1] if j else 0)
        # full reorthogonalization keeps the small basis orthonormal
        for b in basis:
            w -= np.vdot(b, w) * b
        alphas.append(a)
        b_next = np.linalg.norm(w)
        tri = np.diag(alphas) + np.diag(betas, 1) + np.diag(betas, -1)
        small = sla.expm(z * tri)[:, 0]
        err = b_next * abs(small[-1])
        if b_next < 1e-14 or err < tol:
            return beta0 * (np.stack(basis, 1) @ small)
        betas.append(b_next)
        basis.append(w / b_next)
    raise _NotConverged
