"""Observable spectra inside a located cluster via a projected eigenproblem."""
from __future__ import annotations

import json
import logging
from dataclasses import dataclass

import numpy as np

from .acquisition import ObservableTensor
from .core import ClusterEstimate

log = logging.getLogger(__name__)

IMAG_WARNING = 0.05


@dataclass(eq=False)
class ProjectedPair:
    g_tilde: np.ndarray  # diag of the retained singular values
    g_tilde_O: np.ndarray
    theta_star: float
    multiplicity: int


@dataclass(eq=False)
class ObservableSpectrum:
    theta_star: float
    eigenvalues: np.ndarray  # real parts, ascending
    residual_imag: np.ndarray

    @property
    def range(self) -> tuple[float, float]:
        return observable_range(self)

    @property
    def suspicious(self) -> bool:
        return bool(self.residual_imag.size and self.residual_imag.max() > IMAG_WARNING)

    def to_json(self, norm_scale: float = 1.0) -> dict:
        return {
            "theta_star": self.theta_star,
            "theta_star_physical": self.theta_star / norm_scale,
            "eigenvalues": [float(x) for x in self.eigenvalues],
            "residual_imag": [float(x) for x in self.residual_imag],
            "range": list(self.range),
        }


def filtered_observable_matrix(tensor: ObservableTensor, theta) -> np.ndarray:
    """G^O(theta)[l, r] = (1/N) sum_n Z^O[l, r, n] exp(i theta (t_n - t'_n))."""
    L, R, N = tensor.data.shape
    if N == 0:
        raise ValueError("empty tensor")
    dt = tensor.times.times - tensor.times_prime.times
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    g = (tensor.data.reshape(L * R, N) @ np.exp(1j * np.outer(dt, th))) / N
    g = g.T.reshape(th.size, L, R)
    return g[0] if np.ndim(theta) == 0 else g


def projected_pair(cluster: ClusterEstimate, g_o: np.ndarray) -> ProjectedPair:
    """Restrict G and G^O to the top-m singular subspaces of G(theta*)."""
    m = cluster.multiplicity
    if m < 1 or cluster.u is None:
        raise ValueError("cluster has no retained singular subspace (m = 0)")
    u = cluster.u[:, :m]
    v = cluster.vh[:m].conj().T
    return ProjectedPair(
        np.diag(cluster.singular_values[:m]).astype(complex),
        u.conj().T @ g_o @ v,
        cluster.theta_star,
        m,
    )


def solve_generalized(pair: ProjectedPair) -> ObservableSpectrum:
    """Eigenvalues of g_tilde^-1 g_tilde_O; g_tilde is diagonal positive."""
    d = np.diag(pair.g_tilde).real
    if not (np.isfinite(pair.g_tilde_O).all() and np.isfinite(d).all()) or (d <= 0).any():
        raise FloatingPointError("projected matrices are not finite / positive")
    w = np.linalg.eigvals(pair.g_tilde_O / d[:, None])
    order = np.argsort(w.real, kind="stable")
    spec = ObservableSpectrum(pair.theta_star, w.real[order], np.abs(w.imag[order]))
    if spec.suspicious:
        log.warning("cluster at %.6g: residual imaginary part %.3g exceeds %.2g",
                    pair.theta_star, spec.residual_imag.max(), IMAG_WARNING)
    return spec


def observable_range(spectrum: ObservableSpectrum) -> tuple[float, float]:
    if spectrum.eigenvalues.size == 0:
        raise ValueError("empty spectrum")
    return float(spectrum.eigenvalues.min()), float(spectrum.eigenvalues.max())


def observable_spectra(tensor: ObservableTensor, clusters) -> list:
    return [solve_generalized(projected_pair(c, filtered_observable_matrix(tensor, c.theta_star)))
            for c in clusters if c.multiplicity > 0]


def save_observable(path, spectra, norm_scale: float = 1.0) -> None:
    with open(path, "w") as fh:
        json.dump([s.to_json(norm_scale) for s in spectra], fh, indent=2)
