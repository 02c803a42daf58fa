"""Filtered matrices, Frobenius landscape, search-and-block and SVD multiplicities."""
from __future__ import annotations

import csv
import json
import logging
import math
from dataclasses import asdict, dataclass, field

import finufft
import numpy as np

from .acquisition import SignalTensor, filter_transform

log = logging.getLogger(__name__)

MEMORY_BUDGET = 10**8  # complex numbers kept in memory for cached G(theta_j)


@dataclass(frozen=True)
class QfamesConfig:
    N: int
    T: float
    sigma: float = 1.0
    I_tilde: int = 1
    tau: float = 0.3
    q: float = 0.005
    alpha: float = 5.0
    truncation: str = "atom"

    def __post_init__(self):
        checks = {
            "N >= 1": self.N >= 1,
            "T > 0": self.T > 0,
            "sigma > 0": self.sigma > 0,
            "I_tilde >= 1": self.I_tilde >= 1,
            "tau >= 0": self.tau >= 0,
            "q > 0": self.q > 0,
            "alpha > 0": self.alpha > 0,
            "truncation in (atom, conditional)": self.truncation in ("atom", "conditional"),
        }
        bad = [k for k, ok in checks.items() if not ok]
        if bad:
            raise ValueError("invalid QfamesConfig: violates " + ", ".join(bad))

    @property
    def grid_step(self) -> float:
        return self.q / self.T

    @property
    def block_radius(self) -> float:
        return self.alpha / self.T

    @property
    def n_grid(self) -> int:
        """J = floor(2 pi T / q); the grid holds J + 1 points (j = 0..J)."""
        return math.floor(2 * math.pi * self.T / self.q)


@dataclass(eq=False)
class Landscape:
    grid: np.ndarray
    values: np.ndarray
    matrices: np.ndarray | None = None  # (J+1, L, R) when it fits the budget

    def to_csv(self, path, norm_scale: float = 1.0) -> None:
        with open(path, "w", newline="") as fh:
            w = csv.writer(fh)
            w.writerow(["theta", "theta_physical", "frobenius_norm"])
            for th, v in zip(self.grid, self.values):
                w.writerow([repr(float(th)), repr(float(th / norm_scale)), repr(float(v))])


@dataclass(eq=False)
class ClusterEstimate:
    theta_star: float
    multiplicity: int
    singular_values: np.ndarray
    block_interval: tuple[float, float]
    u: np.ndarray = field(repr=False, default=None)
    vh: np.ndarray = field(repr=False, default=None)
    g: np.ndarray = field(repr=False, default=None)

    def to_json(self, norm_scale: float = 1.0) -> dict:
        return {
            "theta_star": self.theta_star,
            "theta_star_physical": self.theta_star / norm_scale,
            "multiplicity": self.multiplicity,
            "singular_values": [float(s) for s in self.singular_values],
            "block": list(self.block_interval),
        }


@dataclass(eq=False)
class DodsEstimate:
    clusters: list
    discarded: list
    config: QfamesConfig
    norm_scale: float = 1.0
    short_search: bool = False  # fewer than I_tilde candidates were available

    @property
    def total_multiplicity(self) -> int:
        return sum(c.multiplicity for c in self.clusters)

    @property
    def centers(self) -> list:
        return [c.theta_star for c in self.clusters]

    def atoms(self) -> list:
        return [(c.theta_star, c.multiplicity) for c in self.clusters]

    def to_json(self) -> dict:
        return {
            "clusters": [c.to_json(self.norm_scale) for c in self.clusters],
            "discarded": [c.to_json(self.norm_scale) for c in self.discarded],
            "total_multiplicity": self.total_multiplicity,
            "short_search": self.short_search,
            "config": asdict(self.config),
            "norm_scale": self.norm_scale,
        }

    def save(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.to_json(), fh, indent=2)


def _flat(tensor: SignalTensor) -> tuple[np.ndarray, np.ndarray]:
    L, R, N = tensor.data.shape
    if N == 0:
        raise ValueError("empty tensor")
    return tensor.data.reshape(L * R, N), tensor.times.times


def filtered_matrix(tensor: SignalTensor, theta) -> np.ndarray:
    """G(theta)[l, r] = (1/N) sum_n Z[l, r, n] exp(i theta t_n).

    Scalar theta gives an L x R matrix; an array of k angles gives (k, L, R).
    """
    L, R, N = tensor.data.shape
    z, t = _flat(tensor)
    th = np.atleast_1d(np.asarray(theta, dtype=float))
    g = (z @ np.exp(1j * np.outer(t, th))) / N
    g = g.T.reshape(th.size, L, R)
    return g[0] if np.ndim(theta) == 0 else g


def expected_filtered_matrix(eigenvalues, phi, psi, theta, T, sigma, truncation="atom") -> np.ndarray:
    """E G(theta) = sum_m Phi[:, m] F(theta - lambda_m) Psi[:, m]^dagger with F the
    sampler's characteristic function."""
    f = filter_transform(theta - np.asarray(eigenvalues), T, sigma, truncation)
    return (phi * f) @ psi.conj().T


def _grid(config: QfamesConfig) -> np.ndarray:
    J = config.n_grid
    if J < 1:
        raise ValueError(f"q = {config.q} too large: J = floor(2 pi T / q) = 0")
    return -math.pi + np.arange(J + 1) * config.grid_step


def landscape(tensor: SignalTensor, config: QfamesConfig, method: str = "nufft",
              memory_budget: int = MEMORY_BUDGET) -> Landscape:
    """||G(theta_j)||_F on theta_j = -pi + j q / T, j = 0..J.

    ``nufft`` evaluates all grid points at once with a type-1 nonuniform FFT
    (relative accuracy 1e-12); ``direct`` sums explicitly in chunks.
    """
    grid = _grid(config)
    L, R, N = tensor.data.shape
    z, t = _flat(tensor)
    K = grid.size
    keep = K * L * R <= memory_budget
    rows = max(1, memory_budget // K)
    sq = np.zeros(K)
    mats = np.empty((L * R, K), dtype=complex) if keep else None
    if method == "nufft":
        # exp(i theta_j t) = exp(i (theta_0 + off dtheta) t) exp(i k dtheta t), k = j - off
        modes = K + (K % 2)
        off = modes // 2
        x = np.mod(config.grid_step * t + math.pi, 2 * math.pi) - math.pi
        weights = np.exp(1j * (grid[0] + off * config.grid_step) * t)
        for s in range(0, L * R, rows):
            c = np.ascontiguousarray(z[s : s + rows] * weights)
            f = finufft.nufft1d1(x, c, modes, isign=1, eps=1e-12)
            f = np.atleast_2d(f)[:, :K] / N
            sq += (np.abs(f) ** 2).sum(axis=0)
            if keep:
                mats[s : s + rows] = f
    elif method == "direct":
        step = max(1, 2**22 // max(N, 1))
        for a in range(0, K, step):
            f = z @ np.exp(1j * np.outer(t, grid[a : a + step])) / N
            sq[a : a + step] = (np.abs(f) ** 2).sum(axis=0)
            if keep:
                mats[:, a : a + step] = f
    else:
        raise ValueError("method must be 'nufft' or 'direct'")
    matrices = mats.T.reshape(K, L, R) if keep else None
    return Landscape(grid, np.sqrt(sq), matrices)


def search_and_block(land: Landscape, I_tilde: int, alpha: float, T: float):
    """Pick the highest unblocked grid point, block (theta* - alpha/T, theta* + alpha/T),
    repeat. Returns (thetas in selection order, indices, short) where ``short``
    is True if the grid ran out before I_tilde picks."""
    if land.grid.size == 0:
        raise ValueError("empty landscape")
    radius = alpha / T
    open_ = np.ones(land.grid.size, dtype=bool)
    masked = land.values.astype(float).copy()
    picks = []
    while len(picks) < I_tilde and open_.any():
        masked[~open_] = -np.inf
        j = int(np.argmax(masked))  # first maximum: lowest theta wins ties
        picks.append(j)
        open_ &= ~(np.abs(land.grid - land.grid[j]) < radius)
        open_[j] = False
    thetas = [float(land.grid[j]) for j in picks]
    return thetas, picks, len(picks) < I_tilde


def multiplicities(tensor: SignalTensor, thetas, tau: float, alpha: float = 0.0, T: float = 1.0):
    """SVD of G(theta*) for each candidate; m = #{singular values > tau}.

    Returns (kept, discarded) lists of ClusterEstimate.
    """
    if tau < 0:
        raise ValueError("tau must be >= 0")
    kept, dropped = [], []
    for th in thetas:
        g = filtered_matrix(tensor, th)
        if not np.isfinite(g).all():
            raise FloatingPointError(f"non-finite G({th})")
        u, s, vh = np.linalg.svd(g)
        m = int((s > tau).sum())
        est = ClusterEstimate(th, m, s, (th - alpha / T, th + alpha / T), u, vh, g)
        (kept if m > 0 else dropped).append(est)
    return kept, dropped


def run_qfames(tensor: SignalTensor, config: QfamesConfig, norm_scale: float = 1.0,
               method: str = "nufft") -> DodsEstimate:
    land = landscape(tensor, config, method=method)
    thetas, _, short = search_and_block(land, config.I_tilde, config.alpha, config.T)
    if short:
        log.warning("only %d of %d candidates found before the grid was fully blocked", len(thetas), config.I_tilde)
    kept, dropped = multiplicities(tensor, thetas, config.tau, config.alpha, config.T)
    kept.sort(key=lambda c: c.theta_star)
    return DodsEstimate(kept, dropped, config, norm_scale, short)


def default_params(delta_guess: float, p_tail_guess: float, L: int, R: int, K_guess: int = 1):
    """Heuristic parameter choice; returns (config, report).

    The report pairs each value with the asymptotic condition it instantiates
    and flags an overlapping block radius (alpha / T >= delta).
    """
    if delta_guess <= 0:
        raise ValueError("delta_guess must be positive")
    LR = L * R
    sigma = 1.0
    T = max(10.0 / delta_guess, 1.0)
    tau = max(2 * p_tail_guess, 0.1 * math.sqrt(LR))
    q = max(p_tail_guess / ((1 + sigma) * math.sqrt(K_guess * LR)), 1e-4)
    alpha = max(5.0, math.log(K_guess * LR / max(p_tail_guess, 1e-3)))
    N = max(2000, math.ceil(4 * LR / max(p_tail_guess, 0.1) ** 2))
    cfg = QfamesConfig(N=N, T=T, sigma=sigma, I_tilde=K_guess, tau=tau, q=q, alpha=alpha)
    warnings = []
    if alpha / T >= delta_guess:
        warnings.append(f"block radius alpha/T = {alpha / T:.4g} >= delta = {delta_guess:.4g}: adjacent clusters may be blocked")
    for w in warnings:
        log.warning(w)
    report = {
        "T": {"value": T, "condition": "T = Omega~(1/Delta)"},
        "N": {"value": N, "condition": "N = Omega~(L R p_tail^-2)"},
        "tau": {"value": tau, "condition": "tau = Theta(p_tail), at least 0.1 sqrt(L R)"},
        "q": {"value": q, "condition": "q = O(p_tail / ((1 + sigma) sqrt(|D| L R))), floor 1e-4"},
        "alpha": {"value": alpha, "condition": "alpha = O(Delta T), alpha >= log(K L R / p_tail)"},
        "sigma": {"value": sigma, "condition": "sigma = Theta(1)"},
        "warnings": warnings,
    }
    return cfg, report


def _expand(atoms) -> np.ndarray:
    pts = []
    for x, m in atoms:
        pts.extend([float(x)] * int(m))
    return np.sort(np.asarray(pts))


def wasserstein1(estimate, exact_atoms) -> float:
    """W1 between two atomic measures on the line, each a list of (location, mass).

    Measures of unequal total mass give inf (logged as a mass mismatch).
    """
    a = _expand(estimate.atoms() if isinstance(estimate, DodsEstimate) else estimate)
    b = _expand(exact_atoms)
    if a.size != b.size:
        log.warning("mass mismatch: %d vs %d", a.size, b.size)
        return math.inf
    if a.size == 0:
        return 0.0
    return float(np.abs(a - b).mean())


def save_singular_values(path, estimate: DodsEstimate) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["theta_star", "theta_star_physical", "index", "singular_value", "above_tau"])
        for c in estimate.clusters + estimate.discarded:
            for k, s in enumerate(c.singular_values):
                w.writerow([repr(c.theta_star), repr(c.theta_star / estimate.norm_scale), k, repr(float(s)), int(s > estimate.config.tau)])
