"""Oracle ground truth, the single-state search baseline, the no-go construction
and location error metrics."""
from __future__ import annotations

import logging
import math
from dataclasses import dataclass, replace

import numpy as np

from .acquisition import SignalTensor
from .core import QfamesConfig, landscape, search_and_block
from .stateprep import overlap_scores

log = logging.getLogger(__name__)


@dataclass
class GroundTruth:
    centers: list  # lambda*_i, midpoint of each cluster
    members: list  # eigenvalues of each cluster
    indices: list  # eigenvector indices of each cluster
    dominant: tuple
    delta: float  # realized minimum gap between clusters
    width: float  # realized maximum cluster width
    p_tail: float
    valid: bool = True

    @property
    def multiplicities(self) -> list:
        return [len(m) for m in self.members]

    def atoms(self) -> list:
        return list(zip(self.centers, self.multiplicities))


def dominant_set(p: np.ndarray, c_p: float) -> tuple:
    """Shortest run of indices, taken in decreasing p, with p_min >= c_p * p_tail.

    Longer runs eventually satisfy the test trivially once the remaining tail
    is exponentially small, so the first run that passes is the meaningful one.
    """
    order = np.argsort(-p, kind="stable")
    total = p.sum()
    head = 0.0
    for k, m in enumerate(order, start=1):
        if p[m] <= 0:
            break
        head += p[m]
        if p[m] >= c_p * max(total - head, 0.0):
            return tuple(int(i) for i in order[:k])
    return ()


def brute_force_dods(spectrum, phi, psi, c_p: float, delta: float, width: float, tol: float = 1e-12) -> GroundTruth:
    """Dominant set from overlap scores, then single-linkage clusters with gap delta.

    ``spectrum`` is a complete Spectrum or a plain array of eigenvalues whose
    order matches the columns of Phi and Psi.
    """
    if not getattr(spectrum, "complete", True):
        raise ValueError("oracle needs the complete spectrum")
    if delta <= 0 or width < 0 or width >= delta:
        raise ValueError("need 0 <= width < delta")
    p = overlap_scores(phi, psi)
    p = np.where(p > tol, p, 0.0)
    dom = dominant_set(p, c_p)
    if not dom:
        log.warning("no dominant set satisfies p_min >= C_p p_tail")
        return GroundTruth([], [], [], (), math.inf, 0.0, float(p.sum()), valid=False)
    p_tail = float(p.sum() - p[list(dom)].sum())
    lam = np.asarray(getattr(spectrum, "eigenvalues", spectrum), dtype=float)
    idx = sorted(dom, key=lambda m: (lam[m], m))
    groups = [[idx[0]]]
    for m in idx[1:]:
        if lam[m] - lam[groups[-1][-1]] < delta:
            groups[-1].append(m)
        else:
            groups.append([m])
    members = [[float(lam[m]) for m in g] for g in groups]
    centers = [(g[0] + g[-1]) / 2 for g in members]
    widths = [g[-1] - g[0] for g in members]
    gaps = [members[i + 1][0] - members[i][-1] for i in range(len(members) - 1)]
    valid = max(widths) <= width
    if not valid:
        log.warning("cluster width %.3g exceeds delta_width %.3g", max(widths), width)
    return GroundTruth(centers, members, groups, tuple(dom), min(gaps, default=math.inf),
                       max(widths), max(p_tail, 0.0), valid)


def qmegs_run(tensor: SignalTensor, config: QfamesConfig, entry=(0, 0)) -> list:
    """Single-state Gaussian-filter search: search-and-block on |G_{l,l}(theta)|.

    Returns sorted cluster centers; there is no multiplicity stage.
    """
    l, r = entry
    sub = tensor.restrict([l], [r])
    land = landscape(sub, replace(config, N=sub.data.shape[2]))
    thetas, _, _ = search_and_block(land, config.I_tilde, config.alpha, config.T)
    return sorted(thetas)


class FullRank(ValueError):
    """The overlap block has full column rank; no alternative multiplicity exists."""


def nogo_construct(phi, psi, dominant, rank_tol: float = 1e-10):
    """Alternative overlap matrices with a smaller degenerate subspace and identical data.

    With Phi_D = U S V^dagger of rank k < |D|, the cluster columns are rotated
    by V and only the first k are kept, so Phi~ Psi~^dagger = Phi_D Psi_D^dagger.
    Column k is the padding eigenvector: zero for Phi~, and for Psi~ the
    amount that restores unit row norms. Columns outside D follow unchanged.
    Returns (Phi~, Psi~, k); the padding column needs its own eigenvalue away
    from the cluster.
    """
    phi, psi = np.asarray(phi, dtype=complex), np.asarray(psi, dtype=complex)
    d = list(dominant)
    rest = [m for m in range(phi.shape[1]) if m not in set(d)]
    a, b = phi[:, d], psi[:, d]
    _, s, vh = np.linalg.svd(a)
    k = int((s > rank_tol * max(s.max(initial=0.0), 1e-300)).sum())
    if k >= len(d):
        raise FullRank(f"Phi restricted to the cluster has full rank {k}; no construction")
    v = vh.conj().T
    phi_t = np.hstack([(a @ v)[:, :k], np.zeros((a.shape[0], 1)), phi[:, rest]])
    psi_t = np.hstack([(b @ v)[:, :k], np.zeros((b.shape[0], 1)), psi[:, rest]])
    used = (np.abs(psi_t) ** 2).sum(axis=1)
    psi_t[:, k] = np.sqrt(np.clip(1 - used, 0, None))
    return phi_t, psi_t, k


def nogo_eigenvalues(eigenvalues, dominant, k: int, pad_energy: float) -> np.ndarray:
    """Eigenvalue list matching the column order of ``nogo_construct``.

    The rotation only preserves the signal inside one degenerate level, so the
    indices in ``dominant`` must share a single eigenvalue.
    """
    lam = np.asarray(eigenvalues, dtype=float)
    d = list(dominant)
    if np.ptp(lam[d]) > 1e-12:
        raise ValueError("dominant indices must belong to one degenerate eigenvalue")
    rest = [m for m in range(lam.size) if m not in set(d)]
    return np.concatenate([np.full(k, lam[d[0]]), [pad_energy], lam[rest]])


def error_metric(estimated, truth) -> float:
    """max_i |theta*_i - lambda*_i| after sorted matching; inf on count mismatch."""
    est = np.sort(np.asarray(list(estimated), dtype=float))
    ref = np.sort(np.asarray(truth.centers if isinstance(truth, GroundTruth) else list(truth), dtype=float))
    if est.size != ref.size:
        log.warning("count mismatch: %d estimated vs %d true centers", est.size, ref.size)
        return math.inf
    if est.size == 0:
        return 0.0
    return float(np.abs(est - ref).max())
