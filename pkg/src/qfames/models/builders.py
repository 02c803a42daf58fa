"""Constructors for the three benchmark systems and the [-pi, pi] rescaling."""
from __future__ import annotations

import logging

import numpy as np

from .pauli import PauliSumHamiltonian, PauliTerm, single_site

log = logging.getLogger(__name__)

#: spectra are squeezed into [-MARGIN, MARGIN] so filters never see the +-pi wrap
SPECTRAL_MARGIN = 0.9 * np.pi
MAX_TORIC_QUBITS = 20


def build_illustrative():
    """Three-level toy system: H = diag(0, 0, 0.1) with three non-orthogonal
    initial states. Returns ``(H, Phi)``."""
    h = PauliSumHamiltonian(n_qubits=0, dense_matrix=np.diag([0.0, 0.0, 0.1]))
    phi = np.array([[1, 1, 1], [1, -1, 1], [1, 1, -1]], dtype=complex) / np.sqrt(3)
    return h, phi


def build_tfim(L: int, g: float) -> PauliSumHamiltonian:
    """Open transverse-field Ising chain H = -sum Z_i Z_{i+1} - g sum X_i."""
    if L < 1:
        raise ValueError("TFIM needs at least one site")
    if not np.isfinite(g):
        raise ValueError("coupling g must be finite")
    terms = []
    for i in range(L - 1):
        s = ["I"] * L
        s[i] = s[i + 1] = "Z"
        terms.append(PauliTerm(-1.0, "".join(s)))
    terms += [PauliTerm(-float(g), single_site("X", i, L)) for i in range(L)]
    return PauliSumHamiltonian(n_qubits=L, terms=tuple(terms))


def toric_lattice(rows: int, cols: int, boundary: str = "torus"):
    """Edge-qubit layout of a square-lattice toric code.

    ``rows`` is the periodic direction in both geometries. The torus is also
    periodic along ``cols``; the cylinder is open there with smooth edges, which
    adds one extra column of vertical edges. Returns ``(n_qubits, stars,
    plaquettes)`` with each stabilizer given as a sorted tuple of qubits.
    """
    if boundary not in ("torus", "cylinder"):
        raise ValueError(f"unknown boundary {boundary!r}")
    if rows < 2 or cols < 2:
        raise ValueError("toric lattices need rows >= 2 and cols >= 2")
    vcols = cols if boundary == "torus" else cols + 1

    def h(x, y):  # edge from vertex (x, y) to (x+1, y)
        return (y % rows) * cols + x % cols if boundary == "torus" else (y % rows) * cols + x

    def v(x, y):  # edge from vertex (x, y) to (x, y+1)
        return rows * cols + (y % rows) * vcols + (x % vcols)

    n = rows * cols + rows * vcols
    if n > MAX_TORIC_QUBITS:
        raise ValueError(
            f"{rows}x{cols} {boundary} needs {n} qubits; statevector runs are capped at "
            f"{MAX_TORIC_QUBITS}"
        )
    stars = []
    for y in range(rows):
        for x in range(vcols):
            edges = {v(x, y), v(x, y - 1)}
            if boundary == "torus":
                edges |= {h(x, y), h(x - 1, y)}
            else:
                if x < cols:
                    edges.add(h(x, y))
                if x > 0:
                    edges.add(h(x - 1, y))
            stars.append(tuple(sorted(edges)))
    plaquettes = []
    for y in range(rows):
        for x in range(cols):
            plaquettes.append(tuple(sorted({h(x, y), h(x, y + 1), v(x, y), v(x + 1, y)})))
    return n, stars, plaquettes


def build_toric(rows: int, cols: int, boundary: str = "torus") -> PauliSumHamiltonian:
    """Toric code H = -sum_v A_v - sum_p B_p on the edges of a rows x cols lattice."""
    n, stars, plaquettes = toric_lattice(rows, cols, boundary)
    terms = []
    for support, letter in [(s, "X") for s in stars] + [(p, "Z") for p in plaquettes]:
        chars = ["I"] * n
        for q in support:
            chars[q] = letter
        terms.append(PauliTerm(-1.0, "".join(chars)))
    return PauliSumHamiltonian(n_qubits=n, terms=tuple(terms), all_commuting=True)


def normalize_spectrum(h: PauliSumHamiltonian) -> PauliSumHamiltonian:
    """Rescale H so its spectrum sits inside [-0.9 pi, 0.9 pi].

    Uses the coefficient bound B = sum |c_j| (exact spectral radius for dense
    systems) and scales by 0.9 pi / B only when B exceeds 0.9 pi. The applied
    factor accumulates in ``norm_scale`` so physical energies are
    ``normalized / norm_scale``.
    """
    bound = h.coefficient_bound
    if bound == 0.0:
        log.warning("zero Hamiltonian: normalization is the identity")
        return h if h.zero_flag else _flagged(h)
    if bound <= SPECTRAL_MARGIN * (1 + 1e-12):
        return h
    return h.scaled(SPECTRAL_MARGIN / bound)


def _flagged(h: PauliSumHamiltonian) -> PauliSumHamiltonian:
    from dataclasses import replace

    return replace(h, zero_flag=True)
