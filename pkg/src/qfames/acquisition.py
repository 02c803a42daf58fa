"""Evolution-time sampling and synthesis of generalized Hadamard-test data."""
from __future__ import annotations

import json
import math
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np
from scipy.special import erf, ndtr, ndtri, wofz

from .models import PauliSumHamiltonian, Spectrum, evolve, imaginary_evolve
from .models.evolution import EvolutionBackend
from .stateprep import StateSet, overlap_matrices

TRUNCATIONS = ("atom", "conditional")


# --------------------------------------------------------------------------
# evolution times


@dataclass(frozen=True, eq=False)
class TimeSamples:
    times: np.ndarray
    T: float
    sigma: float
    seed: int | None = None
    truncation: str = "atom"

    def __post_init__(self):
        if self.T <= 0 or self.sigma <= 0:
            raise ValueError("T and sigma must be positive")
        t = np.asarray(self.times, dtype=float)
        if np.abs(t).max(initial=0.0) > self.sigma * self.T * (1 + 1e-12):
            raise ValueError("sample exceeds the truncation radius sigma*T")
        object.__setattr__(self, "times", t)

    def __len__(self):
        return self.times.size

    @property
    def t_max(self) -> float:
        return self.sigma * self.T


def gaussian_tail_mass(sigma: float) -> float:
    """P(|s| > sigma T) for s ~ N(0, 2T^2); the weight of the atom at t = 0."""
    return float(1.0 - erf(sigma / 2.0))


def sample_times(T: float, sigma: float, N: int, seed, truncation: str = "atom") -> TimeSamples:
    """Draw N evolution times from the truncated Gaussian with density
    exp(-t^2 / 4T^2) / (2 T sqrt(pi)).

    ``truncation="atom"`` maps draws with |s| > sigma T to t = 0, reproducing a
    point mass at zero equal to the cut-off tail. ``"conditional"`` redraws them
    instead, i.e. samples the Gaussian conditioned on |t| <= sigma T.
    """
    if T <= 0 or sigma <= 0 or N < 1:
        raise ValueError("need T > 0, sigma > 0, N >= 1")
    if truncation not in TRUNCATIONS:
        raise ValueError(f"truncation must be one of {TRUNCATIONS}")
    rng = np.random.default_rng(seed)
    s = rng.normal(0.0, math.sqrt(2.0) * T, N)
    out = np.abs(s) > sigma * T
    if truncation == "atom":
        s[out] = 0.0
    else:
        while out.any():
            s[out] = rng.normal(0.0, math.sqrt(2.0) * T, out.sum())
            out = np.abs(s) > sigma * T
    return TimeSamples(s, float(T), float(sigma), seed if isinstance(seed, int) else None, truncation)


def quantile_times(T: float, sigma: float, N: int, truncation: str = "atom") -> TimeSamples:
    """Deterministic stratified nodes t_n = F^{-1}((n + 1/2) / N) of the same
    truncated density.

    The empirical filter built on these nodes converges like a midpoint rule
    rather than at the Monte-Carlo rate, which makes exact-data runs free of
    sampling noise.
    """
    if T <= 0 or sigma <= 0 or N < 1:
        raise ValueError("need T > 0, sigma > 0, N >= 1")
    if truncation not in TRUNCATIONS:
        raise ValueError(f"truncation must be one of {TRUNCATIONS}")
    u = (np.arange(N) + 0.5) / N
    scale = math.sqrt(2.0) * T
    c = float(ndtr(-sigma / math.sqrt(2.0)))  # mass below -sigma T
    if truncation == "conditional":
        t = scale * ndtri(c + u * (1.0 - 2.0 * c))
    else:
        lo, hi = 0.5 - c, 0.5 + c  # the atom occupies [lo, hi)
        t = np.zeros(N)
        t[u < lo] = scale * ndtri(u[u < lo] + c)
        t[u >= hi] = scale * ndtri(u[u >= hi] - c)
    t = np.clip(t, -sigma * T, sigma * T)
    return TimeSamples(t, float(T), float(sigma), None, truncation)


def filter_transform(x, T: float, sigma: float, truncation: str = "atom") -> np.ndarray:
    """Characteristic function E[exp(i x t)] of the truncated time density.

    The Gaussian part over [-sigma T, sigma T] equals
    exp(-x^2 T^2) Re erf(sigma/2 - i x T), evaluated through the Faddeeva
    function so large x T cannot overflow.
    """
    x = np.asarray(x, dtype=float)
    a, b = sigma / 2.0, x * T
    inner = np.real(np.exp(-(b**2)) - np.exp(-(a**2)) * np.exp(2j * a * b) * wofz(b + 1j * a))
    mass = erf(a)
    if truncation == "atom":
        return (1.0 - mass) + inner
    if truncation == "conditional":
        return inner / mass
    raise ValueError(f"truncation must be one of {TRUNCATIONS}")


# --------------------------------------------------------------------------
# data tensors


@dataclass(frozen=True, eq=False)
class SignalTensor:
    """L x R x N samples of <phi_l| exp(-iH t_n) |psi_r>."""

    data: np.ndarray
    mode: str
    times: TimeSamples
    shots_per_entry: int = 0

    def __post_init__(self):
        if self.mode not in ("exact", "shot"):
            raise ValueError("mode must be 'exact' or 'shot'")
        d = np.asarray(self.data, dtype=complex)
        if d.ndim != 3 or d.shape[2] != len(self.times):
            raise ValueError("data must have shape (L, R, N) matching the time samples")
        object.__setattr__(self, "data", d)

    @property
    def shape(self):
        return self.data.shape

    def restrict(self, rows, cols) -> "SignalTensor":
        return SignalTensor(self.data[np.ix_(rows, cols)], self.mode, self.times, self.shots_per_entry)


@dataclass(frozen=True, eq=False)
class ObservableTensor:
    """Samples of <phi_l| exp(iH t'_n) O exp(-iH t_n) |psi_r>."""

    data: np.ndarray
    mode: str
    times: TimeSamples
    times_prime: TimeSamples
    pairing: str = "iid-pairs"
    observable: str = "O"
    shots_per_entry: int = 0

    def __post_init__(self):
        d = np.asarray(self.data, dtype=complex)
        if d.ndim != 3 or d.shape[2] != len(self.times) or len(self.times) != len(self.times_prime):
            raise ValueError("data must be (L, R, N) with N paired (t, t') samples")
        if self.mode not in ("exact", "shot"):
            raise ValueError("mode must be 'exact' or 'shot'")
        object.__setattr__(self, "data", d)


def signal_from_overlaps(eigenvalues, phi, psi, times) -> np.ndarray:
    """Z[l, r, n] = sum_m Phi[l, m] exp(-i lambda_m t_n) conj(Psi[r, m])."""
    t = times.times if isinstance(times, TimeSamples) else np.asarray(times, dtype=float)
    keep = (np.abs(phi).max(axis=0) > 0) & (np.abs(psi).max(axis=0) > 0)
    phase = np.exp(-1j * np.outer(np.asarray(eigenvalues)[keep], t))
    return np.einsum("lm,mn,rm->lrn", phi[:, keep], phase, psi[:, keep].conj(), optimize=True)


def exact_signal(source, left: StateSet, right: StateSet, times: TimeSamples) -> SignalTensor:
    """Noise-free data tensor.

    ``source`` is either a ``Spectrum`` (eigenbasis sum) or a pair
    ``(hamiltonian, backend)`` for direct time evolution of every right state.
    """
    if isinstance(source, Spectrum):
        phi, psi = overlap_matrices(source, left, right)
        data = signal_from_overlaps(source.eigenvalues, phi, psi, times)
    else:
        h, backend = source
        data = np.empty((len(left), len(right), len(times)), dtype=complex)
        bra = left.states.conj()
        for n, t in enumerate(times.times):
            data[:, :, n] = bra @ evolve(h, backend, right.states.T, t)
    return SignalTensor(data, "exact", times)


def _entry_rng(seed, stream: int, l: int, r: int):
    # keyed by (seed, stream, l, r): any evaluation order gives the same draws
    return np.random.default_rng([int(seed), stream, l, r])


def _hadamard_outcomes(exact: np.ndarray, shots: int, seed, stream: int) -> np.ndarray:
    if np.abs(exact).max(initial=0.0) > 1 + 1e-9:
        raise ValueError("invalid amplitude: |Z| > 1 cannot come from a Hadamard test")
    if shots < 1:
        raise ValueError("shots_per_entry must be >= 1")
    L, R, N = exact.shape
    out = np.empty_like(exact)
    for l in range(L):
        for r in range(R):
            u = _entry_rng(seed, stream, l, r).random((N, shots, 2))
            z = exact[l, r][:, None]
            # W = I circuit estimates Re Z, W = S^dagger circuit estimates Im Z
            x = np.where(u[..., 0] < (1 + z.real) / 2, 1.0, -1.0)
            y = np.where(u[..., 1] < (1 + z.imag) / 2, 1.0, -1.0)
            out[l, r] = (x + 1j * y).mean(axis=1)
    return out


def shot_sample(tensor: SignalTensor, shots_per_entry: int = 1, seed=0) -> SignalTensor:
    """Replace each exact entry by the average of single-shot outcomes X + iY
    with X, Y in {+1, -1} and E[X + iY] equal to the exact value."""
    if tensor.mode != "exact":
        raise ValueError("shot_sample needs an exact-mode tensor")
    data = _hadamard_outcomes(tensor.data, shots_per_entry, seed, stream=0)
    return SignalTensor(data, "shot", tensor.times, shots_per_entry)


def sample_observable_times(T, sigma, N, seed, pairing="iid-pairs", truncation="atom"):
    """(t, t') pairs drawn with filter width T / sqrt 2.

    ``product-grid`` draws sqrt(N) times per axis and enumerates all pairs;
    N must then be a perfect square.
    """
    width = T / math.sqrt(2.0)
    ss = np.random.SeedSequence(seed)
    s1, s2 = (int(c.generate_state(1)[0]) for c in ss.spawn(2))
    if pairing == "iid-pairs":
        return (
            sample_times(width, sigma, N, s1, truncation),
            sample_times(width, sigma, N, s2, truncation),
        )
    if pairing == "product-grid":
        n = math.isqrt(N)
        if n * n != N:
            raise ValueError("product-grid pairing needs N to be a perfect square")
        a = sample_times(width, sigma, n, s1, truncation)
        b = sample_times(width, sigma, n, s2, truncation)
        tt, tp = np.meshgrid(a.times, b.times, indexing="ij")
        return (
            TimeSamples(tt.ravel(), width, sigma, None, truncation),
            TimeSamples(tp.ravel(), width, sigma, None, truncation),
        )
    raise ValueError("pairing must be 'iid-pairs' or 'product-grid'")


def is_unitary(o: np.ndarray, tol: float = 1e-10) -> bool:
    return np.abs(o @ o.conj().T - np.eye(o.shape[0])).max() < tol


def _observable_matrix(o):
    if isinstance(o, PauliSumHamiltonian):
        return o.to_dense()
    return np.asarray(o, dtype=complex)


def observable_exact_signal(
    source,
    left: StateSet,
    right: StateSet,
    observable,
    times: TimeSamples,
    times_prime: TimeSamples,
    pairing: str = "iid-pairs",
    name: str = "O",
    require_unitary: bool = True,
) -> ObservableTensor:
    """Noise-free observable tensor; ``source`` as in ``exact_signal``.

    ``observable`` is a Hermitian matrix or a Pauli-sum operator. Unitarity is
    required unless ``require_unitary`` is False (exact-mode only use).
    """
    o = _observable_matrix(observable)
    if np.abs(o - o.conj().T).max() > 1e-10:
        raise ValueError("observable must be Hermitian")
    if require_unitary and not is_unitary(o):
        raise ValueError("observable must be unitary for Hadamard-test data")
    t, tp = times.times, times_prime.times
    L, R = len(left), len(right)
    data = np.empty((L, R, t.size), dtype=complex)
    if isinstance(source, Spectrum):
        phi, psi = overlap_matrices(source, left, right)
        v, lam = source.eigenvectors, source.eigenvalues
        o_eig = v.conj().T @ o @ v
        # cache O exp(-iHt) Psi^dagger per distinct t
        ut, inv_t = np.unique(t, return_inverse=True)
        utp, inv_tp = np.unique(tp, return_inverse=True)
        right_part = np.stack(
            [o_eig @ (np.exp(-1j * lam * s)[:, None] * psi.conj().T) for s in ut]
        )  # (n_t, M, R)
        left_part = phi[None, :, :] * np.exp(1j * np.outer(utp, lam))[:, None, :]  # (n_t', L, M)
        for n in range(t.size):
            data[:, :, n] = left_part[inv_tp[n]] @ right_part[inv_t[n]]
    else:
        h, backend = source
        for n in range(t.size):
            a = evolve(h, backend, left.states.T, tp[n])
            b = evolve(h, backend, right.states.T, t[n])
            data[:, :, n] = a.conj().T @ (o @ b)
    return ObservableTensor(data, "exact", times, times_prime, pairing, name)


def observable_shot_sample(tensor: ObservableTensor, seed=0, shots_per_entry: int = 1) -> ObservableTensor:
    if tensor.mode != "exact":
        raise ValueError("observable_shot_sample needs an exact-mode tensor")
    data = _hadamard_outcomes(tensor.data, shots_per_entry, seed, stream=1)
    return ObservableTensor(
        data, "shot", tensor.times, tensor.times_prime, tensor.pairing, tensor.observable, shots_per_entry
    )


# --------------------------------------------------------------------------
# ancilla-free phase reconstruction


class ZeroCrossing(ArithmeticError):
    """|Z(t)| vanished on the grid, so ln Z and its phase are undefined."""


@dataclass
class AncillaFreeProbe:
    h: float
    grid_dt: float
    phase0: float
    c_plus: float
    c_minus: float
    grid: np.ndarray
    r: np.ndarray
    r_plus: np.ndarray  # r(t + ih)
    r_minus: np.ndarray  # r(t - ih)
    reconstructed: np.ndarray = field(default=None)


def ancilla_free_reconstruct(
    h_op: PauliSumHamiltonian,
    backend: EvolutionBackend,
    phi: np.ndarray,
    psi: np.ndarray,
    t_max: float,
    grid_dt: float,
    h: float,
    zero_tol: float = 1e-8,
) -> AncillaFreeProbe:
    """Recover Z(t) = <phi|exp(-iHt)|psi> on [0, t_max] from magnitudes only.

    The magnitude circuits give r(t) and r(t +- ih) / c_{+-}, where
    c_{+-} = ||exp(+-hH) psi||; the phase follows from the finite-difference
    relation dphi/dt = [ln r(t - ih) - ln r(t + ih)] / 2h integrated with the
    trapezoid rule from phi(0) = arg <phi|psi>.
    """
    if grid_dt <= 0 or h <= 0:
        raise ValueError("grid_dt and h must be positive")
    phi = np.asarray(phi, dtype=complex)
    psi = np.asarray(psi, dtype=complex)
    z0 = np.vdot(phi, psi)
    if abs(z0) < zero_tol:
        raise ZeroCrossing("overlap <phi|psi> vanishes at t = 0")
    steps = int(round(t_max / grid_dt))
    grid = np.arange(steps + 1) * grid_dt
    # the e^{+-hH} preparation is normalized on-circuit; c_{+-} restores scale
    psi_p, c_plus = imaginary_evolve(h_op, backend, psi, -h)
    psi_m, c_minus = imaginary_evolve(h_op, backend, psi, h)
    block = np.stack([psi, psi_p, psi_m], axis=1)
    amps = np.empty((steps + 1, 3), dtype=complex)
    amps[0] = phi.conj() @ block
    step = block
    for k in range(1, steps + 1):
        step = evolve(h_op, backend, step, grid_dt)
        amps[k] = phi.conj() @ step
    r = np.abs(amps[:, 0])
    r_plus = c_plus * np.abs(amps[:, 1])
    r_minus = c_minus * np.abs(amps[:, 2])
    if min(r.min(), r_plus.min(), r_minus.min()) < zero_tol:
        bad = grid[np.argmin(r)]
        raise ZeroCrossing(f"|Z| drops below {zero_tol:g} near t = {bad:g}")
    dphase = (np.log(r_minus) - np.log(r_plus)) / (2 * h)
    phase = np.angle(z0) + np.concatenate(
        [[0.0], np.cumsum((dphase[1:] + dphase[:-1]) * grid_dt / 2)]
    )
    probe = AncillaFreeProbe(h, grid_dt, float(np.angle(z0)), c_plus, c_minus, grid, r, r_plus, r_minus)
    probe.reconstructed = r * np.exp(1j * phase)
    return probe


def signal_from_reconstruction(probes: dict, times: TimeSamples, L: int, R: int) -> SignalTensor:
    """Exact-mode tensor at arbitrary t_n built from reconstructed grids.

    ``probes[(l, r)]`` covers t >= 0; negative times use
    Z_{l,r}(-t) = conj Z_{r,l}(t). Values between grid points are linearly
    interpolated.
    """
    data = np.empty((L, R, len(times)), dtype=complex)
    t = times.times
    for l in range(L):
        for r in range(R):
            fwd, bwd = probes[(l, r)], probes[(r, l)]
            pos = t >= 0
            data[l, r, pos] = _interp(fwd, t[pos])
            data[l, r, ~pos] = _interp(bwd, -t[~pos]).conj()
    return SignalTensor(data, "exact", times)


def _interp(probe: AncillaFreeProbe, t):
    z = probe.reconstructed
    return np.interp(t, probe.grid, z.real) + 1j * np.interp(t, probe.grid, z.imag)


# --------------------------------------------------------------------------
# persistence: JSON header + little-endian float64 (re, im) pairs


def save_tensor(tensor, path) -> None:
    path = Path(path)
    header = {
        "kind": "observable" if isinstance(tensor, ObservableTensor) else "signal",
        "shape": list(tensor.data.shape),
        "mode": tensor.mode,
        "T": tensor.times.T,
        "sigma": tensor.times.sigma,
        "seed": tensor.times.seed,
        "truncation": tensor.times.truncation,
        "shots_per_entry": tensor.shots_per_entry,
        "times": tensor.times.times.tolist(),
    }
    if isinstance(tensor, ObservableTensor):
        header.update(
            times_prime=tensor.times_prime.times.tolist(),
            pairing=tensor.pairing,
            observable=tensor.observable,
        )
    path.with_suffix(".json").write_text(json.dumps(header))
    pairs = np.stack([tensor.data.real, tensor.data.imag], axis=-1).astype("<f8")
    path.with_suffix(".bin").write_bytes(pairs.tobytes())


def load_tensor(path):
    path = Path(path)
    header = json.loads(path.with_suffix(".json").read_text())
    shape = tuple(header["shape"])
    if len(shape) != 3 or header.get("mode") not in ("exact", "shot"):
        raise ValueError("tensor header must have a 3-d shape and mode exact|shot")
    raw = np.frombuffer(path.with_suffix(".bin").read_bytes(), dtype="<f8")
    if raw.size != 2 * math.prod(shape):
        raise ValueError(f"binary block holds {raw.size // 2} entries, header says {math.prod(shape)}")
    data = (raw[0::2] + 1j * raw[1::2]).reshape(shape)
    times = TimeSamples(np.asarray(header["times"]), header["T"], header["sigma"], header["seed"], header["truncation"])
    if header["kind"] == "observable":
        tp = TimeSamples(np.asarray(header["times_prime"]), header["T"], header["sigma"], None, header["truncation"])
        return ObservableTensor(data, header["mode"], times, tp, header["pairing"], header["observable"], header["shots_per_entry"])
    return SignalTensor(data, header["mode"], times, header["shots_per_entry"])
