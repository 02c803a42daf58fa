"""Experiment configuration, presets and seed-parallel drivers."""
from __future__ import annotations

import csv
import dataclasses
import json
import logging
import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path

import numpy as np

from . import __version__
from .acquisition import (
    ObservableTensor,
    SignalTensor,
    ZeroCrossing,
    ancilla_free_reconstruct,
    observable_exact_signal,
    observable_shot_sample,
    sample_observable_times,
    sample_times,
    shot_sample,
    signal_from_overlaps,
    signal_from_reconstruction,
)
from .baselines import GroundTruth, brute_force_dods, error_metric, qmegs_run
from .core import DodsEstimate, QfamesConfig, default_params, run_qfames, save_singular_values
from .models import (
    EvolutionBackend,
    PauliSumHamiltonian,
    PauliTerm,
    build_illustrative,
    build_tfim,
    build_toric,
    eigendecompose,
    normalize_spectrum,
)
from .models.spectrum import factor_levels, level_grams
from .observables import observable_spectra
from .stateprep import (
    StateSet,
    boost_overlaps,
    boosted_random_states,
    from_complex_pairs,
    haar_random_states,
    overlap_matrices,
    states_from_overlaps,
)

log = logging.getLogger(__name__)

SCHEMA = "qfames-experiment/1"
WORKERS_ENV = "QFAMES_WORKERS"


class ConfigError(ValueError):
    """Invalid experiment configuration (CLI exit code 1)."""


# --------------------------------------------------------------------------
# configuration


@dataclass(frozen=True)
class ModelSpec:
    kind: str  # illustrative | tfim | toric | file
    L: int = 10
    g: float = 1.0
    rows: int = 2
    cols: int = 4
    boundary: str = "torus"
    path: str | None = None


@dataclass(frozen=True)
class StateSpec:
    kind: str  # overlap-matrix | haar-boost | lowest-k
    beta: float = 0.0
    count: int = 1
    right_count: int | None = None  # None: right family = left family
    phi: list | None = None  # complex pairs, overlap-matrix only
    psi: list | None = None


@dataclass(frozen=True)
class DataSpec:
    mode: str = "shot"  # shot | exact
    shots_per_entry: int = 1
    source: str = "hadamard"  # hadamard | ancilla-free
    h: float = 0.01
    dt: float = 0.01


@dataclass(frozen=True)
class ObservableSpec:
    kind: str  # pauli | magnetization | dense
    letters: str | None = None
    matrix: list | None = None
    N: int = 10000
    pairing: str = "product-grid"
    mode: str = "shot"


@dataclass(frozen=True)
class TruthSpec:
    c_p: float = 10.0
    delta: float = 0.05
    width: float = 0.0


@dataclass(frozen=True)
class QmegsSpec:
    entry: tuple = (0, 0)
    N: int | None = None  # None: L * R * N, matching the total simulation time


@dataclass(frozen=True)
class ExperimentConfig:
    model: ModelSpec
    states: StateSpec
    qfames: QfamesConfig
    data: DataSpec = field(default_factory=DataSpec)
    observable: ObservableSpec | None = None
    truth: TruthSpec = field(default_factory=TruthSpec)
    qmegs: QmegsSpec = field(default_factory=QmegsSpec)
    seeds: tuple = (0,)
    output_dir: str = "qfames-out"

    def __post_init__(self):
        _validate(self)

    def to_json(self) -> dict:
        doc = {"schema": SCHEMA}
        doc.update(dataclasses.asdict(self))
        doc["seeds"] = list(self.seeds)
        doc["qmegs"]["entry"] = list(self.qmegs.entry)
        return doc

    @classmethod
    def from_json(cls, doc: dict) -> "ExperimentConfig":
        if not isinstance(doc, dict):
            raise ConfigError("config must be a JSON object")
        if doc.get("schema") != SCHEMA:
            raise ConfigError(f"schema must be '{SCHEMA}', got {doc.get('schema')!r}")
        body = {k: v for k, v in doc.items() if k != "schema"}
        _check_keys(cls, body, "config", required=("model", "states", "qfames"))
        kw = dict(
            model=_section(ModelSpec, body["model"], "model", ("kind",)),
            states=_section(StateSpec, body["states"], "states", ("kind",)),
            qfames=_section(QfamesConfig, body["qfames"], "qfames", ("N", "T")),
        )
        if "data" in body:
            kw["data"] = _section(DataSpec, body["data"], "data")
        if body.get("observable") is not None:
            kw["observable"] = _section(ObservableSpec, body["observable"], "observable", ("kind",))
        if "truth" in body:
            kw["truth"] = _section(TruthSpec, body["truth"], "truth")
        if "qmegs" in body:
            q = dict(body["qmegs"])
            if "entry" in q:
                q["entry"] = tuple(q["entry"])
            kw["qmegs"] = _section(QmegsSpec, q, "qmegs")
        if "seeds" in body:
            seeds = body["seeds"]
            if not isinstance(seeds, list) or not seeds or not all(isinstance(s, int) and s >= 0 for s in seeds):
                raise ConfigError("seeds must be a non-empty list of non-negative integers")
            kw["seeds"] = tuple(seeds)
        if "output_dir" in body:
            kw["output_dir"] = str(body["output_dir"])
        try:
            return cls(**kw)
        except ConfigError:
            raise
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def load(cls, path) -> "ExperimentConfig":
        try:
            doc = json.loads(Path(path).read_text())
        except OSError as exc:
            raise ConfigError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"config is not valid JSON: {exc}") from exc
        return cls.from_json(doc)


def _check_keys(cls, doc, where, required=()):
    if not isinstance(doc, dict):
        raise ConfigError(f"{where} must be a JSON object")
    names = {f.name for f in dataclasses.fields(cls)}
    unknown = sorted(set(doc) - names)
    if unknown:
        raise ConfigError(f"unknown key(s) {unknown} in {where}; allowed: {sorted(names)}")
    missing = [k for k in required if k not in doc]
    if missing:
        raise ConfigError(f"missing key(s) {missing} in {where}")


def _section(cls, doc, where, required=()):
    _check_keys(cls, doc, where, required)
    try:
        return cls(**doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{where}: {exc}") from exc


def _validate(cfg: ExperimentConfig) -> None:
    m, s, d, o = cfg.model, cfg.states, cfg.data, cfg.observable
    if m.kind not in ("illustrative", "tfim", "toric", "file"):
        raise ConfigError(f"model.kind must be illustrative|tfim|toric|file, got {m.kind!r}")
    if m.kind == "file" and not m.path:
        raise ConfigError("model.path is required for kind 'file'")
    if m.kind == "toric" and m.boundary not in ("torus", "cylinder"):
        raise ConfigError("model.boundary must be torus or cylinder")
    if s.kind not in ("overlap-matrix", "haar-boost", "lowest-k"):
        raise ConfigError(f"states.kind must be overlap-matrix|haar-boost|lowest-k, got {s.kind!r}")
    if s.kind == "overlap-matrix" and m.kind != "illustrative" and s.phi is None:
        raise ConfigError("states.phi is required for overlap-matrix states outside the illustrative model")
    if s.beta < 0 or s.count < 1 or (s.right_count is not None and s.right_count < 1):
        raise ConfigError("states: need beta >= 0, count >= 1, right_count >= 1")
    if m.kind == "toric" and s.kind != "haar-boost":
        raise ConfigError("toric models support haar-boost states only")
    if d.mode not in ("shot", "exact") or d.source not in ("hadamard", "ancilla-free"):
        raise ConfigError("data.mode must be shot|exact and data.source hadamard|ancilla-free")
    if d.shots_per_entry < 1 or d.h <= 0 or d.dt <= 0:
        raise ConfigError("data: need shots_per_entry >= 1, h > 0, dt > 0")
    if d.source == "ancilla-free" and m.kind == "toric":
        raise ConfigError("ancilla-free data needs an explicit statevector backend; not available for toric")
    if o is not None:
        if o.kind not in ("pauli", "magnetization", "dense"):
            raise ConfigError("observable.kind must be pauli|magnetization|dense")
        if o.pairing not in ("iid-pairs", "product-grid") or o.mode not in ("shot", "exact"):
            raise ConfigError("observable: pairing iid-pairs|product-grid, mode shot|exact")
        if o.pairing == "product-grid" and math.isqrt(o.N) ** 2 != o.N:
            raise ConfigError("observable.N must be a perfect square for product-grid pairing")
        if o.kind == "magnetization" and o.mode == "shot":
            raise ConfigError("the magnetization is not unitary: observable.mode must be exact")
        if m.kind == "toric":
            raise ConfigError("observables are not supported for toric models")
    if cfg.truth.width >= cfg.truth.delta or cfg.truth.delta <= 0:
        raise ConfigError("truth: need 0 <= width < delta")


# --------------------------------------------------------------------------
# presets


def preset(name: str) -> ExperimentConfig:
    """Ready-made experiment configurations."""
    if name == "illustrative":
        return ExperimentConfig(
            model=ModelSpec("illustrative"),
            states=StateSpec("overlap-matrix", count=3),
            qfames=QfamesConfig(N=2000, T=40, sigma=1, I_tilde=2, tau=0.3, q=0.005, alpha=5, truncation="conditional"),
            truth=TruthSpec(c_p=10, delta=0.05, width=0.0),
            seeds=tuple(range(20)),
            output_dir="out-illustrative",
        )
    if name == "tfim":
        return ExperimentConfig(
            model=ModelSpec("tfim", L=10, g=0.5),
            states=StateSpec("haar-boost", beta=20.0, count=5),
            qfames=QfamesConfig(N=10000, T=50, sigma=1, I_tilde=1, tau=0.5, q=0.005, alpha=5, truncation="conditional"),
            observable=ObservableSpec("magnetization", N=10000, pairing="product-grid", mode="exact"),
            truth=TruthSpec(c_p=10, delta=0.2, width=0.01),
            seeds=tuple(range(10)),
            output_dir="out-tfim",
        )
    if name in ("toric-torus-2x4", "toric-cyl-2x4"):
        boundary = "torus" if "torus" in name else "cylinder"
        return ExperimentConfig(
            model=ModelSpec("toric", rows=2, cols=4, boundary=boundary),
            states=StateSpec("haar-boost", beta=10.0, count=15),
            qfames=QfamesConfig(N=300, T=10, sigma=1, I_tilde=1, tau=1.0, q=0.005, alpha=5, truncation="conditional"),
            truth=TruthSpec(c_p=10, delta=0.2, width=0.0),
            seeds=tuple(range(10)),
            output_dir=f"out-{name}",
        )
    raise ConfigError(f"unknown preset {name!r}; choose from {PRESETS}")


PRESETS = ("illustrative", "tfim", "toric-torus-2x4", "toric-cyl-2x4")


# --------------------------------------------------------------------------
# problem construction


@dataclass(eq=False)
class Problem:
    """Everything needed to synthesize data for one seed."""

    eigenvalues: np.ndarray  # normalized units
    phi: np.ndarray
    psi: np.ndarray
    norm_scale: float
    hamiltonian: PauliSumHamiltonian | None = None
    spectrum: object = None
    left: StateSet | None = None
    right: StateSet | None = None

    @property
    def shape(self):
        return self.phi.shape[0], self.psi.shape[0]


def derive_seed(*key) -> int:
    return int(np.random.SeedSequence([int(k) for k in key]).generate_state(1)[0])


def build_hamiltonian(model: ModelSpec) -> PauliSumHamiltonian:
    if model.kind == "illustrative":
        return build_illustrative()[0]
    if model.kind == "tfim":
        return normalize_spectrum(build_tfim(model.L, model.g))
    if model.kind == "toric":
        return normalize_spectrum(build_toric(model.rows, model.cols, model.boundary))
    doc = json.loads(Path(model.path).read_text())
    return normalize_spectrum(PauliSumHamiltonian.from_json(doc))


def prepare_problem(cfg: ExperimentConfig, seed: int) -> Problem:
    model, st = cfg.model, cfg.states
    h = build_hamiltonian(model)
    if model.kind == "toric":
        return _toric_problem(h, model, st, seed)
    spec = eigendecompose(h)
    backend = EvolutionBackend("dense-eigen")
    n_left = st.count
    n_right = st.right_count or st.count
    if st.kind == "overlap-matrix":
        phi = build_illustrative()[1] if st.phi is None else from_complex_pairs(st.phi)
        left = states_from_overlaps(spec, phi)
        right = left if st.psi is None else states_from_overlaps(spec, from_complex_pairs(st.psi))
    elif st.kind == "haar-boost":
        left = boosted_random_states(h, backend, st.beta, n_left, derive_seed(seed, 1))
        right = left if st.right_count is None else boosted_random_states(h, backend, st.beta, n_right, derive_seed(seed, 2))
    else:  # lowest-k: Haar-random mixtures of the count lowest eigenvectors
        left = _lowest_mixtures(spec, n_left, derive_seed(seed, 1))
        right = left if st.right_count is None else _lowest_mixtures(spec, n_right, derive_seed(seed, 2))
    phi, psi = overlap_matrices(spec, left, right)
    return Problem(spec.eigenvalues, phi, psi, h.norm_scale, h, spec, left, right)


def _lowest_mixtures(spec, count, seed) -> StateSet:
    coeff = haar_random_states(count, count, seed).states  # rows of a random unitary up to orthogonality
    q, _ = np.linalg.qr(coeff.T)
    states = (spec.eigenvectors[:, :count] @ q).T
    return StateSet(states, tuple(f"low{i}" for i in range(count)))


@lru_cache(maxsize=32)
def _toric_levels(model: ModelSpec, n_left: int, n_right, seed: int):
    # independent of beta, so boosting variants share the expensive part
    h = build_hamiltonian(model)
    raw = haar_random_states(h.dim, n_left, derive_seed(seed, 1)).states
    if n_right is not None:
        raw = np.vstack([raw, haar_random_states(h.dim, n_right, derive_seed(seed, 2)).states])
    return factor_levels(*level_grams(h, raw))


def _toric_problem(h, model: ModelSpec, st: StateSpec, seed) -> Problem:
    n_left = st.count
    n_right = st.right_count
    lam, x = _toric_levels(model, n_left, n_right, seed)
    x = boost_overlaps(lam, x, st.beta)
    phi = x[:n_left]
    psi = phi if n_right is None else x[n_left:]
    return Problem(lam, phi, psi, h.norm_scale, h)


def ground_truth(cfg: ExperimentConfig, problem: Problem) -> GroundTruth:
    t = cfg.truth
    return brute_force_dods(problem.eigenvalues, problem.phi, problem.psi, t.c_p, t.delta, t.width)


# --------------------------------------------------------------------------
# data synthesis


def synthesize(cfg: ExperimentConfig, problem: Problem, qcfg: QfamesConfig, seed: int, salt: int = 0) -> SignalTensor:
    """Time samples, exact signal and (optionally) shot noise for one seed."""
    ts = sample_times(qcfg.T, qcfg.sigma, qcfg.N, derive_seed(seed, 10, salt), qcfg.truncation)
    if cfg.data.source == "ancilla-free":
        exact = reconstructed_signal(cfg, problem, ts)
    else:
        exact = SignalTensor(signal_from_overlaps(problem.eigenvalues, problem.phi, problem.psi, ts), "exact", ts)
    if cfg.data.mode == "exact":
        return exact
    return shot_sample(exact, cfg.data.shots_per_entry, derive_seed(seed, 11, salt))


def reconstructed_signal(cfg: ExperimentConfig, problem: Problem, ts) -> SignalTensor:
    if problem.left is None or problem.left is not problem.right:
        raise ConfigError("ancilla-free data needs a single state family (right = left)")
    L = len(problem.left)
    t_max = float(np.abs(ts.times).max(initial=0.0)) + cfg.data.dt
    backend = EvolutionBackend("dense-eigen")
    probes = {}
    for l in range(L):
        for r in range(L):
            probes[(l, r)] = ancilla_free_reconstruct(
                problem.hamiltonian, backend, problem.left.states[l], problem.left.states[r],
                t_max, cfg.data.dt, cfg.data.h,
            )
    return signal_from_reconstruction(probes, ts, L, L)


def observable_operator(cfg: ExperimentConfig, h: PauliSumHamiltonian):
    o = cfg.observable
    if o.kind == "pauli":
        return PauliSumHamiltonian(n_qubits=h.n_qubits, terms=(PauliTerm(1.0, o.letters),)), o.letters
    if o.kind == "magnetization":
        n = h.n_qubits
        terms = tuple(PauliTerm(1.0 / (2 * n), "I" * q + "Z" + "I" * (n - q - 1)) for q in range(n))
        return PauliSumHamiltonian(n_qubits=n, terms=terms), "Sz"
    return from_complex_pairs(o.matrix), "dense"


def observable_tensor(cfg: ExperimentConfig, problem: Problem, seed: int) -> ObservableTensor:
    o, q = cfg.observable, cfg.qfames
    tt, tp = sample_observable_times(q.T, q.sigma, o.N, derive_seed(seed, 20), o.pairing, q.truncation)
    op, name = observable_operator(cfg, problem.hamiltonian)
    tensor = observable_exact_signal(
        problem.spectrum, problem.left, problem.right, op, tt, tp, o.pairing, name,
        require_unitary=(o.mode == "shot"),
    )
    if o.mode == "shot":
        tensor = observable_shot_sample(tensor, derive_seed(seed, 21), cfg.data.shots_per_entry)
    return tensor


# --------------------------------------------------------------------------
# drivers


def workers() -> int:
    raw = os.environ.get(WORKERS_ENV, "1")
    try:
        n = int(raw)
    except ValueError as exc:
        raise ConfigError(f"{WORKERS_ENV} must be an integer, got {raw!r}") from exc
    return max(1, n)


def pool_map(fn, items):
    """Map over items with QFAMES_WORKERS processes; order of results is preserved."""
    items = list(items)
    n = min(workers(), len(items))
    if n <= 1:
        return [fn(x) for x in items]
    with ProcessPoolExecutor(n) as ex:
        return list(ex.map(fn, items))


@dataclass(eq=False)
class SeedResult:
    seed: int
    estimate: DodsEstimate
    truth: GroundTruth | None
    error: float
    spectra: list | None
    landscape: object = None


def run_seed(cfg: ExperimentConfig, seed: int, keep_landscape: bool = False) -> SeedResult:
    from .core import landscape as compute_landscape

    problem = prepare_problem(cfg, seed)
    tensor = synthesize(cfg, problem, cfg.qfames, seed)
    est = run_qfames(tensor, cfg.qfames, problem.norm_scale)
    land = compute_landscape(tensor, cfg.qfames, memory_budget=0) if keep_landscape else None
    truth = ground_truth(cfg, problem)
    err = error_metric(est.centers, truth) if truth.valid else math.nan
    spectra = None
    if cfg.observable is not None:
        spectra = observable_spectra(observable_tensor(cfg, problem, seed), est.clusters)
    return SeedResult(seed, est, truth, err, spectra, land)


class _SeedTask:
    def __init__(self, cfg, first):
        self.cfg, self.first = cfg, first

    def __call__(self, seed):
        return run_seed(self.cfg, seed, keep_landscape=(seed == self.first))


def run_experiment(cfg: ExperimentConfig) -> list:
    return pool_map(_SeedTask(cfg, cfg.seeds[0]), cfg.seeds)


def mean_singular_values(results) -> list:
    """Singular values averaged over seeds, per cluster position counted from the
    lowest theta*. Returns rows (cluster, index, mean, n_seeds)."""
    rows = []
    depth = max((len(r.estimate.clusters) for r in results), default=0)
    for c in range(depth):
        svs = [r.estimate.clusters[c].singular_values for r in results if len(r.estimate.clusters) > c]
        mean = np.mean(np.stack(svs), axis=0)
        rows.extend((c, k, float(v), len(svs)) for k, v in enumerate(mean))
    return rows


def write_outputs(cfg: ExperimentConfig, results, out: Path, wall_time: float) -> None:
    out.mkdir(parents=True, exist_ok=True)
    q = cfg.qfames
    norm = results[0].estimate.norm_scale
    runs = []
    for r in results:
        doc = r.estimate.to_json()
        doc.pop("config")
        doc.pop("norm_scale")
        doc["seed"] = r.seed
        doc["error"] = None if not math.isfinite(r.error) else r.error
        if r.truth is not None and r.truth.valid:
            doc["truth"] = {
                "centers": r.truth.centers,
                "centers_physical": [c / norm for c in r.truth.centers],
                "multiplicities": r.truth.multiplicities,
                "p_tail": r.truth.p_tail,
            }
        runs.append(doc)
    _dump(out / "dods.json", {"config": dataclasses.asdict(q), "norm_scale": norm, "runs": runs})
    first = results[0]
    if first.landscape is not None:
        first.landscape.to_csv(out / "landscape.csv", norm)
    with open(out / "singular_values.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["seed", "cluster", "theta_star", "theta_star_physical", "index", "singular_value", "above_tau"])
        for r in results:
            for ci, c in enumerate(r.estimate.clusters):
                for k, s in enumerate(c.singular_values):
                    w.writerow([r.seed, ci, repr(c.theta_star), repr(c.theta_star / norm), k, repr(float(s)), int(s > q.tau)])
        for ci, k, v, n in mean_singular_values(results):
            w.writerow(["mean", ci, "", "", k, repr(v), int(v > q.tau)])
    if cfg.observable is not None:
        _dump(out / "observable.json", [
            {"seed": r.seed, "clusters": [s.to_json(norm) for s in r.spectra]} for r in results
        ])
    L, R = cfg.states.count, cfg.states.right_count or cfg.states.count
    _, report = default_params(cfg.truth.delta, results[0].truth.p_tail if results[0].truth else 0.0, L, R,
                               max(q.I_tilde, 1))
    _dump(out / "manifest.json", {
        "package_version": __version__,
        "config": cfg.to_json(),
        "seeds": list(cfg.seeds),
        "norm_scale": norm,
        "wall_time_s": round(wall_time, 3),
        "workers": workers(),
        "default_params_report": report,
        "derived_seeds": "numpy SeedSequence([seed, purpose, salt]); purposes: 1/2 states, 10 times, 11 shots, 20/21 observable",
    })


def _dump(path, doc) -> None:
    with open(path, "w") as fh:
        json.dump(doc, fh, indent=2, allow_nan=False)
        fh.write("\n")


def cmd_run(cfg: ExperimentConfig, out: Path | None = None) -> list:
    start = time.perf_counter()
    results = run_experiment(cfg)
    write_outputs(cfg, results, Path(out or cfg.output_dir), time.perf_counter() - start)
    return results


# sweeps ---------------------------------------------------------------------

SWEEP_COLUMNS = ("seed", "method", "T", "T_max", "T_total", "error", "multiplicities")


@dataclass
class SweepRow:
    seed: int
    method: str
    T: float
    T_max: float
    T_total: float
    error: float
    multiplicities: str


class _SweepTask:
    def __init__(self, cfg, Ts):
        self.cfg, self.Ts = cfg, Ts

    def __call__(self, seed):
        return sweep_seed(self.cfg, seed, self.Ts)


def sweep_seed(cfg: ExperimentConfig, seed: int, Ts) -> list:
    problem = prepare_problem(cfg, seed)
    truth = ground_truth(cfg, problem)
    L, R = problem.shape
    rows = []
    for T in Ts:
        salt = int(round(T * 1000))
        q = dataclasses.replace(cfg.qfames, T=float(T))
        tensor = synthesize(cfg, problem, q, seed, salt)
        est = run_qfames(tensor, q, problem.norm_scale)
        t_max = q.sigma * T
        rows.append(SweepRow(seed, "qfames", T, t_max, L * R * q.N * t_max,
                             error_metric(est.centers, truth),
                             ";".join(str(c.multiplicity) for c in est.clusters)))
        n_q = cfg.qmegs.N or L * R * q.N
        qq = dataclasses.replace(q, N=n_q)
        single = _single_entry(cfg, problem, qq, seed, salt)
        centers = qmegs_run(single, qq, (0, 0))
        rows.append(SweepRow(seed, "qmegs", T, t_max, n_q * t_max, error_metric(centers, truth), ""))
    return rows


def _single_entry(cfg, problem: Problem, q: QfamesConfig, seed, salt) -> SignalTensor:
    l, r = cfg.qmegs.entry
    sub = Problem(problem.eigenvalues, problem.phi[[l]], problem.psi[[r]], problem.norm_scale)
    data = dataclasses.replace(cfg, data=dataclasses.replace(cfg.data, source="hadamard"))
    return synthesize(data, sub, q, seed, salt + 7_000_000)


def cmd_sweep(cfg: ExperimentConfig, Ts, out: Path | None = None) -> list:
    Ts = [float(t) for t in Ts]
    if not Ts or any(t <= 0 for t in Ts):
        raise ConfigError("T list must be non-empty and positive")
    rows = [r for chunk in pool_map(_SweepTask(cfg, Ts), cfg.seeds) for r in chunk]
    out = Path(out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    with open(out / "sweep.csv", "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(SWEEP_COLUMNS)
        for r in rows:
            w.writerow([r.seed, r.method, repr(r.T), repr(r.T_max), repr(r.T_total), repr(r.error), r.multiplicities])
    return rows


# ancilla-free check ------------------------------------------------------------


def ancilla_check(cfg: ExperimentConfig, h: float, dt: float, t_max: float | None = None, seed: int | None = None) -> dict:
    """Reconstruction error against the exact signal for every (l, r) pair, at
    (h, dt) and at (h/2, dt/2)."""
    if cfg.model.kind == "toric":
        raise ConfigError("ancilla-free check needs a statevector backend; toric models are not supported")
    seed = cfg.seeds[0] if seed is None else seed
    problem = prepare_problem(cfg, seed)
    t_max = cfg.qfames.sigma * cfg.qfames.T if t_max is None else t_max
    backend = EvolutionBackend("dense-eigen")
    pairs = []
    for l, phi in enumerate(problem.left.states):
        for r, psi in enumerate(problem.right.states):
            entry = {"l": l, "r": r}
            try:
                errs = []
                for scale in (1.0, 0.5):
                    probe = ancilla_free_reconstruct(problem.hamiltonian, backend, phi, psi, t_max, dt * scale, h * scale)
                    exact = signal_from_overlaps(problem.eigenvalues, problem.phi[[l]], problem.psi[[r]], probe.grid)[0, 0]
                    dev = np.abs(probe.reconstructed - exact)
                    errs.append((float(dev.max()), float(dev.mean())))
                entry.update(max_error=errs[0][0], mean_error=errs[0][1],
                             max_error_halved=errs[1][0], mean_error_halved=errs[1][1],
                             ratio=errs[0][0] / errs[1][0] if errs[1][0] > 0 else None)
            except ZeroCrossing as exc:
                entry["zero_crossing"] = str(exc)
            pairs.append(entry)
    return {"h": h, "dt": dt, "t_max": t_max, "seed": seed, "pairs": pairs}


def cmd_ancilla_check(cfg: ExperimentConfig, h: float, dt: float, out: Path | None = None) -> dict:
    report = ancilla_check(cfg, h, dt)
    out = Path(out or cfg.output_dir)
    out.mkdir(parents=True, exist_ok=True)
    _dump(out / "reconstruction_report.json", report)
    return report
