import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from qfames.models import EvolutionBackend, PauliSumHamiltonian, build_toric, eigendecompose, normalize_spectrum
from qfames.models.spectrum import factor_levels, level_grams
from qfames.stateprep import (
    StateSet,
    boost_overlaps,
    boosted_random_states,
    dominance_diagnostics,
    haar_random_states,
    load_overlaps,
    minimal_chi,
    overlap_matrices,
    overlap_scores,
    save_overlaps,
    singular_spread,
    states_from_overlaps,
)


def test_round_trip(illustrative):
    _, phi, spec, states = illustrative
    a, b = overlap_matrices(spec, states, states)
    np.testing.assert_allclose(a, phi, atol=1e-12)
    np.testing.assert_allclose(b, phi, atol=1e-12)


def test_identity_overlaps_give_eigenvectors(illustrative):
    _, _, spec, _ = illustrative
    s = states_from_overlaps(spec, np.eye(3))
    np.testing.assert_allclose(s.states, spec.eigenvectors.T)
    a, b = overlap_matrices(spec, s, s)
    np.testing.assert_allclose(a, np.eye(3), atol=1e-15)


def test_non_unit_rows_rejected(illustrative):
    _, _, spec, _ = illustrative
    with pytest.raises(ValueError):
        states_from_overlaps(spec, np.array([[0.5, 0.5, 0.0]]))
    with pytest.raises(ValueError):
        StateSet(np.ones((1, 3)))


def test_cross_signal_entry(illustrative):
    from qfames.models import evolve

    h, _, _, states = illustrative
    for t in (0.0, 1.7, 25.0):
        val = np.vdot(states.states[0], evolve(h, EvolutionBackend(), states.states[1], t))
        assert val == pytest.approx(np.exp(-0.1j * t) / 3, abs=1e-14)


def test_haar_moments_and_determinism():
    s = haar_random_states(2, 1000, 11)
    w = np.abs(s.states[:, 0]) ** 2
    assert abs(w.mean() - 0.5) < 3 * w.std() / math.sqrt(1000)
    np.testing.assert_allclose(np.linalg.norm(s.states, axis=1), 1, atol=1e-12)
    np.testing.assert_array_equal(haar_random_states(2, 1000, 11).states, s.states)


def test_boost_zero_is_haar():
    h = normalize_spectrum(build_toric(2, 2, "torus"))
    a = boosted_random_states(h, EvolutionBackend("commuting-product"), 0.0, 3, 5)
    np.testing.assert_array_equal(a.states, haar_random_states(h.dim, 3, 5).states)


def test_boost_suppresses_tail():
    h = PauliSumHamiltonian(n_qubits=0, dense_matrix=np.diag([0.0, 0.0, 1.0]))
    spec = eigendecompose(h)
    s = boosted_random_states(h, EvolutionBackend(), 15.0, 3, 0)
    phi, psi = overlap_matrices(spec, s, s)
    d = dominance_diagnostics(phi, psi, [0, 1], [[0, 1]])
    assert d.p_tail < 1e-6


def test_boost_overlaps_matches_statevector_boost():
    h = normalize_spectrum(build_toric(2, 2, "torus"))
    raw = haar_random_states(h.dim, 4, 9)
    boosted = boosted_random_states(h, EvolutionBackend("commuting-product"), 3.0, 4, 9)
    e, g = level_grams(h, raw.states)
    lam, x = factor_levels(e, g)
    xb = boost_overlaps(lam, x, 3.0)
    # compare Gram matrices per level (basis inside a level is arbitrary)
    eb, gb = level_grams(h, boosted.states)
    for k, en in enumerate(eb):
        cols = np.isclose(lam, en)
        np.testing.assert_allclose(xb[:, cols] @ xb[:, cols].conj().T, gb[k], atol=1e-10)


def test_toric_boosted_spans_ground_space():
    h = normalize_spectrum(build_toric(2, 4, "torus"))
    raw = haar_random_states(h.dim, 15, 0).states
    lam, x = factor_levels(*level_grams(h, raw))
    x = boost_overlaps(lam, x, 10.0)
    ground = np.isclose(lam, lam.min())
    assert ground.sum() == 4
    assert np.linalg.svd(x[:, ground], compute_uv=False).min() > 0.1


def test_row_norm_completeness():
    h = normalize_spectrum(build_toric(2, 2, "cylinder"))
    spec = eigendecompose(h)
    s = haar_random_states(h.dim, 5, 2)
    phi, _ = overlap_matrices(spec, s, s)
    np.testing.assert_allclose((np.abs(phi) ** 2).sum(axis=1), 1, atol=1e-12)


def test_diagnostics_illustrative(illustrative):
    _, phi, _, _ = illustrative
    d = dominance_diagnostics(phi, phi, [0, 1, 2], [[0, 1], [2]])
    np.testing.assert_allclose(d.p_per_eigenvector, 1)
    assert d.p_tail == 0 and math.isinf(d.dominance_ratio) and d.satisfies_dominance
    assert d.chi_per_cluster[0] == pytest.approx(math.sqrt(1.5) - 1, abs=1e-14)
    assert d.chi_per_cluster[1] == 0.0


def test_rank_deficiency_flagged():
    phi = np.array([[1.0, 1.0]]) / math.sqrt(2)
    d = dominance_diagnostics(phi, phi, [0, 1], [[0, 1]])
    assert math.isinf(d.chi_per_cluster[0]) and d.warnings


def _unit_rows(draw_matrix):
    a = np.asarray(draw_matrix, dtype=float)
    return a / np.linalg.norm(a, axis=1, keepdims=True)


mat = st.lists(st.lists(st.floats(-1, 1, allow_nan=False), min_size=4, max_size=4), min_size=3, max_size=5).filter(
    lambda m: all(np.linalg.norm(r) > 0.1 for r in m)
)


@given(mat, mat)
def test_score_and_chi_invariants(a, b):
    phi, psi = _unit_rows(a), _unit_rows(b)
    p = overlap_scores(phi, psi)
    assert (p >= 0).all() and p.sum() <= math.sqrt(phi.shape[0] * psi.shape[0]) + 1e-12
    block = phi[:, :2]
    chi = minimal_chi(block)
    s_min, s_avg = singular_spread(block)
    if math.isfinite(chi) and chi > 0:
        # the least admissible constant: the bound holds with equality
        assert s_min == pytest.approx(s_avg / (1 + chi), rel=1e-12)
    if math.isfinite(chi):
        assert s_min >= s_avg / (1 + chi) * (1 - 1e-12)


def test_overlap_json(tmp_path, illustrative):
    _, phi, _, states = illustrative
    save_overlaps(tmp_path / "o.json", phi, 1j * phi)
    a, b = load_overlaps(tmp_path / "o.json")
    np.testing.assert_array_equal(a, phi)
    np.testing.assert_array_equal(b, 1j * phi)
    back = StateSet.from_json(states.to_json())
    np.testing.assert_array_equal(back.states, states.states)


def test_dominance_monotone_in_beta():
    h = normalize_spectrum(build_toric(2, 2, "torus"))
    spec = eigendecompose(h)
    ground = list(np.flatnonzero(np.isclose(spec.eigenvalues, spec.eigenvalues[0])))
    for seed in range(3):
        tails = []
        for beta in (0.0, 1.0, 3.0, 6.0):
            s = boosted_random_states(h, EvolutionBackend("commuting-product"), beta, 4, seed)
            phi, psi = overlap_matrices(spec, s, s)
            tails.append(dominance_diagnostics(phi, psi, ground, [ground]).p_tail)
        assert all(b <= a + 1e-12 for a, b in zip(tails, tails[1:]))
