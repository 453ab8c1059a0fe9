import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st
from hypothesis.extra.numpy import arrays
from scipy.stats import spearmanr

from modent.eigensolve import diagonalize, tql_implicit
from modent.entanglement import (
    min_pairwise_concurrence,
    pairwise_concurrence,
    participation_ratio,
    spectrum_concurrence,
    state_concurrence,
)
from modent.models import ModelParams, build_hamiltonian

from oracles import brute_state_concurrence


def w_state(n):
    return np.full(n, 1 / np.sqrt(n))


def delta(n, k=0):
    v = np.zeros(n)
    v[k] = 1.0
    return v


@pytest.mark.parametrize("n", [2, 3, 10, 800])
def test_w_state_saturates_bound(n):
    assert n * state_concurrence(w_state(n)) == pytest.approx(2.0, abs=1e-12)
    assert participation_ratio(w_state(n)) == pytest.approx(n, rel=1e-12)


@pytest.mark.parametrize("n", [2, 7, 100])
def test_delta_state_is_zero(n):
    assert state_concurrence(delta(n, n // 2)) == 0.0
    assert participation_ratio(delta(n)) == 1.0


def test_two_site_superposition_in_four():
    psi = np.array([1, 1, 0, 0]) / np.sqrt(2)
    assert pairwise_concurrence(psi, 0, 1) == pytest.approx(1.0, abs=1e-15)
    assert pairwise_concurrence(psi, 0, 2) == 0.0
    assert state_concurrence(psi) == pytest.approx(1 / 6, abs=1e-15)
    assert participation_ratio(psi) == pytest.approx(2.0, abs=1e-15)


def test_pairwise_needs_distinct_sites():
    with pytest.raises(ValueError):
        pairwise_concurrence(w_state(4), 2, 2)


def test_three_site_chain_middle_state():
    s = tql_implicit(np.zeros(3), -np.ones(2))
    report = spectrum_concurrence(s)
    # exact eigenvectors (1, -+sqrt2, 1)/2 and (1, 0, -1)/sqrt2
    side = ((1 + np.sqrt(2) / 2) ** 2 - 1) / 3
    np.testing.assert_allclose(report.state_concurrence, [side, 1 / 3, side], atol=1e-14)
    assert report.M == 3


def test_ground_state_of_100_site_chain():
    s = tql_implicit(np.zeros(100), -np.ones(99))
    psi = s.state(0)
    n = np.arange(1, 101)
    exact = np.sqrt(2 / 101) * np.sin(np.pi * n / 101)
    np.testing.assert_allclose(np.abs(psi), exact, atol=1e-12)
    assert state_concurrence(psi) == pytest.approx(brute_state_concurrence(exact), abs=1e-12)


def test_closed_form_against_brute_force_on_random_states():
    rng = np.random.default_rng(11)
    for _ in range(100):
        n = int(rng.integers(2, 201))
        psi = rng.standard_normal(n)
        psi /= np.linalg.norm(psi)
        assert abs(state_concurrence(psi) - brute_state_concurrence(psi)) <= 1e-12


def test_min_pairwise_concurrence():
    psi = np.array([0.1, -0.7, 0.2, 0.5])
    psi /= np.linalg.norm(psi)
    brute = min(pairwise_concurrence(psi, i, j) for i in range(4) for j in range(i + 1, 4))
    assert min_pairwise_concurrence(psi) == pytest.approx(brute, rel=1e-15)


def test_spectrum_report_matches_per_state_calls():
    s = diagonalize(build_hamiltonian(ModelParams("random_dimer", 40, Va=2.0), 1))
    report = spectrum_concurrence(s)
    for b in range(40):
        assert report.state_concurrence[b] == pytest.approx(state_concurrence(s.state(b)), abs=1e-15)
        assert report.participation_ratio[b] == pytest.approx(participation_ratio(s.state(b)), rel=1e-12)
    assert report.global_concurrence == pytest.approx(report.state_concurrence.mean(), abs=1e-16)
    np.testing.assert_allclose(report.scaled, 40 * report.state_concurrence)


def test_decoupled_sites_have_zero_concurrence():
    s = diagonalize(build_hamiltonian(ModelParams("random_dimer", 20, Va=2.0, t=0.0), 0))
    assert spectrum_concurrence(s).global_concurrence == 0.0


def test_concurrence_tracks_participation_ratio():
    rhos = []
    for seed in range(20):
        s = diagonalize(build_hamiltonian(ModelParams("random_dimer", 400, Va=2.0, seed=seed), 0))
        r = spectrum_concurrence(s)
        rhos.append(spearmanr(r.state_concurrence, r.participation_ratio)[0])
    assert np.mean(rhos) > 0.8


# --- invariants -------------------------------------------------------------

_states = st.integers(2, 200).flatmap(
    lambda n: arrays(np.float64, n, elements=st.floats(-1, 1, allow_nan=False)).filter(lambda v: np.linalg.norm(v) > 1e-3)
)


def _normalise(v):
    return v / np.linalg.norm(v)


@settings(max_examples=200, deadline=None)
@given(_states)
def test_identity_and_bounds(v):
    psi = _normalise(v)
    n = psi.shape[0]
    c = state_concurrence(psi)
    assert abs(c - brute_state_concurrence(psi)) <= 1e-12
    assert -1e-15 <= c <= 2 / n + 1e-15


@settings(max_examples=100, deadline=None)
@given(_states, st.randoms(use_true_random=False))
def test_permutation_and_sign_invariance(v, rnd):
    psi = _normalise(v)
    perm = list(range(psi.shape[0]))
    rnd.shuffle(perm)
    c = state_concurrence(psi)
    assert state_concurrence(psi[perm]) == pytest.approx(c, abs=1e-14)
    assert state_concurrence(-psi) == c
    assert participation_ratio(-psi) == participation_ratio(psi)


@settings(max_examples=100, deadline=None)
@given(st.integers(2, 100), st.integers(0, 99), st.floats(1e-3, 0.5))
def test_bound_is_attained_only_by_uniform_magnitudes(n, k, eps):
    # flipping signs keeps the bound; perturbing one magnitude breaks it
    signs = np.where(np.arange(n) % 3 == 0, -1.0, 1.0)
    assert n * state_concurrence(signs * w_state(n)) == pytest.approx(2.0, abs=1e-12)
    psi = w_state(n)
    psi[k % n] *= 1 + eps
    assert state_concurrence(_normalise(psi)) < 2 / n
