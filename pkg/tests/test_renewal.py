import itertools
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from dtrw.renewal import (
    build_jump_counts,
    expected_jumps,
    expected_jumps_closed,
    jump_count_closed_form,
    jump_count_closed_form_table,
    subordinated_density,
    subordinated_field,
    walk_distribution,
)
from dtrw.waiting import SibuyaModel

ALPHAS = [0.3, 0.5, 0.7, 0.9]


def brute_force_jump_law(alpha, n):
    """P[k jumps by n] by enumerating every sequence of waiting times."""
    model = SibuyaModel(alpha)
    phi = model.pmf_array(n)
    surv = model.survival_array(n)
    out = np.zeros(n + 1)
    for k in range(n + 1):
        for waits in itertools.product(range(1, n + 1), repeat=k):
            total = sum(waits)
            if total <= n:
                out[k] += math.prod(phi[w] for w in waits) * surv[n - total]
    return out


def renewal_equation_field(alpha, p_right, n_max):
    """U(i, n) from the first-jump decomposition
    U(i, n) = Phi(n) [i = 0] + sum_m phi(m) (p_r U(i-1, n-m) + p_l U(i+1, n-m))."""
    model = SibuyaModel(alpha)
    phi = model.pmf_array(n_max)
    surv = model.survival_array(n_max)
    width = 2 * n_max + 3
    c = n_max + 1
    u = np.zeros((n_max + 1, width))
    for n in range(n_max + 1):
        u[n, c] = surv[n]
        for m in range(1, n + 1):
            prev = u[n - m]
            u[n, 1:] += phi[m] * p_right * prev[:-1]
            u[n, :-1] += phi[m] * (1 - p_right) * prev[1:]
    return u[:, 1:-1]


def test_small_examples():
    t = build_jump_counts(0.5, 4, 4)
    assert t.b[2, 2] == 0.25
    assert t.b[1, 1] == 0.5
    assert t.b[0, 0] == 1.0
    surv = SibuyaModel(0.5).survival_array(4)
    assert np.allclose(t.p[:, 0], surv, rtol=1e-15)
    assert t.p[1, 1] == 0.5 and t.p[1, 0] == 0.5
    assert jump_count_closed_form(0.5, 1, 0) == 0.5
    assert jump_count_closed_form(0.5, 1, 1) == 0.5
    assert jump_count_closed_form(0.5, 2, 2) == 0.25


@pytest.mark.parametrize("alpha", [0.25, 0.5, 0.8])
@pytest.mark.parametrize("n", [0, 1, 3, 7])
def test_table_matches_enumeration(alpha, n):
    t = build_jump_counts(alpha, n, n)
    ref = brute_force_jump_law(alpha, n)
    assert np.max(np.abs(t.jump_probabilities(n) - ref)) < 1e-15


@pytest.mark.parametrize("alpha", ALPHAS)
def test_closed_form_matches_table(alpha):
    t = build_jump_counts(alpha, 40, 40)
    exact = np.array(jump_count_closed_form_table(alpha, 40, 40))
    for n in range(41):
        assert np.max(np.abs(exact[n, : n + 1] - t.p[n, : n + 1])) <= 1e-10
        assert np.all(exact[n, n + 1 :] == 0.0)


def test_float_closed_form_and_its_horizon():
    exact = np.array(jump_count_closed_form_table(0.6, 20, 20))
    approx = np.array(jump_count_closed_form_table(0.6, 20, 20, exact=False))
    assert np.max(np.abs(exact - approx)) < 1e-9
    with pytest.raises(ValueError):
        jump_count_closed_form(0.6, 61, 3, exact=False)


@pytest.mark.parametrize("alpha", ALPHAS + [1.0])
def test_completeness(alpha):
    t = build_jump_counts(alpha, 2000)
    assert np.max(np.abs(t.p.sum(axis=1) - 1.0)) <= 1e-12
    assert np.all(t.p >= 0.0)


@pytest.mark.parametrize("alpha", [0.4, 0.9])
def test_fft_path_stays_consistent(alpha):
    n_max = 6000
    t = build_jump_counts(alpha, n_max, rows=[0, 10, 2047, 2048, 4000, n_max])
    assert np.max(np.abs(t.p.sum(axis=1) - 1.0)) <= 1e-11
    for n in (10, 2048, 4000, n_max):
        assert expected_jumps(t, n) == pytest.approx(expected_jumps_closed(alpha, n), rel=1e-9)


@pytest.mark.parametrize("alpha", [0.3, 0.7])
def test_marginal_consistency(alpha):
    t = build_jump_counts(alpha, 300)
    cumulative = np.cumsum(t.b, axis=0)  # P[T_k <= n]
    assert np.all(np.diff(cumulative, axis=0) >= 0.0)
    assert np.all(cumulative <= 1.0 + 1e-12)
    # P[T_k <= n] = sum_{j >= k} P_j(n)
    tail = np.cumsum(t.p[:, ::-1], axis=1)[:, ::-1]
    assert np.allclose(cumulative, tail, atol=1e-12)


def test_rows_subset_matches_full_table():
    full = build_jump_counts(0.55, 500)
    part = build_jump_counts(0.55, 500, rows=[3, 250, 500])
    for n in (3, 250, 500):
        assert np.allclose(part.jump_probabilities(n), full.jump_probabilities(n), rtol=0, atol=1e-15)
    with pytest.raises(ValueError):
        part.jump_probabilities(4)


def test_expected_jumps_alpha_one_is_n():
    t = build_jump_counts(1.0, 500)
    for n in (0, 1, 17, 500):
        assert expected_jumps(t, n) == pytest.approx(n, abs=1e-9)


@pytest.mark.parametrize("alpha", ALPHAS)
def test_expected_jumps_matches_renewal_function(alpha):
    t = build_jump_counts(alpha, 1000)
    n = np.arange(0, 1001, 50)
    got = np.array([expected_jumps(t, int(k)) for k in n])
    assert np.allclose(got, expected_jumps_closed(alpha, n), rtol=1e-10, atol=1e-12)


@pytest.mark.slow
@pytest.mark.parametrize("alpha", [0.5, 0.7, 0.9])
def test_expected_jumps_scaling(alpha):
    n = np.unique(np.geomspace(100, 10_000, 25).astype(int))
    t = build_jump_counts(alpha, 10_000, rows=n)
    e = np.array([expected_jumps(t, int(k)) for k in n])
    slope = np.polyfit(np.log(n), np.log(e), 1)[0]
    assert alpha - 0.05 <= slope <= alpha + 0.05
    assert 0.8 <= e[-1] / 10_000**alpha <= 1.2


def test_short_table_is_rejected_by_expected_jumps():
    t = build_jump_counts(0.5, 400, k_max=10)
    with pytest.raises(ValueError, match="captures only"):
        expected_jumps(t, 400)
    with pytest.raises(ValueError):
        build_jump_counts(0.5, 10, k_max=11)


def test_subordination_examples():
    assert subordinated_density(0.7, 0.5, 0, 0) == 1.0
    assert subordinated_density(0.5, 0.5, 0, 1) == pytest.approx(0.5, abs=1e-15)
    assert subordinated_density(0.5, 0.5, 1, 1) == pytest.approx(0.25, abs=1e-15)
    assert subordinated_density(0.5, 0.5, -1, 1) == pytest.approx(0.25, abs=1e-15)
    assert subordinated_density(0.5, 0.5, 5, 3) == 0.0


@pytest.mark.parametrize("alpha", ALPHAS)
def test_subordinated_field_sums_to_one(alpha):
    table = build_jump_counts(alpha, 200, 200)
    for n in (1, 2, 50, 199, 200):
        _, mass = subordinated_field(alpha, 0.5, n, table)
        assert abs(mass.sum() - 1.0) <= 1e-12


@pytest.mark.parametrize("alpha, p_right", [(0.5, 0.5), (0.8, 0.7), (0.35, 0.2)])
def test_subordination_matches_renewal_equation(alpha, p_right):
    n_max = 30
    ref = renewal_equation_field(alpha, p_right, n_max)
    table = build_jump_counts(alpha, n_max, n_max)
    for n in range(n_max + 1):
        sites, mass = subordinated_field(alpha, p_right, n, table)
        row = ref[n, n_max + sites]
        assert np.max(np.abs(mass - row)) < 1e-14


@settings(max_examples=50, deadline=None)
@given(k=st.integers(0, 60), p=st.sampled_from([0.0, 1.0]) | st.floats(1e-12, 1.0 - 1e-12))
def test_walk_distribution_is_a_law(k, p):
    sites = np.arange(-k - 2, k + 3)
    d = walk_distribution(k, p, sites)
    assert d.sum() == pytest.approx(1.0, abs=1e-12)
    assert np.all(d[(sites + k) % 2 == 1] == 0.0)
    assert np.dot(sites, d) == pytest.approx(k * (2 * p - 1), abs=1e-9)
