import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from otecon.finance import MarginalLaw
from otecon.quantiles import (DegenerateRegressorError, QuantileGrid, RegressionData, classic_qr,
                              empirical_quantile_interval, is_monotone_coupling, monotone_coupling, pinball_loss,
                              quantile_transform_ot, vqr_solve)


def test_quantile_transform_two_atoms():
    grid = QuantileGrid([0.25, 0.75])
    plan, monotone = quantile_transform_ot(grid, MarginalLaw([3.0, 7.0], [0.5, 0.5]))
    assert monotone
    value = np.sum(plan * np.outer(grid.taus, [3.0, 7.0]))
    assert value == pytest.approx(3.0)
    swapped = 0.5 * 0.25 * 7.0 + 0.5 * 0.75 * 3.0
    assert value > swapped


def test_quantile_transform_single_atom_and_identity():
    grid = QuantileGrid.uniform(4)
    plan, _ = quantile_transform_ot(grid, MarginalLaw([5.0], [1.0]))
    assert np.allclose(plan[:, 0], 0.25)
    plan, monotone = quantile_transform_ot(grid, MarginalLaw(grid.taus, grid.weights))
    assert monotone and np.allclose(plan, np.eye(4) / 4)


@given(st.integers(1, 6), st.integers(0, 2**32 - 1))
def test_sorted_coupling_beats_permutations(n, seed):
    rng = np.random.default_rng(seed)
    x, y = np.sort(rng.uniform(size=n)), np.sort(rng.normal(size=n))
    sorted_value = float(x @ y)
    for perm in itertools.permutations(range(n)):
        assert float(x @ y[list(perm)]) <= sorted_value + 1e-12


@given(st.integers(0, 2**32 - 1))
def test_ot_plan_is_north_west_corner(seed):
    rng = np.random.default_rng(seed)
    m, k = rng.integers(2, 7), rng.integers(1, 7)
    grid = QuantileGrid.uniform(int(m))
    Q = MarginalLaw(rng.normal(size=k), rng.dirichlet(np.ones(k)))
    plan, monotone = quantile_transform_ot(grid, Q)
    assert monotone
    assert np.sum(plan * np.outer(grid.taus, Q.support)) == pytest.approx(
        np.sum(monotone_coupling(grid.weights, Q.probs) * np.outer(grid.taus, Q.support)), abs=1e-12)


def test_monotone_detector():
    assert not is_monotone_coupling(np.array([[0.0, 1.0], [1.0, 0.0]]))


def test_classic_qr_median_and_exact_fit():
    assert classic_qr(RegressionData.intercept_only([1.0, 2.0, 9.0]), 0.5)[0] == pytest.approx(2.0)
    X = np.c_[np.ones(4), [1.0, 2.0, 3.0, 4.0]]
    assert np.allclose(classic_qr(RegressionData(X, 2 * X[:, 1]), 0.3), [0.0, 2.0], atol=1e-10)


def test_classic_qr_boundary_loss():
    Y = np.array([0.0, 1.0, 2.0, 3.0])
    beta = classic_qr(RegressionData.intercept_only(Y), 0.25)
    best = min(pinball_loss(Y - c, 0.25) for c in Y)
    assert pinball_loss(Y - beta[0], 0.25) == pytest.approx(best, abs=1e-12)
    assert 0.0 - 1e-12 <= beta[0] <= 1.0 + 1e-12


@given(st.integers(0, 2**32 - 1), st.floats(0.05, 0.95))
def test_classic_qr_optimality_fractions(seed, tau):
    rng = np.random.default_rng(seed)
    N = int(rng.integers(5, 25))
    X = np.c_[np.ones(N), rng.normal(size=N)]
    Y = X @ [1.0, 0.5] + rng.normal(size=N)
    beta = classic_qr(RegressionData(X, Y), tau)
    r = Y - X @ beta
    below = np.mean(r < -1e-9)
    at_or_below = np.mean(r <= 1e-9)
    assert below <= tau + 1e-9 <= at_or_below + 2e-9


def test_rank_deficient_design():
    X = np.c_[np.ones(4), np.ones(4)]
    with pytest.raises(DegenerateRegressorError):
        classic_qr(RegressionData(X, np.arange(4.0)), 0.5)


def test_grid_needs_two_points():
    with pytest.raises(ValueError):
        QuantileGrid.uniform(1)


@pytest.mark.parametrize("m,N", [(2, 2), (4, 9), (8, 8), (20, 60)])
def test_vqr_intercept_only_matches_empirical_quantiles(m, N):
    Y = np.random.default_rng(m * 100 + N).normal(size=N)
    res = vqr_solve(RegressionData.intercept_only(Y), QuantileGrid.uniform(m))
    for level, beta in zip(res.curve.levels, res.curve.beta[:, 0]):
        lo, hi = empirical_quantile_interval(Y, level)
        assert lo - 1e-9 <= beta <= hi + 1e-9
    assert np.allclose(res.plan.sum(axis=1), 1.0 / m)
    assert np.allclose(res.plan.sum(axis=0), 1.0 / N)
    assert res.representation_error <= 1e-9
    assert res.curve.crossing == []


def test_vqr_mean_independence_and_forward_model():
    rng = np.random.default_rng(12)
    N = m = 40
    x = rng.uniform(size=N)
    U = (np.arange(N) + 0.5) / N
    rng.shuffle(U)
    X = np.c_[np.ones(N), x]
    Y = U + (1 + U) * x
    res = vqr_solve(RegressionData(X, Y), QuantileGrid.uniform(m))
    assert np.abs(res.plan @ X - X.mean(axis=0) / m).max() <= 1e-9
    truth = np.c_[res.curve.levels, 1 + res.curve.levels]
    interior = slice(3, -3)
    # a Lipschitz-1 curve on a grid of spacing 1/m, up to a few cells of sampling slack
    assert np.abs(res.curve.beta[interior] - truth[interior]).max() <= 0.5
    assert res.representation_error <= 1e-9


def test_vqr_needs_intercept():
    with pytest.raises(ValueError):
        vqr_solve(RegressionData(np.c_[np.arange(3.0)], np.arange(3.0)), QuantileGrid.uniform(2))


def test_empirical_interval_point_and_tie():
    assert empirical_quantile_interval([3.0, 1.0, 2.0], 0.5) == (2.0, 2.0)
    assert empirical_quantile_interval([4.0, 1.0, 3.0, 2.0], 0.5) == (2.0, 3.0)
