import itertools

import numpy as np
import pytest
from hypothesis import given, strategies as st

from otecon.entropic import _gibbs, sinkhorn_potentials
from otecon.inverse import (DegenerateDesignError, InverseConfig, ObservedPlan, fit_inverse_ot, fit_lasso,
                            gravity_fit)

TIGHT = InverseConfig(moment_tol=1e-11)


def _forward(phi, p, q, mask=None):
    mk = None if mask is None else mask.astype(float)
    u, v, _ = sinkhorn_potentials(phi, p, q, 1.0, mask=mk, tol=1e-15)
    return _gibbs(phi, u, v, 1.0, mk)


def _margins(rng, n, m):
    p, q = rng.uniform(0.5, 1.5, n), rng.uniform(0.5, 1.5, m)
    return p / p.sum(), q / q.sum()


def test_single_coefficient_recovered():
    rng = np.random.default_rng(0)
    p, q = _margins(rng, 5, 5)
    basis = rng.normal(size=(1, 5, 5))
    obs = ObservedPlan(_forward(1.5 * basis[0], p, q))
    lam, pot, report = fit_inverse_ot(obs, basis, TIGHT)
    assert lam[0] == pytest.approx(1.5, abs=1e-6)
    assert report.converged and pot.u.min() == 0.0


def test_independent_plan_gives_zero():
    rng = np.random.default_rng(1)
    p, q = _margins(rng, 4, 5)
    lam, _, _ = fit_inverse_ot(ObservedPlan(np.outer(p, q)), rng.normal(size=(2, 4, 5)), TIGHT)
    assert np.abs(lam).max() <= 1e-8


def test_one_by_one_is_not_identified():
    with pytest.raises(DegenerateDesignError):
        fit_inverse_ot(ObservedPlan([[1.0]]), np.ones((1, 1, 1)))


def test_collinear_with_fixed_effects_names_combination():
    rng = np.random.default_rng(2)
    a, b = rng.normal(size=4), rng.normal(size=4)
    basis = np.stack([rng.normal(size=(4, 4)), a[:, None] + b[None, :]])
    with pytest.raises(DegenerateDesignError, match=r"phi\[1\]") as info:
        fit_inverse_ot(ObservedPlan(np.full((4, 4), 1 / 16)), basis)
    assert abs(info.value.combination[1]) == 1.0


@given(st.integers(0, 2**32 - 1))
def test_recovery_and_monotone_objective(seed):
    rng = np.random.default_rng(seed)
    n, m, K = rng.integers(3, 7), rng.integers(3, 7), rng.integers(1, 4)
    p, q = _margins(rng, n, m)
    basis = rng.normal(size=(K, n, m))
    lam_true = rng.uniform(-1, 1, K)
    obs = ObservedPlan(_forward(np.tensordot(lam_true, basis, axes=1), p, q))
    lam, _, report = fit_inverse_ot(obs, basis, TIGHT)
    assert np.abs(lam - lam_true).max() <= 1e-6
    assert np.all(np.diff(report.objective_history) <= 1e-12)


def test_lasso_zero_penalty_matches_plain_fit():
    rng = np.random.default_rng(3)
    p, q = _margins(rng, 6, 6)
    basis = rng.normal(size=(3, 6, 6))
    obs = ObservedPlan(_forward(np.tensordot([0.8, -0.4, 0.2], basis, axes=1), p, q))
    lam, _, _ = fit_inverse_ot(obs, basis, TIGHT)
    lam0, _, active = fit_lasso(obs, basis, 0.0, TIGHT)
    assert np.abs(lam0 - lam).max() <= 1e-6
    assert active == (0, 1, 2)


def test_lasso_huge_penalty_kills_everything():
    rng = np.random.default_rng(4)
    p, q = _margins(rng, 5, 5)
    basis = rng.normal(size=(2, 5, 5))
    obs = ObservedPlan(_forward(basis[0], p, q))
    lam, _, active = fit_lasso(obs, basis, 1e6)
    assert np.all(lam == 0.0) and active == ()


def _orthogonal_basis(n):
    # centered, mutually orthogonal cell patterns with no row/column component
    grid = np.arange(n) - (n - 1) / 2
    b1 = np.outer(grid, grid)
    b2 = np.outer(grid ** 2 - np.mean(grid ** 2), grid)
    b3 = np.outer(grid, grid ** 2 - np.mean(grid ** 2))
    return np.stack([b / np.abs(b).max() for b in (b1, b2, b3)])


def test_lasso_selects_planted_support():
    n = 6
    basis = _orthogonal_basis(n)
    w = np.full(n, 1.0 / n)
    obs = ObservedPlan(_forward(2.0 * basis[0], w, w))
    lam, _, active = fit_lasso(obs, basis, 0.01, TIGHT)
    assert active == (0,)
    # oracle: the penalized fit restricted to the true support solves a 1-D problem
    lam_full, _, _ = fit_inverse_ot(obs, basis[:1], TIGHT)
    assert 0 < lam[0] < lam_full[0]


def test_lasso_rejects_negative_penalty():
    with pytest.raises(ValueError):
        fit_lasso(ObservedPlan(np.full((2, 2), 0.25)), np.zeros((0, 2, 2)), -1.0)


def _gravity_world(rng, n, lam):
    pts = rng.uniform(size=(n, 2))
    dist = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    basis = np.stack([-dist, -dist ** 2])[: len(lam)]
    mask = ~np.eye(n, dtype=bool)
    p = rng.uniform(1, 2, n)
    q = rng.uniform(1, 2, n)
    q *= p.sum() / q.sum()
    flows = _forward(np.tensordot(lam, basis, axes=1), p, q, mask)
    return flows, basis


def test_gravity_recovers_and_balances():
    rng = np.random.default_rng(5)
    flows, basis = _gravity_world(rng, 6, np.array([1.2, 0.7]))
    g = gravity_fit(flows, basis, TIGHT)
    assert np.abs(g.coefficients - [1.2, 0.7]).max() <= 1e-6
    assert np.abs(g.fitted.sum(1) - flows.sum(1)).max() <= 1e-8
    assert np.abs(g.fitted.sum(0) - flows.sum(0)).max() <= 1e-8
    assert np.all(np.diag(g.fitted) == 0.0)


def test_gravity_three_countries_symmetric_basis_is_degenerate():
    rng = np.random.default_rng(6)
    flows, basis = _gravity_world(rng, 3, np.array([1.0]))
    with pytest.raises(DegenerateDesignError):
        gravity_fit(flows, basis)


def test_gravity_without_basis_is_masked_scaling():
    rng = np.random.default_rng(7)
    flows = rng.uniform(1, 2, (4, 4)) * ~np.eye(4, dtype=bool)
    g = gravity_fit(flows, np.zeros((0, 4, 4)), TIGHT)
    assert np.abs(g.fitted.sum(1) - flows.sum(1)).max() <= 1e-8
    # the fitted array is biproportional: log-fitted = row + col effects off the diagonal
    off = ~np.eye(4, dtype=bool)
    logf = np.log(g.fitted[off])
    rows, cols = np.nonzero(off)
    D = np.zeros((len(rows), 8))
    D[np.arange(len(rows)), rows] = 1
    D[np.arange(len(rows)), 4 + cols] = 1
    coef, *_ = np.linalg.lstsq(D, logf, rcond=None)
    assert np.abs(D @ coef - logf).max() <= 1e-9


def test_gravity_uniform_flows_give_zero():
    n = 5
    flows = np.full((n, n), 3.0) * ~np.eye(n, dtype=bool)
    # symmetric ring adjacency: every country has the same masked row and column sums
    sym = np.zeros((n, n))
    for i, j in itertools.combinations(range(n), 2):
        if (j - i) % n in (1, n - 1):
            sym[i, j] = sym[j, i] = 1.0
    g = gravity_fit(flows, sym[None], TIGHT)
    assert abs(g.coefficients[0]) <= 1e-8


def test_gravity_drops_silent_country():
    rng = np.random.default_rng(9)
    flows = rng.uniform(1, 2, (4, 4)) * ~np.eye(4, dtype=bool)
    flows[2, :] = 0.0
    with pytest.warns(UserWarning, match="dropping"):
        g = gravity_fit(flows, np.zeros((0, 4, 4)), TIGHT)
    assert 2 not in g.kept


def test_entropy_maximal_among_constraint_preserving_perturbations():
    rng = np.random.default_rng(10)
    p, q = _margins(rng, 3, 3)
    basis = rng.normal(size=(1, 3, 3))
    obs = ObservedPlan(_forward(0.7 * basis[0], p, q))
    _, _, report = fit_inverse_ot(obs, basis, TIGHT)
    pi = report.plan

    def entropy(a):
        return -np.sum(a * np.log(a))

    # perturbation directions preserving margins and the single moment
    cells = []
    for a in range(2):
        for b in range(2):
            d = np.zeros((3, 3))
            d[a, b], d[a, 2], d[2, b], d[2, 2] = 1, -1, -1, 1
            cells.append(d)
    M = np.array([[np.sum(d * basis[0]) for d in cells]])
    null = np.linalg.svd(M)[2][1:]  # 3 directions orthogonal to the moment
    dirs = [sum(c * d for c, d in zip(row, cells)) for row in null[:2]]
    base = entropy(pi)
    for s, t in itertools.product(np.linspace(-0.02, 0.02, 9), repeat=2):
        cand = pi + s * dirs[0] + t * dirs[1]
        if np.all(cand > 0):
            assert entropy(cand) <= base + 1e-12
