import numpy as np
import pytest
from hypothesis import given

from otecon.markets import (HedonicSpec, MatchingOutcome, check_stability, hedonic_price_bounds, hedonic_reduce,
                            solve_stable_matching, wage_bounds)

from conftest import ot_instances


def test_single_positive_pair():
    out = solve_stable_matching([1.0], [1.0], [[2.0]])
    assert out.matched_mass == 1.0
    assert out.u[0] + out.v[0] == pytest.approx(2.0)
    assert out.stability_violations == []


def test_negative_surplus_stays_single():
    out = solve_stable_matching([1.0], [1.0], [[-1.0]])
    assert out.matched_mass == 0.0 and out.u[0] == 0.0 and out.v[0] == 0.0


def test_two_workers_one_firm():
    out = solve_stable_matching([1.0, 1.0], [1.0], [[1.0], [3.0]])
    assert np.array_equal(out.plan, [[0.0], [1.0]])
    assert out.singles_x[0] == 1.0 and out.u[0] == 0.0


def test_stability_checker_catches_blocking_pair():
    issues = check_stability(np.zeros((1, 1)), np.ones(1), np.ones(1), np.zeros(1), np.zeros(1),
                             np.array([[1.0]]), np.ones(1), np.ones(1))
    assert any("blocking" in s for s in issues)


@given(ot_instances(max_dim=7, balanced=False))
def test_random_outcomes_are_stable(inst):
    p, q, phi = inst
    out = solve_stable_matching(p, q, phi)
    assert check_stability(out.plan, out.singles_x, out.singles_y, out.u, out.v, phi, p, q, 1e-9) == []
    assert np.all(out.u >= 0) and np.all(out.v >= 0)


def test_wage_interval_collapses_on_match():
    out = solve_stable_matching([1.0], [1.0], [[2.0]])
    w = wage_bounds(out, [[0.0]], [[2.0]])
    assert w.width[0, 0] == pytest.approx(0.0, abs=1e-12)
    assert w.upper[0, 0] == pytest.approx(out.u[0])


def test_wage_bounds_require_consistent_split():
    out = solve_stable_matching([1.0], [1.0], [[2.0]])
    with pytest.raises(ValueError):
        wage_bounds(out, [[0.0]], [[1.0]])


def test_wage_intervals_nonempty_when_stable():
    out = solve_stable_matching([1.0, 1.0], [1.0], [[1.0], [3.0]])
    w = wage_bounds(out, [[0.5], [1.0]], [[0.5], [2.0]])
    assert np.all(w.lower <= w.upper + 1e-12)


@given(ot_instances(max_dim=6, balanced=False))
def test_symmetric_split_swaps_roles(inst):
    p, q, phi = inst
    out = solve_stable_matching(p, q, phi)
    w = wage_bounds(out, phi / 2, phi / 2)
    mirror = MatchingOutcome(out.plan.T, out.singles_y, out.singles_x, out.v, out.u, phi.T)
    wm = wage_bounds(mirror, phi.T / 2, phi.T / 2)
    # a wage paid one way is a wage received the other way
    assert np.allclose(wm.lower, -w.upper.T) and np.allclose(wm.upper, -w.lower.T)


def test_hedonic_reduce_example_and_ties():
    phi, z = hedonic_reduce(HedonicSpec([[0.0, 1.0]], [[1.0, 3.0]]))
    assert phi[0, 0] == 2.0 and z[0, 0] == 1
    _, z_tie = hedonic_reduce(HedonicSpec([[0.0, 0.0]], [[1.0, 1.0]]))
    assert z_tie[0, 0] == 0
    zero, _ = hedonic_reduce(HedonicSpec([[1.0, 2.0]], [[1.0, 2.0]]))
    assert zero[0, 0] == 0.0


def test_hedonic_prices_point_on_traded_quality():
    spec = HedonicSpec([[0.0, 1.0]], [[1.0, 3.0]])
    phi, _ = hedonic_reduce(spec)
    out = solve_stable_matching([1.0], [1.0], phi)
    bounds = hedonic_price_bounds(out, spec)
    assert bounds.traded.tolist() == [False, True]
    assert bounds.width[1] == pytest.approx(0.0, abs=1e-12)


def test_hedonic_no_trade_uses_zero_duals():
    spec = HedonicSpec([[5.0, 6.0]], [[1.0, 2.0]])
    phi, _ = hedonic_reduce(spec)
    out = solve_stable_matching([1.0], [1.0], phi)
    bounds = hedonic_price_bounds(out, spec)
    assert np.array_equal(bounds.lower, [1.0, 2.0]) and np.array_equal(bounds.upper, [5.0, 6.0])


@given(ot_instances(max_dim=4, balanced=False))
def test_hedonic_consistency_on_matched_pairs(inst):
    p, q, phi = inst
    rng = np.random.default_rng(int(abs(phi[0, 0]) * 1e6))
    spec = HedonicSpec(rng.uniform(0, 1, (len(p), 3)), rng.uniform(0, 2, (len(q), 3)))
    joint, z = hedonic_reduce(spec)
    out = solve_stable_matching(p, q, joint)
    for x, y in np.argwhere(out.plan > 1e-9):
        gain = spec.utilities[y, z[x, y]] - spec.costs[x, z[x, y]]
        assert gain == pytest.approx(out.u[x] + out.v[y], abs=1e-9)
    bounds = hedonic_price_bounds(out, spec)
    assert np.all(bounds.width[bounds.traded] <= 1e-9)


def test_hedonic_spec_validation():
    with pytest.raises(ValueError):
        HedonicSpec([[0.0]], [[0.0, 1.0]])
