import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import brentq

from otecon.core import NonConvergenceError, UnbalancedMassError, plan_margin_residual
from otecon.entropic import (EntropicConfig, LinkFunction, NumericalOverflowError, dual_objective, ipfp_solve,
                             plan_from_potentials, primal_objective, solve_regularized_general)
from otecon.otexact import solve_exact

from conftest import ot_instances


def _pi11_oracle(sigma):
    k = np.exp(2.0 / sigma)
    return brentq(lambda a: a * a - k * (0.5 - a) ** 2, 0.0, 0.5, xtol=1e-15)


def test_two_by_two_closed_form():
    half = np.array([0.5, 0.5])
    _, plan, _ = ipfp_solve(half, half, np.eye(2), EntropicConfig(sigma=0.5, marginal_tol=1e-13))
    expected = 0.5 * np.e ** 2 / (1 + np.e ** 2)
    assert plan.mass[0, 0] == pytest.approx(expected, abs=1e-10)
    assert plan.mass[0, 0] == pytest.approx(_pi11_oracle(0.5), abs=1e-10)


@given(ot_instances(max_dim=6), st.sampled_from([0.2, 0.5, 1.0, 3.0]))
def test_fixed_point_and_zero_gap(inst, sigma):
    p, q, phi = inst
    pot, plan, _ = ipfp_solve(p, q, phi, EntropicConfig(sigma=sigma, marginal_tol=1e-12))
    assert plan_margin_residual(plan, p, q) <= 1e-12
    dual = dual_objective(pot.u, pot.v, p, q, phi, sigma)
    assert dual == pytest.approx(primal_objective(plan, phi, sigma), abs=1e-9)


@given(ot_instances(max_dim=6), st.sampled_from([0.1, 1.0]))
def test_dual_objective_never_rises(inst, sigma):
    p, q, phi = inst
    trace = []
    ipfp_solve(p, q, phi, EntropicConfig(sigma=sigma, marginal_tol=1e-11),
               callback=lambda t, u, v: trace.append(dual_objective(u, v, p, q, phi, sigma)))
    assert np.all(np.diff(trace) <= 1e-12)


@given(ot_instances(max_dim=5))
def test_naive_and_log_domain_agree(inst):
    p, q, phi = inst
    _, a, _ = ipfp_solve(p, q, phi, EntropicConfig(sigma=0.5, marginal_tol=1e-12))
    _, b, _ = ipfp_solve(p, q, phi, EntropicConfig(sigma=0.5, marginal_tol=1e-12, log_domain=False))
    assert np.allclose(a.mass, b.mass, atol=1e-10)


def test_value_approaches_exact_as_sigma_shrinks():
    rng = np.random.default_rng(3)
    p, q = rng.dirichlet(np.ones(5)), rng.dirichlet(np.ones(5))
    phi = rng.uniform(-1, 1, (5, 5))
    exact = solve_exact(p, q, phi).value
    gaps = []
    for sigma in (1.0, 0.1, 0.01):
        _, plan, _ = ipfp_solve(p, q, phi, EntropicConfig(sigma=sigma, marginal_tol=1e-11,
                                                           epsilon_scaling_schedule=(1.0, 0.1)))
        value = primal_objective(plan, phi, sigma)
        assert 0.0 <= value - exact + 1e-9 <= sigma * np.log(25) + 1e-6
        gaps.append(value - exact)
    assert gaps[0] >= gaps[1] >= gaps[2]


def test_naive_mode_overflow_is_reported():
    with pytest.raises(NumericalOverflowError):
        ipfp_solve([1.0], [1.0], [[1000.0]], EntropicConfig(sigma=0.1, log_domain=False))
    _, plan, _ = ipfp_solve([1.0], [1.0], [[1000.0]], EntropicConfig(sigma=0.1))
    assert plan.mass[0, 0] == pytest.approx(1.0)


def test_sweep_cap_raises():
    rng = np.random.default_rng(1)
    p, q = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(4))
    with pytest.raises(NonConvergenceError):
        ipfp_solve(p, q, rng.normal(size=(4, 4)), EntropicConfig(sigma=0.01, max_iterations=3))


def test_config_validation():
    with pytest.raises(ValueError):
        EntropicConfig(sigma=0.0)
    with pytest.raises(ValueError):
        EntropicConfig(epsilon_scaling_schedule=(0.1, 1.0))
    with pytest.raises(UnbalancedMassError):
        ipfp_solve([1.0], [2.0], [[0.0]])


def test_plan_from_potentials_clamps():
    plan = plan_from_potentials([0.0], [0.0], [[1e6]], 1.0)
    assert np.isfinite(plan.mass).all()
    assert plan_from_potentials.last_clamped == 1


def test_log_link_matches_ipfp():
    rng = np.random.default_rng(4)
    p, q = rng.dirichlet(np.ones(4)), rng.dirichlet(np.ones(3))
    phi = rng.normal(size=(4, 3))
    _, a, _ = ipfp_solve(p, q, phi, EntropicConfig(marginal_tol=1e-12))
    _, b, _ = solve_regularized_general(p, q, phi, LinkFunction.log(), EntropicConfig(marginal_tol=1e-12))
    assert np.allclose(a.mass, b.mass, atol=1e-12)


def test_threshold_link_single_cell():
    pot, plan, W = solve_regularized_general([1.0], [1.0], [[3.0]], LinkFunction.identity_threshold())
    assert plan.mass[0, 0] == pytest.approx(1.0)
    assert 3.0 - pot.u[0] - pot.v[0] == pytest.approx(1.0)


def test_custom_link_uses_root_finder():
    link = LinkFunction.custom(None, lambda t: np.exp(t), lambda t: np.exp(t))
    rng = np.random.default_rng(5)
    p, q = rng.dirichlet(np.ones(3)), rng.dirichlet(np.ones(3))
    phi = rng.normal(size=(3, 3))
    _, a, _ = solve_regularized_general(p, q, phi, link, EntropicConfig(marginal_tol=1e-11))
    _, b, _ = ipfp_solve(p, q, phi, EntropicConfig(marginal_tol=1e-12))
    assert np.allclose(a.mass, b.mass, atol=1e-9)
