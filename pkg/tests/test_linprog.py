import numpy as np
import pytest
from hypothesis import given, strategies as st
from scipy.optimize import linprog as scipy_linprog

from otecon.linprog import INFEASIBLE, OPTIMAL, UNBOUNDED, LinearProgram, lp_from_rows, solve_lp, transportation_lp


def test_single_variable():
    sol = solve_lp(LinearProgram([1.0], [[1.0]], [1.0], ("<=",)))
    assert sol.status == OPTIMAL
    assert sol.x[0] == pytest.approx(1.0) and sol.y[0] == pytest.approx(1.0)


def test_contradictory_rows_are_infeasible():
    lp = lp_from_rows([1.0], [[1.0], [1.0]], [1.0, 2.0], ["=", "="])
    assert solve_lp(lp).status == INFEASIBLE


def test_unbounded_direction():
    lp = lp_from_rows([1.0, 1.0], [[1.0, -1.0]], [1.0], ["<="])
    assert solve_lp(lp).status == UNBOUNDED


def test_identity_transport_value():
    sol = solve_lp(transportation_lp([0.5, 0.5], [0.5, 0.5], np.eye(2)))
    assert sol.objective_value == pytest.approx(1.0, abs=1e-12)


def test_rejects_bad_sense():
    with pytest.raises(ValueError):
        LinearProgram([1.0], [[1.0]], [1.0], (">=",))


@given(st.integers(0, 2**32 - 1))
def test_matches_reference_solver_and_duality(seed):
    rng = np.random.default_rng(seed)
    m, n = rng.integers(1, 6), rng.integers(1, 8)
    A = rng.uniform(-1, 1, (m, n))
    x0 = rng.uniform(0, 1, n)
    b = A @ x0 + rng.uniform(0, 1, m)  # x0 is strictly feasible for the <= rows
    c = rng.uniform(-1, 1, n)
    A_box = np.vstack([A, np.eye(n)])
    b_box = np.concatenate([b, np.full(n, 3.0)])
    ours = solve_lp(LinearProgram(c, A_box, b_box, ("<=",) * (m + n)))
    ref = scipy_linprog(-c, A_ub=A_box, b_ub=b_box, bounds=(0, None), method="highs")
    assert ours.status == OPTIMAL
    assert ours.objective_value == pytest.approx(-ref.fun, abs=1e-9)
    # dual feasibility and strong duality
    assert np.all(ours.y >= -1e-9)
    assert np.all(A_box.T @ ours.y >= c - 1e-9)
    assert b_box @ ours.y == pytest.approx(ours.objective_value, abs=1e-9)


@given(st.integers(0, 2**32 - 1))
def test_equality_rows_with_redundancy(seed):
    rng = np.random.default_rng(seed)
    n, m = rng.integers(1, 5), rng.integers(1, 5)
    p = rng.dirichlet(np.ones(n))
    q = rng.dirichlet(np.ones(m))
    phi = rng.normal(size=(n, m))
    lp = transportation_lp(p, q, phi)
    ours = solve_lp(lp)
    ref = scipy_linprog(-phi.reshape(-1), A_eq=lp.constraint_matrix, b_eq=lp.rhs, method="highs")
    assert ours.objective_value == pytest.approx(-ref.fun, abs=1e-9)
    assert lp.rhs @ ours.y == pytest.approx(ours.objective_value, abs=1e-9)
