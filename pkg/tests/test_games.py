import numpy as np
import pytest
from hypothesis import given, strategies as st

from otecon.core import OtError
from otecon.games import HideSeekGame, IdentificationSpec, hide_and_seek_solve, minimax_oracle, strassen_test


def test_one_by_one_game():
    sol = hide_and_seek_solve(HideSeekGame([[3.0]]))
    assert sol.game_value == pytest.approx(3.0) and sol.hider_probs[0, 0] == pytest.approx(1.0)
    assert minimax_oracle(HideSeekGame([[3.0]])) == pytest.approx(3.0)


def test_all_twos():
    sol = hide_and_seek_solve(HideSeekGame(np.full((2, 2), 2.0)))
    assert sol.game_value == pytest.approx(1.0)


def test_anti_diagonal_game():
    sol = hide_and_seek_solve(HideSeekGame([[1.0, 2.0], [2.0, 1.0]]))
    assert sol.ot_value == pytest.approx(1.0) and sol.game_value == pytest.approx(0.5)
    assert np.allclose(sol.hider_probs, np.eye(2) / 2)


def test_oracle_values():
    assert minimax_oracle(HideSeekGame(np.ones((2, 2)))) == pytest.approx(0.5)
    g = HideSeekGame([[10.0, 1.0], [1.0, 10.0]])
    assert hide_and_seek_solve(g).game_value == pytest.approx(minimax_oracle(g), abs=1e-8)


def test_game_validation():
    with pytest.raises(ValueError):
        HideSeekGame([[1.0, 0.0], [1.0, 1.0]])
    with pytest.raises(ValueError):
        HideSeekGame([[1.0, 2.0]])


@given(st.integers(1, 5), st.integers(0, 2**32 - 1))
def test_value_matches_oracle_and_strategies_certify(n, seed):
    K = np.random.default_rng(seed).uniform(0.1, 5.0, (n, n))
    g = HideSeekGame(K)
    sol = hide_and_seek_solve(g)
    assert sol.game_value == pytest.approx(minimax_oracle(g), abs=1e-8)
    assert sol.seeker_guarantee(K) >= sol.game_value - 1e-9
    assert sol.hider_guarantee(K) <= sol.game_value + 1e-9
    assert sol.hider_probs.sum() == pytest.approx(1.0)
    assert sol.seeker_row_probs.sum() + sol.seeker_col_probs.sum() == pytest.approx(1.0)


def test_strassen_examples():
    eye = np.eye(2, dtype=bool)
    same = strassen_test(IdentificationSpec(eye, [0.5, 0.5], [0.5, 0.5]))
    assert same.primal == pytest.approx(0.0, abs=1e-12) and same.dual == pytest.approx(0.0)
    off = strassen_test(IdentificationSpec(eye, [0.7, 0.3], [0.5, 0.5]))
    assert off.primal == pytest.approx(0.2) and off.dual == pytest.approx(0.2) and off.witness == (1,)
    full = strassen_test(IdentificationSpec(np.ones((2, 3), dtype=bool), [0.1, 0.9], [0.2, 0.3, 0.5]))
    assert full.primal == pytest.approx(0.0, abs=1e-12) and full.identified()


@given(st.integers(0, 2**32 - 1))
def test_strassen_duality_and_monotonicity(seed):
    rng = np.random.default_rng(seed)
    nx, ny = int(rng.integers(1, 6)), int(rng.integers(1, 9))
    gamma = rng.uniform(size=(nx, ny)) < 0.4
    P, Q = rng.dirichlet(np.ones(nx)), rng.dirichlet(np.ones(ny))
    res = strassen_test(IdentificationSpec(gamma, P, Q))
    assert res.primal == pytest.approx(res.dual, abs=1e-9)
    bigger = gamma | (rng.uniform(size=gamma.shape) < 0.3)
    assert strassen_test(IdentificationSpec(bigger, P, Q)).primal <= res.primal + 1e-12


def test_strassen_enumeration_cap():
    with pytest.raises(OtError, match="capped"):
        strassen_test(IdentificationSpec(np.ones((1, 21), dtype=bool), [1.0], np.full(21, 1 / 21)))
