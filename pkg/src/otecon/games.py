"""Hide-and-seek through transport, with a direct minimax LP oracle, and
Strassen-type coupling tests for partially identified models."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import InfeasibleInputError, OtError, ToleranceConfig
from .linprog import LinearProgram, solve_lp
from .otexact import solve_exact, solve_with_unmatched

MAX_ENUMERATION = 20


@dataclass(frozen=True)
class HideSeekGame:
    """Hider picks a cell (i, j); Seeker picks row i or column j and is paid K_ij on a hit."""

    K: np.ndarray

    def __post_init__(self):
        K = np.atleast_2d(np.asarray(self.K, dtype=float))
        if K.ndim != 2 or K.shape[0] != K.shape[1] or K.shape[0] == 0:
            raise ValueError("payoff matrix must be square and non-empty")
        if not np.all(np.isfinite(K)) or np.any(K <= 0):
            raise ValueError("payoffs must be finite and strictly positive")
        object.__setattr__(self, "K", K)

    @property
    def n(self) -> int:
        return self.K.shape[0]


@dataclass(frozen=True)
class GameSolution:
    game_value: float
    hider_probs: np.ndarray
    seeker_row_probs: np.ndarray
    seeker_col_probs: np.ndarray
    ot_value: float

    def seeker_guarantee(self, K) -> float:
        """Worst expected payoff of the seeker's mix over pure hider cells."""
        return float(((self.seeker_row_probs[:, None] + self.seeker_col_probs[None, :]) * K).min())

    def hider_guarantee(self, K) -> float:
        """Best line payoff the seeker can get against the hider's mix."""
        pay = K * self.hider_probs
        return float(max(pay.sum(axis=1).max(), pay.sum(axis=0).max()))


def hide_and_seek_solve(game: HideSeekGame, cfg: ToleranceConfig | None = None) -> GameSolution:
    """Solve the game from the OT problem with margins at most 1/n and surplus 1/K.

    With W the OT value and V = 1/W, the hider plays x = V pi / K and the
    seeker plays a = V u / n on rows and b = V v / n on columns; the game
    value is V / n.
    """
    n = game.n
    w = np.full(n, 1.0 / n)
    sol = solve_with_unmatched(w, w, 1.0 / game.K, cfg)
    V = 1.0 / sol.value
    x = V * np.array(sol.plan.mass) / game.K
    a = V * np.array(sol.potentials.u) / n
    b = V * np.array(sol.potentials.v) / n
    return GameSolution(V / n, x, a, b, V)


def minimax_oracle(game: HideSeekGame, cfg: ToleranceConfig | None = None) -> float:
    """min over hider mixes of the largest line payoff, as one LP in (x, t)."""
    n = game.n
    K = game.K
    rows = []
    for i in range(n):
        r = np.zeros((n, n))
        r[i] = K[i]
        rows.append(np.append(r.reshape(-1), -1.0))
    for j in range(n):
        r = np.zeros((n, n))
        r[:, j] = K[:, j]
        rows.append(np.append(r.reshape(-1), -1.0))
    rows.append(np.append(np.ones(n * n), 0.0))
    c = np.zeros(n * n + 1)
    c[-1] = -1.0
    lp = LinearProgram(c, np.array(rows), np.append(np.zeros(2 * n), 1.0), ("<=",) * (2 * n) + ("=",))
    sol = solve_lp(lp, cfg)
    if not sol.optimal:
        raise InfeasibleInputError(f"minimax LP ended with status {sol.status}")
    return -sol.objective_value


@dataclass(frozen=True)
class IdentificationSpec:
    """Correspondence Gamma[x, y] = True iff y is allowed at x, with laws P on X and Q on Y."""

    gamma: np.ndarray
    P: np.ndarray
    Q: np.ndarray

    def __post_init__(self):
        g = np.atleast_2d(np.asarray(self.gamma))
        if g.dtype != bool and not np.all(np.isin(g, (0, 1))):
            raise ValueError("correspondence entries must be boolean")
        P = np.asarray(self.P, dtype=float).reshape(-1)
        Q = np.asarray(self.Q, dtype=float).reshape(-1)
        if g.shape != (len(P), len(Q)):
            raise ValueError("correspondence shape must be |X| x |Y|")
        for name, w in (("P", P), ("Q", Q)):
            if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
                raise ValueError(f"{name} must lie on the simplex")
        object.__setattr__(self, "gamma", g.astype(bool))
        object.__setattr__(self, "P", P)
        object.__setattr__(self, "Q", Q)


@dataclass(frozen=True)
class StrassenResult:
    primal: float
    dual: float
    witness: tuple
    plan: np.ndarray

    def identified(self, tol: float = 1e-9) -> bool:
        return self.primal <= tol


def strassen_test(spec: IdentificationSpec, cfg: ToleranceConfig | None = None) -> StrassenResult:
    """Smallest mass a coupling must put outside Gamma, and the best set-inequality witness.

    The dual enumerates every subset B of Y and maximizes Q(B) - P(Gamma^-1(B)),
    where Gamma^-1(B) is the set of x allowed to reach some y in B. The witness
    is the first maximizing subset in bitmask order, as 0-based indices.
    """
    nx, ny = spec.gamma.shape
    if ny > MAX_ENUMERATION:
        raise OtError(f"subset enumeration capped at |Y| = {MAX_ENUMERATION}, got {ny}")
    sol = solve_exact(spec.P, spec.Q, -(~spec.gamma).astype(float), cfg)
    primal = -sol.value

    subsets = np.arange(2 ** ny, dtype=np.int64)
    bits = (subsets[:, None] >> np.arange(ny)) & 1
    qB = bits @ spec.Q
    allowed = spec.gamma.astype(np.int64) @ (1 << np.arange(ny, dtype=np.int64))
    pB = np.zeros(len(subsets))
    for x in range(nx):
        pB += spec.P[x] * ((subsets & allowed[x]) != 0)
    vals = qB - pB
    best = int(np.argmax(vals))
    witness = tuple(int(y) for y in np.flatnonzero(bits[best]))
    return StrassenResult(max(primal, 0.0), float(vals[best]), witness, np.array(sol.plan.mass))
