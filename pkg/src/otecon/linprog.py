"""Dense two-phase revised simplex with Bland anti-cycling.

Solves ``maximize c @ x`` subject to rows ``A[i] @ x (= or <=) b[i]`` and
``x >= 0``. The basis inverse is kept explicitly, updated by elementary row
operations and rebuilt from scratch every ``REFACTOR_EVERY`` pivots.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .core import ToleranceConfig

REFACTOR_EVERY = 50
PIVOT_TOL = 1e-11
DEGENERATE_STREAK = 20

OPTIMAL = "optimal"
INFEASIBLE = "infeasible"
UNBOUNDED = "unbounded"
STALLED = "stalled"


@dataclass(frozen=True)
class LinearProgram:
    objective: np.ndarray
    constraint_matrix: np.ndarray
    rhs: np.ndarray
    senses: tuple = ()

    def __post_init__(self):
        c = np.asarray(self.objective, dtype=float).reshape(-1)
        A = np.asarray(self.constraint_matrix, dtype=float)
        if A.size == 0:
            A = A.reshape(0, len(c))
        b = np.asarray(self.rhs, dtype=float).reshape(-1)
        senses = tuple(self.senses) if len(self.senses) else ("=",) * A.shape[0]
        if A.ndim != 2 or A.shape[1] != len(c):
            raise ValueError(f"constraint matrix shape {A.shape} does not match {len(c)} variables")
        if A.shape[0] != len(b) or len(senses) != len(b):
            raise ValueError("rhs and senses must have one entry per row")
        if any(s not in ("=", "<=") for s in senses):
            raise ValueError("row senses must be '=' or '<='")
        if not (np.all(np.isfinite(c)) and np.all(np.isfinite(A)) and np.all(np.isfinite(b))):
            raise ValueError("LP data must be finite")
        object.__setattr__(self, "objective", c)
        object.__setattr__(self, "constraint_matrix", A)
        object.__setattr__(self, "rhs", b)
        object.__setattr__(self, "senses", senses)

    @property
    def shape(self):
        return self.constraint_matrix.shape


@dataclass
class LpSolution:
    status: str
    x: np.ndarray | None
    y: np.ndarray | None
    objective_value: float | None
    pivots: int = 0

    @property
    def optimal(self) -> bool:
        return self.status == OPTIMAL


class _Tableau:
    """Revised-simplex state over a standard-form system ``M z = rhs, z >= 0``."""

    def __init__(self, M, rhs, basis, max_pivots):
        self.M = M
        self.rhs = rhs
        self.basis = list(basis)
        self.max_pivots = max_pivots
        self.pivots = 0
        self._since_refactor = 0
        self.refactor()

    def refactor(self):
        B = self.M[:, self.basis]
        self.Binv = np.linalg.inv(B) if len(self.basis) else np.zeros((0, 0))
        self.xB = self.Binv @ self.rhs
        self.xB[np.abs(self.xB) < PIVOT_TOL] = 0.0
        self._since_refactor = 0

    def duals(self, cost):
        return cost[self.basis] @ self.Binv

    def run(self, cost, allowed, opt_tol):
        """Pivot until optimal for ``maximize cost @ z``. Returns a status string.

        Entering columns are priced by largest reduced cost while pivots make
        progress; after ``DEGENERATE_STREAK`` consecutive zero-step pivots the
        rule switches to Bland's (lowest index) until a step moves the
        objective again. Cycling needs an endless degenerate run, which Bland
        excludes.
        """
        degenerate = 0
        while True:
            y = self.duals(cost)
            reduced = cost - y @ self.M
            reduced[~allowed] = 0.0
            reduced[self.basis] = 0.0
            candidates = np.flatnonzero(reduced > opt_tol)
            if candidates.size == 0:
                return OPTIMAL
            if self.pivots >= self.max_pivots:
                return STALLED
            if degenerate >= DEGENERATE_STREAK:
                j = int(candidates[0])
            else:
                j = int(candidates[np.argmax(reduced[candidates])])
            w = self.Binv @ self.M[:, j]
            pos = np.flatnonzero(w > PIVOT_TOL)
            if pos.size == 0:
                return UNBOUNDED
            ratios = self.xB[pos] / w[pos]
            best = ratios.min()
            ties = pos[ratios <= best + PIVOT_TOL * max(1.0, abs(best))]
            r = int(min(ties, key=lambda i: self.basis[i]))
            degenerate = degenerate + 1 if best <= PIVOT_TOL else 0
            self._pivot(r, j, w)

    def _pivot(self, r, j, w):
        wr = w[r]
        row = self.Binv[r] / wr
        self.Binv -= np.outer(w, row)
        self.Binv[r] = row
        theta = self.xB[r] / wr
        self.xB -= theta * w
        self.xB[r] = theta
        self.xB[np.abs(self.xB) < PIVOT_TOL] = 0.0
        self.basis[r] = j
        self.pivots += 1
        self._since_refactor += 1
        if self._since_refactor >= REFACTOR_EVERY:
            self.refactor()


def solve_lp(lp: LinearProgram, cfg: ToleranceConfig | None = None) -> LpSolution:
    """Solve ``lp`` and return primal ``x`` with one dual multiplier per row.

    Duals satisfy ``A.T @ y >= c`` and ``y >= 0`` on ``<=`` rows at optimum, so
    ``b @ y`` equals the optimal objective. A run hitting
    ``cfg.max_iterations`` pivots is reported as ``"stalled"``.
    """
    cfg = cfg or ToleranceConfig()
    A, b, c = lp.constraint_matrix, lp.rhs, lp.objective
    m, n = A.shape
    opt_tol = cfg.feasibility_tol

    if m == 0:
        if np.any(c > opt_tol):
            return LpSolution(UNBOUNDED, None, None, None)
        return LpSolution(OPTIMAL, np.zeros(n), np.zeros(0), 0.0)

    # Standard form: one slack per <= row, rows flipped so rhs >= 0.
    slack_rows = [i for i, s in enumerate(lp.senses) if s == "<="]
    n_slack = len(slack_rows)
    S = np.zeros((m, n_slack))
    for k, i in enumerate(slack_rows):
        S[i, k] = 1.0
    M = np.hstack([A, S])
    rhs = b.copy()
    sign = np.where(rhs < 0, -1.0, 1.0)
    M *= sign[:, None]
    rhs *= sign

    # Initial basis: a slack where it has +1 after flipping, else an artificial.
    basis = [-1] * m
    for k, i in enumerate(slack_rows):
        if sign[i] > 0:
            basis[i] = n + k
    art_rows = [i for i in range(m) if basis[i] < 0]
    n_art = len(art_rows)
    Art = np.zeros((m, n_art))
    for k, i in enumerate(art_rows):
        Art[i, k] = 1.0
        basis[i] = n + n_slack + k
    M = np.hstack([M, Art])
    total = n + n_slack + n_art
    is_art = np.zeros(total, dtype=bool)
    is_art[n + n_slack:] = True

    tab = _Tableau(M, rhs, basis, cfg.max_iterations)

    if n_art:
        cost1 = np.where(is_art, -1.0, 0.0)
        status = tab.run(cost1, np.ones(total, dtype=bool), opt_tol)
        if status == STALLED:
            return LpSolution(STALLED, None, None, None, tab.pivots)
        scale = max(1.0, float(np.abs(rhs).max(initial=0.0)))
        if -cost1[tab.basis] @ tab.xB > cfg.feasibility_tol * scale:
            return LpSolution(INFEASIBLE, None, None, None, tab.pivots)
        _drive_out_artificials(tab, is_art)

    cost2 = np.concatenate([c, np.zeros(n_slack + n_art)])
    status = tab.run(cost2, ~is_art, opt_tol)
    if status != OPTIMAL:
        return LpSolution(status, None, None, None, tab.pivots)

    tab.refactor()
    z = np.zeros(total)
    z[tab.basis] = np.maximum(tab.xB, 0.0)
    x = z[:n]
    y = tab.duals(cost2) * sign
    return LpSolution(OPTIMAL, x, y, float(c @ x), tab.pivots)


def _drive_out_artificials(tab: _Tableau, is_art):
    """Pivot zero-level artificials out of the basis where a real column allows it.

    An artificial that cannot leave sits on a redundant row; every real column
    has a zero entry there, so its level stays at zero for the rest of the run.
    """
    for r in range(len(tab.basis)):
        if not is_art[tab.basis[r]]:
            continue
        row = tab.Binv[r] @ tab.M
        row[is_art] = 0.0
        row[tab.basis] = 0.0
        cand = np.flatnonzero(np.abs(row) > 1e-9)
        if cand.size:
            j = int(cand[0])
            tab._pivot(r, j, tab.Binv @ tab.M[:, j])


def transportation_lp(p, q, phi, row_sense="=", col_sense="=") -> LinearProgram:
    """The OT primal as an LP over the row-major flattening of the plan."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    phi = np.asarray(phi, dtype=float)
    n, m = phi.shape
    A = np.zeros((n + m, n * m))
    for x in range(n):
        A[x, x * m:(x + 1) * m] = 1.0
    for y in range(m):
        A[n + y, y::m] = 1.0
    senses = (row_sense,) * n + (col_sense,) * m
    return LinearProgram(phi.reshape(-1), A, np.concatenate([p, q]), senses)


def lp_from_rows(objective, rows: Sequence, rhs: Sequence, senses: Sequence) -> LinearProgram:
    return LinearProgram(np.asarray(objective, dtype=float), np.asarray(rows, dtype=float),
                         np.asarray(rhs, dtype=float), tuple(senses))
