"""Quantiles through transport: the 1-D quantile transform, quantile regression
as an LP, and discretized vector quantile regression.

In VQR the latent level U lives on a grid of m midpoints tau_j = (j - 1/2) / m.
The multipliers b_j on the mean-independence rows play the role of the
integrated coefficient curve. Their first differences, times m, give beta at
the cell boundaries j / m, j = 1..m-1. Those are the levels where one
observation hands over from one grid cell to the next.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import InfeasibleInputError, ToleranceConfig
from .finance import MarginalLaw
from .linprog import LinearProgram, solve_lp
from .otexact import solve_exact


class DegenerateRegressorError(ValueError):
    pass


@dataclass(frozen=True)
class QuantileGrid:
    taus: np.ndarray

    def __post_init__(self):
        t = np.asarray(self.taus, dtype=float).reshape(-1)
        if len(t) < 2:
            raise ValueError("a quantile grid needs at least two points")
        if np.any(t <= 0) or np.any(t >= 1) or np.any(np.diff(t) <= 0):
            raise ValueError("grid points must be strictly increasing inside (0, 1)")
        object.__setattr__(self, "taus", t)

    @classmethod
    def uniform(cls, m: int) -> "QuantileGrid":
        return cls((np.arange(m) + 0.5) / m)

    @property
    def m(self) -> int:
        return len(self.taus)

    @property
    def weights(self) -> np.ndarray:
        return np.full(self.m, 1.0 / self.m)


@dataclass(frozen=True)
class RegressionData:
    """Regressors X (N x k, first column the intercept) and outcomes Y (N)."""

    X: np.ndarray
    Y: np.ndarray

    def __post_init__(self):
        X = np.asarray(self.X, dtype=float)
        if X.ndim == 1:
            X = X[:, None]
        Y = np.asarray(self.Y, dtype=float).reshape(-1)
        if X.shape[0] != len(Y):
            raise ValueError("X and Y have different numbers of observations")
        if not (np.all(np.isfinite(X)) and np.all(np.isfinite(Y))):
            raise ValueError("regression data must be finite")
        if len(Y) < X.shape[1]:
            raise ValueError("need at least as many observations as regressors")
        object.__setattr__(self, "X", X)
        object.__setattr__(self, "Y", Y)

    @classmethod
    def intercept_only(cls, Y) -> "RegressionData":
        Y = np.asarray(Y, dtype=float).reshape(-1)
        return cls(np.ones((len(Y), 1)), Y)

    @property
    def n(self) -> int:
        return len(self.Y)

    @property
    def k(self) -> int:
        return self.X.shape[1]


def _check_rank(X):
    if np.linalg.matrix_rank(X) < X.shape[1]:
        raise DegenerateRegressorError("regressor matrix is rank deficient")


def _check_intercept(X):
    if not np.allclose(X[:, 0], 1.0):
        raise ValueError("the first regressor column must be the intercept (all ones)")


def quantile_transform_ot(grid: QuantileGrid, Q: MarginalLaw, cfg: ToleranceConfig | None = None):
    """Couple the grid (mass 1/m each) with Q under surplus x y.

    Returns ``(plan, monotone)`` where ``monotone`` says whether the support of
    the plan is a nondecreasing relation, i.e. the quantile transform.
    """
    phi = grid.taus[:, None] * Q.support[None, :]
    sol = solve_exact(grid.weights, Q.probs, phi, cfg)
    plan = np.array(sol.plan.mass)
    return plan, is_monotone_coupling(plan)


def is_monotone_coupling(plan, tol: float = 1e-12) -> bool:
    """True if no two support cells (i, j), (i', j') have i < i' and j > j'."""
    cells = np.argwhere(plan > tol)
    hi_so_far = -1
    for i in np.unique(cells[:, 0]):
        cols = cells[cells[:, 0] == i, 1]
        if cols.min() < hi_so_far:
            return False
        hi_so_far = cols.max()
    return True


def monotone_coupling(p, q) -> np.ndarray:
    """North-west corner coupling of two sorted discrete laws."""
    p = np.asarray(p, dtype=float).copy()
    q = np.asarray(q, dtype=float).copy()
    plan = np.zeros((len(p), len(q)))
    i = j = 0
    while i < len(p) and j < len(q):
        t = min(p[i], q[j])
        plan[i, j] += t
        p[i] -= t
        q[j] -= t
        if p[i] <= 1e-15:
            i += 1
        if j < len(q) and q[j] <= 1e-15:
            j += 1
    return plan


def pinball_loss(residuals, tau: float) -> float:
    r = np.asarray(residuals, dtype=float)
    return float(np.mean(np.where(r >= 0, tau * r, (tau - 1) * r)))


def classic_qr(data: RegressionData, tau: float, cfg: ToleranceConfig | None = None) -> np.ndarray:
    """Linear quantile regression at level tau by LP.

    Variables are beta = b+ - b- and residual parts r+, r- with
    X beta + r+ - r- = Y; the objective is the mean check loss.
    """
    if not 0 < tau < 1:
        raise ValueError("tau must lie in (0, 1)")
    X, Y = data.X, data.Y
    _check_rank(X)
    N, k = X.shape
    A = np.hstack([X, -X, np.eye(N), -np.eye(N)])
    c = -np.concatenate([np.zeros(2 * k), np.full(N, tau / N), np.full(N, (1 - tau) / N)])
    sol = solve_lp(LinearProgram(c, A, Y), cfg)
    if not sol.optimal:
        raise InfeasibleInputError(f"quantile regression LP ended with status {sol.status}")
    return sol.x[:k] - sol.x[k:2 * k]


@dataclass(frozen=True)
class QuantileCurve:
    """beta at the cell-boundary ``levels``; ``b`` at the grid points, ``b[j] ~ int_0^tau_j beta``."""

    levels: np.ndarray
    beta: np.ndarray
    b: np.ndarray
    crossing: list = field(default_factory=list)

    def at(self, tau: float) -> np.ndarray:
        """Piecewise-constant beta: the value at the nearest boundary level."""
        return self.beta[int(np.argmin(np.abs(self.levels - tau)))]


@dataclass(frozen=True)
class VqrResult:
    plan: np.ndarray
    curve: QuantileCurve
    psi: np.ndarray
    representation_error: float
    objective: float


def vqr_solve(data: RegressionData, grid: QuantileGrid, cfg: ToleranceConfig | None = None) -> VqrResult:
    """Discretized vector quantile regression.

    Maximizes sum pi_ji tau_j Y_i over couplings of the grid and the sample
    subject to sum_i pi_ji X_i = Xbar / m for every grid point j (the
    intercept entry of that row is the grid margin) and sum_j pi_ji = 1/N.

    ``representation_error`` is the largest amount by which an observation
    carried by grid cell j falls outside [X_i beta((j-1)/m), X_i beta(j/m)].
    """
    X, Y = data.X, data.Y
    _check_intercept(X)
    _check_rank(X)
    N, k = X.shape
    m = grid.m
    xbar = X.mean(axis=0)
    # variable index j * N + i
    A = np.zeros((m * k + N, m * N))
    for j in range(m):
        A[j * k:(j + 1) * k, j * N:(j + 1) * N] = X.T
    for i in range(N):
        A[m * k + i, i::N] = 1.0
    rhs = np.concatenate([np.tile(xbar / m, m), np.full(N, 1.0 / N)])
    c = np.outer(grid.taus, Y).reshape(-1)
    sol = solve_lp(LinearProgram(c, A, rhs), cfg)
    if not sol.optimal:
        raise InfeasibleInputError(f"VQR LP ended with status {sol.status}")
    plan = sol.x.reshape(m, N)
    b = sol.y[:m * k].reshape(m, k)
    psi = sol.y[m * k:]

    beta = np.diff(b, axis=0) / np.diff(grid.taus)[:, None]
    levels = 0.5 * (grid.taus[1:] + grid.taus[:-1])
    # b is defined up to a shift traded against psi along the intercept
    shift = b[0, 0] - grid.taus[0] * beta[0, 0]
    b = b.copy()
    b[:, 0] -= shift
    psi = psi + shift

    fitted = X @ beta.T  # N x (m-1)
    crossing = sorted({int(j) for j in np.argwhere(np.diff(fitted, axis=1) < -1e-9)[:, 1]})
    err = 0.0
    scale = max(1.0, float(np.abs(Y).max()))
    for j, i in np.argwhere(plan > 1e-12):
        if j > 0:
            err = max(err, fitted[i, j - 1] - Y[i])
        if j < m - 1:
            err = max(err, Y[i] - fitted[i, j])
    return VqrResult(plan, QuantileCurve(levels, beta, b, crossing), psi, err / scale, sol.objective_value)


def empirical_quantile_interval(Y, level: float):
    """Interval of valid empirical level-quantiles of Y: a point unless level * N is an integer."""
    y = np.sort(np.asarray(Y, dtype=float))
    N = len(y)
    pos = level * N
    k = int(np.round(pos))
    if abs(pos - k) <= 1e-9 * N:
        return y[max(k - 1, 0)], y[min(k, N - 1)]
    idx = int(np.ceil(pos)) - 1
    return y[idx], y[idx]
