"""Model-free price bounds for a payoff on two underlying prices.

Static bounds range over all couplings of the two marginals. Martingale bounds
also require E[Y | X] = X, which is a linear row per support point of X.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .core import InfeasibleInputError, Potentials, ToleranceConfig
from .linprog import INFEASIBLE, LinearProgram, solve_lp, transportation_lp
from .otexact import solve_exact


class NoMartingaleCouplingError(InfeasibleInputError):
    """The marginals are not in convex order, so no martingale coupling exists."""


@dataclass(frozen=True)
class MarginalLaw:
    support: np.ndarray
    probs: np.ndarray

    def __post_init__(self):
        s = np.asarray(self.support, dtype=float).reshape(-1)
        w = np.asarray(self.probs, dtype=float).reshape(-1)
        if len(s) != len(w) or len(s) == 0:
            raise ValueError("support and probabilities must be non-empty and equally long")
        if np.any(w < 0) or abs(w.sum() - 1.0) > 1e-9:
            raise ValueError("probabilities must lie on the simplex")
        order = np.argsort(s, kind="stable")
        object.__setattr__(self, "support", s[order])
        object.__setattr__(self, "probs", w[order])

    @property
    def mean(self) -> float:
        return float(self.support @ self.probs)

    def call_price(self, k: float) -> float:
        return float(np.maximum(self.support - k, 0.0) @ self.probs)


@dataclass(frozen=True)
class BoundsResult:
    lower: float
    upper: float
    upper_hedge: Potentials
    lower_hedge: Potentials
    upper_plan: np.ndarray
    lower_plan: np.ndarray
    upper_delta: np.ndarray | None = None
    lower_delta: np.ndarray | None = None

    @property
    def width(self) -> float:
        return self.upper - self.lower


def payoff_matrix(payoff, P: MarginalLaw, Q: MarginalLaw) -> np.ndarray:
    """Evaluate ``payoff`` on the support grid; matrices are passed through."""
    shape = (len(P.support), len(Q.support))
    if callable(payoff):
        out = np.asarray(payoff(P.support[:, None], Q.support[None, :]), dtype=float)
        if out.shape != shape:
            out = np.array([[payoff(x, y) for y in Q.support] for x in P.support], dtype=float)
    else:
        out = np.asarray(payoff, dtype=float)
    if out.shape != shape:
        raise ValueError(f"payoff has shape {out.shape}, expected {shape}")
    return out


def _certify(value, hedge, phi, p, q, side, tol):
    slack = hedge.u[:, None] + hedge.v[None, :] - phi
    bound = hedge.value(p, q)
    scale = max(1.0, abs(value))
    if side == "upper":
        ok = slack.min() >= -tol * scale and bound >= value - tol * scale
    else:
        ok = slack.max() <= tol * scale and bound <= value + tol * scale
    if not ok:
        raise AssertionError(f"{side} hedge fails the weak-duality sandwich")


def option_bounds_static(P: MarginalLaw, Q: MarginalLaw, payoff, cfg: ToleranceConfig | None = None) -> BoundsResult:
    cfg = cfg or ToleranceConfig()
    phi = payoff_matrix(payoff, P, Q)
    hi = solve_exact(P.probs, Q.probs, phi, cfg)
    lo = solve_exact(P.probs, Q.probs, -phi, cfg)
    upper_hedge = Potentials(hi.potentials.u, hi.potentials.v)
    lower_hedge = Potentials(-lo.potentials.u, -lo.potentials.v)
    lower = -lo.value
    tol = 1e-7
    _certify(hi.value, upper_hedge, phi, P.probs, Q.probs, "upper", tol)
    _certify(lower, lower_hedge, phi, P.probs, Q.probs, "lower", tol)
    return BoundsResult(lower, hi.value, upper_hedge, lower_hedge,
                        np.array(hi.plan.mass), np.array(lo.plan.mass))


def check_convex_order(P: MarginalLaw, Q: MarginalLaw, tol: float = 1e-9) -> None:
    """Raise NoMartingaleCouplingError unless P is below Q in convex order.

    Call prices of piecewise-linear laws only need checking at support points.
    """
    scale = max(1.0, float(np.abs(P.support).max()), float(np.abs(Q.support).max()))
    if abs(P.mean - Q.mean) > tol * scale:
        raise NoMartingaleCouplingError(
            f"no martingale coupling: means differ: E[X] = {P.mean!r}, E[Y] = {Q.mean!r}")
    for k in np.union1d(P.support, Q.support):
        cp, cq = P.call_price(k), Q.call_price(k)
        if cp > cq + tol * scale:
            raise NoMartingaleCouplingError(
                f"no martingale coupling: call price at strike {k!r} is {cp!r} under X but only {cq!r} under Y")


def _martingale_lp(P, Q, objective):
    n, m = len(P.support), len(Q.support)
    base = transportation_lp(P.probs, Q.probs, objective)
    scale = max(1.0, float(np.abs(Q.support).max()), float(np.abs(P.support).max()))
    mart = np.zeros((n, n * m))
    for x in range(n):
        mart[x, x * m:(x + 1) * m] = (Q.support - P.support[x]) / scale
    A = np.vstack([base.constraint_matrix, mart])
    b = np.concatenate([base.rhs, np.zeros(n)])
    return LinearProgram(objective.reshape(-1), A, b), scale


def option_bounds_martingale(P: MarginalLaw, Q: MarginalLaw, payoff,
                             cfg: ToleranceConfig | None = None) -> BoundsResult:
    """Bounds over martingale couplings, by LP.

    The hedge of each side is (u, v) plus a delta position h(x) on the
    martingale rows: u_x + v_y + h_x (y - x) >= Phi_xy for the upper side.
    """
    cfg = cfg or ToleranceConfig()
    phi = payoff_matrix(payoff, P, Q)
    check_convex_order(P, Q, cfg.feasibility_tol)
    n, m = phi.shape
    out = {}
    for side, obj in (("upper", phi), ("lower", -phi)):
        lp, scale = _martingale_lp(P, Q, obj)
        sol = solve_lp(lp, cfg)
        if sol.status == INFEASIBLE:
            raise NoMartingaleCouplingError("no martingale coupling exists for these marginals")
        if not sol.optimal:
            raise InfeasibleInputError(f"martingale LP ended with status {sol.status}")
        u, v, h = sol.y[:n], sol.y[n:n + m], sol.y[n + m:] / scale
        sign = 1.0 if side == "upper" else -1.0
        out[side] = (sign * sol.objective_value, Potentials(sign * u, sign * v), sign * h,
                     sol.x.reshape(n, m))
    up, lo = out["upper"], out["lower"]
    return BoundsResult(lo[0], up[0], up[1], lo[1], up[3], lo[3], up[2], lo[2])
