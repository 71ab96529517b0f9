"""Matching markets with transferable utility, reduced to the unmatched OT solver."""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import OtError, ToleranceConfig, as_surplus, as_weights
from .otexact import solve_with_unmatched


class StabilityError(OtError):
    """A returned outcome fails one of the stability conditions."""


@dataclass(frozen=True)
class MatchingOutcome:
    plan: np.ndarray
    singles_x: np.ndarray
    singles_y: np.ndarray
    u: np.ndarray
    v: np.ndarray
    surplus: np.ndarray
    stability_violations: list = field(default_factory=list)

    @property
    def matched_mass(self) -> float:
        return float(self.plan.sum())


def check_stability(plan, singles_x, singles_y, u, v, phi, p, q, tol=1e-9):
    """List every violated stability condition (empty when the outcome is stable).

    Conditions checked: margins including singles, nonnegative masses,
    nonnegative payoffs, no blocking pair, and the three complementary
    slackness statements (matched pairs split their surplus, single agents get
    zero).
    """
    out = []
    scale = max(float(np.sum(p)), float(np.sum(q)), 1.0)
    row = plan.sum(axis=1) + singles_x - p
    col = plan.sum(axis=0) + singles_y - q
    for x in np.flatnonzero(np.abs(row) > tol * scale):
        out.append(f"row margin {x} off by {row[x]:.3e}")
    for y in np.flatnonzero(np.abs(col) > tol * scale):
        out.append(f"column margin {y} off by {col[y]:.3e}")
    if np.any(plan < -tol) or np.any(singles_x < -tol) or np.any(singles_y < -tol):
        out.append("negative mass")
    for x in np.flatnonzero(u < -tol):
        out.append(f"u[{x}] = {u[x]:.3e} is negative")
    for y in np.flatnonzero(v < -tol):
        out.append(f"v[{y}] = {v[y]:.3e} is negative")
    gap = u[:, None] + v[None, :] - phi
    for x, y in np.argwhere(gap < -tol):
        out.append(f"blocking pair ({x}, {y}): u + v falls short of surplus by {-gap[x, y]:.3e}")
    for x, y in np.argwhere((plan > tol) & (np.abs(gap) > tol)):
        out.append(f"matched pair ({x}, {y}) does not split its surplus (gap {gap[x, y]:.3e})")
    for x in np.flatnonzero((singles_x > tol) & (np.abs(u) > tol)):
        out.append(f"single row type {x} has payoff {u[x]:.3e}")
    for y in np.flatnonzero((singles_y > tol) & (np.abs(v) > tol)):
        out.append(f"single column type {y} has payoff {v[y]:.3e}")
    return out


def solve_stable_matching(p, q, phi, cfg: ToleranceConfig | None = None) -> MatchingOutcome:
    """Stable outcome of the assignment game with outside option zero.

    Raises StabilityError if the certified conditions fail, which would
    indicate a solver defect rather than bad input.
    """
    cfg = cfg or ToleranceConfig()
    p, q, phi = as_weights(p), as_weights(q), as_surplus(phi)
    sol = solve_with_unmatched(p, q, phi, cfg)
    plan = np.array(sol.plan.mass)
    sx, sy = np.array(sol.unmatched_rows), np.array(sol.unmatched_cols)
    u, v = np.array(sol.potentials.u), np.array(sol.potentials.v)
    issues = check_stability(plan, sx, sy, u, v, phi, p, q, cfg.feasibility_tol)
    if issues:
        raise StabilityError("; ".join(issues))
    return MatchingOutcome(plan, sx, sy, u, v, phi, issues)


@dataclass(frozen=True)
class WageInterval:
    lower: np.ndarray
    upper: np.ndarray
    matched: np.ndarray

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower


def wage_bounds(outcome: MatchingOutcome, alpha, gamma, tol: float = 1e-9) -> WageInterval:
    """Wage interval gamma - v <= w <= u - alpha for every worker/firm pair.

    ``alpha`` is the worker's non-wage payoff and ``gamma`` the firm's output;
    they must add up to the surplus used to build ``outcome``.
    """
    alpha, gamma = as_surplus(alpha), as_surplus(gamma)
    if alpha.shape != outcome.surplus.shape or gamma.shape != outcome.surplus.shape:
        raise ValueError("alpha and gamma must have the surplus shape")
    mismatch = np.abs(alpha + gamma - outcome.surplus)
    if mismatch.max(initial=0.0) > tol * max(1.0, float(np.abs(outcome.surplus).max(initial=0.0))):
        x, y = np.unravel_index(np.argmax(mismatch), mismatch.shape)
        raise ValueError(f"alpha + gamma differs from the surplus at ({x}, {y})")
    lower = gamma - outcome.v[None, :]
    upper = outcome.u[:, None] - alpha
    return WageInterval(lower, upper, outcome.plan > tol)


@dataclass(frozen=True)
class HedonicSpec:
    """Producer costs C (|X| x |Z|) and consumer utilities U (|Y| x |Z|)."""

    costs: np.ndarray
    utilities: np.ndarray

    def __post_init__(self):
        C, U = as_surplus(self.costs), as_surplus(self.utilities)
        if C.shape[1] != U.shape[1]:
            raise ValueError("costs and utilities must share the quality dimension")
        if C.shape[1] == 0:
            raise ValueError("need at least one quality")
        if not (np.all(np.isfinite(C)) and np.all(np.isfinite(U))):
            raise ValueError("hedonic entries must be finite")
        object.__setattr__(self, "costs", C)
        object.__setattr__(self, "utilities", U)


def hedonic_reduce(spec: HedonicSpec):
    """Joint surplus Phi_xy = max_z (U_yz - C_xz) and its argmax (0-based, lowest index on ties)."""
    gains = spec.utilities[None, :, :] - spec.costs[:, None, :]
    zstar = np.argmax(gains, axis=2)
    return gains.max(axis=2), zstar


@dataclass(frozen=True)
class PriceInterval:
    lower: np.ndarray
    upper: np.ndarray
    traded: np.ndarray

    @property
    def width(self) -> np.ndarray:
        return self.upper - self.lower


def hedonic_price_bounds(outcome: MatchingOutcome, spec: HedonicSpec, tol: float = 1e-9) -> PriceInterval:
    """Per-quality price interval [max_y (U_yz - v_y), min_x (u_x + C_xz)].

    An empty interval (lower above upper) is possible for untraded qualities
    and is returned as is.
    """
    lower = np.max(spec.utilities - outcome.v[:, None], axis=0)
    upper = np.min(outcome.u[:, None] + spec.costs, axis=0)
    _, zstar = hedonic_reduce(spec)
    traded = np.zeros(spec.costs.shape[1], dtype=bool)
    traded[np.unique(zstar[outcome.plan > tol])] = True
    return PriceInterval(lower, upper, traded)
