"""Domain types and margin bookkeeping shared by every solver.

Measures carry raw masses. Nothing here renormalizes silently; callers that
want probabilities divide by the total themselves.
"""
from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np


class OtError(Exception):
    """Base class for solver errors raised by this package."""


class UnbalancedMassError(OtError):
    pass


class InfeasibleInputError(OtError):
    pass


class NonConvergenceError(OtError):
    pass


def _frozen(a) -> np.ndarray:
    arr = np.array(a, dtype=float)
    arr.setflags(write=False)
    return arr


@dataclass(frozen=True)
class ToleranceConfig:
    feasibility_tol: float = 1e-9
    duality_gap_tol: float = 1e-8
    max_iterations: int = 100_000
    # masses below this (relative to total mass) count as zero flow
    mass_quantum: float = 1e-12

    def __post_init__(self):
        for name in ("feasibility_tol", "duality_gap_tol", "mass_quantum"):
            if not getattr(self, name) > 0:
                raise ValueError(f"{name} must be positive")
        if self.max_iterations < 1:
            raise ValueError("max_iterations must be at least 1")


@dataclass(frozen=True)
class DiscreteMeasure:
    labels: tuple
    weights: np.ndarray

    def __post_init__(self):
        w = _frozen(self.weights)
        object.__setattr__(self, "weights", w)
        object.__setattr__(self, "labels", tuple(self.labels))
        if w.ndim != 1:
            raise ValueError("weights must be a vector")
        if len(self.labels) != len(w):
            raise ValueError("labels and weights differ in length")
        if len(set(self.labels)) != len(self.labels):
            raise ValueError("labels must be unique")
        if not np.all(np.isfinite(w)) or np.any(w < 0):
            raise ValueError("weights must be finite and nonnegative")

    @classmethod
    def from_weights(cls, weights: Sequence[float]) -> "DiscreteMeasure":
        return cls(tuple(range(len(weights))), np.asarray(weights, dtype=float))

    @property
    def total(self) -> float:
        return float(self.weights.sum())

    def __len__(self):
        return len(self.weights)


@dataclass(frozen=True)
class SurplusMatrix:
    values: np.ndarray

    def __post_init__(self):
        v = _frozen(self.values)
        if v.ndim != 2:
            raise ValueError("surplus must be a matrix")
        if not np.all(np.isfinite(v)):
            raise ValueError("surplus entries must be finite")
        object.__setattr__(self, "values", v)

    @property
    def rows(self) -> int:
        return self.values.shape[0]

    @property
    def cols(self) -> int:
        return self.values.shape[1]

    @property
    def cost(self) -> np.ndarray:
        return -self.values


@dataclass(frozen=True)
class TransportPlan:
    mass: np.ndarray
    row_margins: np.ndarray = field(init=False)
    col_margins: np.ndarray = field(init=False)
    value: float | None = None

    def __post_init__(self):
        m = _frozen(self.mass)
        if m.ndim != 2:
            raise ValueError("plan must be a matrix")
        object.__setattr__(self, "mass", m)
        object.__setattr__(self, "row_margins", _frozen(m.sum(axis=1)))
        object.__setattr__(self, "col_margins", _frozen(m.sum(axis=0)))

    @classmethod
    def with_surplus(cls, mass, surplus) -> "TransportPlan":
        mass = np.asarray(mass, dtype=float)
        return cls(mass, value=float(np.sum(mass * np.asarray(surplus, dtype=float))))

    @property
    def total(self) -> float:
        return float(self.mass.sum())


@dataclass(frozen=True)
class Potentials:
    u: np.ndarray
    v: np.ndarray
    feasibility_violation: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "u", _frozen(self.u))
        object.__setattr__(self, "v", _frozen(self.v))
        if self.feasibility_violation < 0:
            raise ValueError("feasibility_violation is clipped at zero")

    @classmethod
    def from_surplus(cls, u, v, surplus) -> "Potentials":
        """Attach the dual-feasibility violation max(Phi - u - v, 0)."""
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        phi = np.asarray(surplus, dtype=float)
        if phi.shape != (len(u), len(v)):
            raise ValueError("potential lengths do not match the surplus shape")
        viol = float(np.max(phi - u[:, None] - v[None, :], initial=0.0))
        return cls(u, v, max(viol, 0.0))

    def value(self, p, q) -> float:
        return float(np.dot(as_weights(p), self.u) + np.dot(as_weights(q), self.v))

    def shifted(self, c: float) -> "Potentials":
        return Potentials(self.u + c, self.v - c, self.feasibility_violation)


def as_weights(m) -> np.ndarray:
    if isinstance(m, DiscreteMeasure):
        return np.asarray(m.weights, dtype=float)
    return np.asarray(m, dtype=float).reshape(-1)


def as_surplus(phi) -> np.ndarray:
    if isinstance(phi, SurplusMatrix):
        return np.asarray(phi.values)
    return np.atleast_2d(np.asarray(phi, dtype=float))


@dataclass
class ValidationReport:
    valid: bool
    balanced: bool
    issues: list[str]

    def __bool__(self):
        return self.valid


def _mass_scale(p: np.ndarray, q: np.ndarray) -> float:
    return max(float(np.sum(np.abs(p))), float(np.sum(np.abs(q))), 1e-300)


def validate_problem(p, q, phi, cfg: ToleranceConfig | None = None) -> ValidationReport:
    """Check an OT instance without raising.

    Returns a report listing every problem found: bad shapes, negative or
    non-finite weights, non-finite surplus entries. ``balanced`` says whether
    the two masses agree (needed by the equality-margin problem only).
    """
    cfg = cfg or ToleranceConfig()
    issues: list[str] = []
    try:
        p = np.asarray(as_weights(p), dtype=float)
        q = np.asarray(as_weights(q), dtype=float)
        phi = np.asarray(phi.values if isinstance(phi, SurplusMatrix) else phi, dtype=float)
    except (TypeError, ValueError) as exc:
        return ValidationReport(False, False, [f"unreadable input: {exc}"])

    for name, w in (("p", p), ("q", q)):
        if w.ndim != 1:
            issues.append(f"{name} is not a vector")
            continue
        bad = ~np.isfinite(w)
        if bad.any():
            issues.append(f"{name} has non-finite weight at index {int(np.argmax(bad))}")
        neg = np.isfinite(w) & (w < 0)
        if neg.any():
            issues.append(f"{name} has negative weight at index {int(np.argmax(neg))}")
    if phi.ndim != 2:
        issues.append("surplus is not a matrix")
    else:
        if p.ndim == 1 and q.ndim == 1 and phi.shape != (len(p), len(q)):
            issues.append(f"surplus shape {phi.shape} does not match ({len(p)}, {len(q)})")
        bad = ~np.isfinite(phi)
        if bad.any():
            i, j = np.argwhere(bad)[0]
            issues.append(f"surplus has non-finite entry at ({i}, {j})")

    valid = not issues
    balanced = False
    if valid:
        balanced = abs(p.sum() - q.sum()) <= cfg.feasibility_tol * _mass_scale(p, q)
    return ValidationReport(valid, balanced, issues)


def check_balanced(p, q, cfg: ToleranceConfig, hint: str = "") -> None:
    p, q = as_weights(p), as_weights(q)
    if abs(p.sum() - q.sum()) > cfg.feasibility_tol * _mass_scale(p, q):
        msg = f"total masses differ: {p.sum()!r} vs {q.sum()!r}"
        raise UnbalancedMassError(msg + (f"; {hint}" if hint else ""))


def random_matching(p, q, cfg: ToleranceConfig | None = None) -> TransportPlan:
    """Independent coupling p_x q_y. Requires both margins to be probabilities."""
    cfg = cfg or ToleranceConfig()
    p, q = as_weights(p), as_weights(q)
    for name, w in (("p", p), ("q", q)):
        if abs(w.sum() - 1.0) > cfg.feasibility_tol:
            raise UnbalancedMassError(f"{name} sums to {w.sum()!r}, expected 1")
    return TransportPlan(np.outer(p, q))


def plan_margin_residual(plan, p, q) -> float:
    """Largest absolute margin error, relative to total mass."""
    mass = plan.mass if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=float)
    p, q = as_weights(p), as_weights(q)
    res = max(np.max(np.abs(mass.sum(axis=1) - p), initial=0.0),
              np.max(np.abs(mass.sum(axis=0) - q), initial=0.0))
    return float(res) / _mass_scale(p, q)


def duality_gap(plan, pot: Potentials, phi, p, q, cfg: ToleranceConfig | None = None) -> float:
    """Dual value minus primal value; nonnegative up to tolerance by weak duality."""
    cfg = cfg or ToleranceConfig()
    phi = as_surplus(phi)
    p, q = as_weights(p), as_weights(q)
    mass = plan.mass if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=float)
    scale = _mass_scale(p, q)

    if np.any(mass < -cfg.feasibility_tol * scale):
        i, j = np.unravel_index(np.argmin(mass), mass.shape)
        raise InfeasibleInputError(f"plan has negative mass at ({i}, {j})")
    row_err = mass.sum(axis=1) - p
    if np.any(np.abs(row_err) > cfg.feasibility_tol * scale):
        x = int(np.argmax(np.abs(row_err)))
        raise InfeasibleInputError(f"row margin {x} off by {row_err[x]:.3e}")
    col_err = mass.sum(axis=0) - q
    if np.any(np.abs(col_err) > cfg.feasibility_tol * scale):
        y = int(np.argmax(np.abs(col_err)))
        raise InfeasibleInputError(f"column margin {y} off by {col_err[y]:.3e}")

    slack = phi - pot.u[:, None] - pot.v[None, :]
    if np.max(slack, initial=0.0) > cfg.feasibility_tol:
        i, j = np.unravel_index(np.argmax(slack), slack.shape)
        raise InfeasibleInputError(
            f"dual constraint u_x + v_y >= Phi_xy violated at ({i}, {j}) by {slack[i, j]:.3e}")

    return float(np.dot(p, pot.u) + np.dot(q, pot.v) - np.sum(mass * phi))
