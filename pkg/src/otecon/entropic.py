"""Entropy-regularized OT: IPFP (Sinkhorn) in potential form, plus general links.

Potentials are kept in utility units, ``pi = exp((Phi - u - v) / sigma)``.
The log-domain path uses max-shifted log-sum-exp; the naive path exponentiates
the kernel once and is kept for speed and cross-checking.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable

import numpy as np
from scipy.optimize import brentq
from scipy.special import logsumexp

from .core import (
    NonConvergenceError,
    OtError,
    Potentials,
    ToleranceConfig,
    TransportPlan,
    as_surplus,
    as_weights,
    check_balanced,
)


class NumericalOverflowError(OtError, OverflowError):
    """Naive-mode exponentials overflowed; retry with ``log_domain=True``."""


@dataclass(frozen=True)
class EntropicConfig:
    sigma: float = 1.0
    marginal_tol: float = 1e-10
    max_iterations: int = 100_000
    log_domain: bool = True
    epsilon_scaling_schedule: tuple = ()

    def __post_init__(self):
        if not self.sigma > 0:
            raise ValueError("sigma must be positive")
        if not self.marginal_tol > 0:
            raise ValueError("marginal_tol must be positive")
        sched = tuple(float(s) for s in self.epsilon_scaling_schedule)
        if any(s <= 0 for s in sched) or any(b >= a for a, b in zip(sched, sched[1:])):
            raise ValueError("epsilon scaling schedule must be positive and strictly decreasing")
        object.__setattr__(self, "epsilon_scaling_schedule", sched)


def _row_update(phi, v, p, sigma, mask, log_domain, kernel=None):
    """u_x = sigma * log(sum_y exp((Phi_xy - v_y) / sigma) / p_x) over allowed cells."""
    if log_domain:
        lse = logsumexp((phi - v[None, :]) / sigma, axis=1, b=mask)
        return sigma * (lse - np.log(p))
    with np.errstate(over="ignore"):
        ev = np.exp(-v / sigma)
        s = (kernel * ev[None, :]).sum(axis=1)
    if not np.all(np.isfinite(s)) or not np.all(np.isfinite(ev)) or np.any(s <= 0):
        raise NumericalOverflowError("kernel sum overflowed or underflowed; use log_domain")
    return sigma * (np.log(s) - np.log(p))


def _check_margins(p, q):
    if np.any(p <= 0) or np.any(q <= 0):
        raise ValueError("IPFP needs strictly positive margins; drop empty types first")


def sinkhorn_potentials(phi, p, q, sigma, *, mask=None, v0=None, tol=1e-10,
                        max_iterations=100_000, log_domain=True, callback=None):
    """Run IPFP sweeps to convergence and return (u, v, sweeps).

    ``mask`` restricts the support: cells where it is False carry no mass and
    are left out of every sum. Convergence is the largest row or column
    residual relative to total mass. ``callback(t, u, v)`` sees each sweep.
    """
    phi = np.asarray(phi, dtype=float)
    n, m = phi.shape
    mask = np.ones((n, m)) if mask is None else np.asarray(mask, dtype=float)
    v = np.zeros(m) if v0 is None else np.array(v0, dtype=float)
    kernel = None
    if not log_domain:
        with np.errstate(over="ignore"):
            kernel = np.exp(phi / sigma) * mask
        if not np.all(np.isfinite(kernel)):
            raise NumericalOverflowError("exp(Phi / sigma) overflows; use log_domain")
    mass = max(p.sum(), q.sum())

    for t in range(1, max_iterations + 1):
        u = _row_update(phi, v, p, sigma, mask, log_domain, kernel)
        v = _row_update(phi.T, u, q, sigma, mask.T, log_domain,
                        None if kernel is None else kernel.T)
        if callback is not None:
            callback(t, u, v)
        plan = _gibbs(phi, u, v, sigma, mask)
        res = max(np.abs(plan.sum(axis=1) - p).max(), np.abs(plan.sum(axis=0) - q).max()) / mass
        if res <= tol:
            return u, v, t
    raise NonConvergenceError(f"IPFP did not reach marginal_tol={tol:g} in {max_iterations} sweeps "
                              f"(residual {res:.3e})")


def _gibbs(phi, u, v, sigma, mask=None):
    z = (phi - u[:, None] - v[None, :]) / sigma
    with np.errstate(over="ignore"):
        out = np.exp(z)
    if mask is not None:
        out = out * mask
    return out


def plan_from_potentials(u, v, phi, sigma: float) -> TransportPlan:
    """Elementwise Gibbs plan exp((Phi - u - v) / sigma).

    Entries whose exponent overflows are clamped to the largest finite float;
    the clamped cell count is exposed as ``plan_from_potentials.last_clamped``.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    phi = as_surplus(phi)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    z = (phi - u[:, None] - v[None, :]) / sigma
    limit = np.log(np.finfo(float).max)
    clamped = z > limit
    plan_from_potentials.last_clamped = int(clamped.sum())
    with np.errstate(over="ignore"):
        return TransportPlan.with_surplus(np.exp(np.minimum(z, limit)), phi)


plan_from_potentials.last_clamped = 0


def dual_objective(u, v, p, q, phi, sigma: float) -> float:
    """sum p u + sum q v + sigma * sum exp((Phi - u - v) / sigma) - sigma * sum p.

    With probability margins the last term is the familiar ``- sigma``; the
    exponential sum is taken through log-sum-exp so it cannot overflow early.
    """
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    p, q, phi = as_weights(p), as_weights(q), as_surplus(phi)
    u = np.asarray(u, dtype=float)
    v = np.asarray(v, dtype=float)
    z = (phi - u[:, None] - v[None, :]) / sigma
    expsum = np.exp(logsumexp(z))
    return float(p @ u + q @ v + sigma * expsum - sigma * p.sum())


def primal_objective(plan, phi, sigma: float) -> float:
    """sum pi Phi - sigma * sum pi log pi, with 0 log 0 = 0."""
    mass = plan.mass if isinstance(plan, TransportPlan) else np.asarray(plan, dtype=float)
    phi = as_surplus(phi)
    pos = mass > 0
    ent = float(np.sum(mass[pos] * np.log(mass[pos])))
    return float(np.sum(mass * phi) - sigma * ent)


def ipfp_solve(p, q, phi, cfg: EntropicConfig | None = None, *, v0=None, callback=None,
               tol_cfg: ToleranceConfig | None = None):
    """Solve the regularized problem by iterated proportional fitting.

    Returns ``(potentials, plan, sweeps)``. Raises ``NumericalOverflowError``
    in naive mode when the kernel overflows and ``NonConvergenceError`` at the
    sweep cap. With an epsilon-scaling schedule, each listed temperature is
    solved in turn, warm-starting the next; ``callback`` and the reported
    sweep count refer to the final temperature only.
    """
    cfg = cfg or EntropicConfig()
    p, q, phi = as_weights(p), as_weights(q), as_surplus(phi)
    if phi.shape != (len(p), len(q)):
        raise ValueError(f"surplus shape {phi.shape} does not match ({len(p)}, {len(q)})")
    check_balanced(p, q, tol_cfg or ToleranceConfig())
    _check_margins(p, q)

    v = v0
    for s in cfg.epsilon_scaling_schedule:
        if s <= cfg.sigma:
            break
        _, v, _ = sinkhorn_potentials(phi, p, q, s, v0=v, tol=max(cfg.marginal_tol, 1e-8),
                                      max_iterations=cfg.max_iterations, log_domain=True)
    u, v, sweeps = sinkhorn_potentials(phi, p, q, cfg.sigma, v0=v, tol=cfg.marginal_tol,
                                       max_iterations=cfg.max_iterations,
                                       log_domain=cfg.log_domain, callback=callback)
    plan = TransportPlan.with_surplus(_gibbs(phi, u, v, cfg.sigma), phi)
    return Potentials.from_surplus(u, v, phi), plan, sweeps


# --------------------------------------------------------------------------
# general link functions


@dataclass(frozen=True)
class LinkFunction:
    """Link l with primitive L, conjugate L* and (L*)' = l^{-1}.

    ``solve_coordinate`` optionally gives the closed-form solution a of
    ``sum_j (L*)'(w_j - a) = target``; without it a bracketing root finder
    is used.
    """

    tag: str
    L: Callable
    L_star: Callable
    L_star_prime: Callable
    solve_coordinate: Callable | None = None

    @classmethod
    def log(cls) -> "LinkFunction":
        def entropy(z):
            z = np.asarray(z, dtype=float)
            with np.errstate(divide="ignore", invalid="ignore"):
                return np.where(z > 0, z * (np.log(np.where(z > 0, z, 1.0)) - 1.0), 0.0)

        return cls("log", entropy, np.exp, np.exp,
                   lambda w, target: logsumexp(w) - np.log(target))

    @classmethod
    def identity_threshold(cls) -> "LinkFunction":
        """l(z) = z on z >= 0, so L*(t) = max(t, 0)^2 / 2 and (L*)'(t) = max(t, 0)."""
        return cls("identity-threshold",
                   lambda z: np.where(np.asarray(z) >= 0, np.asarray(z, dtype=float) ** 2 / 2, np.inf),
                   lambda t: np.maximum(t, 0.0) ** 2 / 2,
                   lambda t: np.maximum(t, 0.0))

    @classmethod
    def custom(cls, L, L_star, L_star_prime) -> "LinkFunction":
        return cls("custom", L, L_star, L_star_prime)


def _coordinate_root(link: LinkFunction, w, target, where):
    if link.solve_coordinate is not None:
        return float(link.solve_coordinate(w, target))

    def f(a):
        return float(np.sum(link.L_star_prime(w - a))) - target

    hi = float(np.max(w))
    step = 1.0
    while f(hi) > 0:
        hi += step
        step *= 2
        if step > 1e12:
            raise NonConvergenceError(f"no upper bracket for coordinate {where}")
    lo = hi - 1.0
    step = 1.0
    while f(lo) < 0:
        lo -= step
        step *= 2
        if step > 1e12:
            raise NonConvergenceError(f"no lower bracket for coordinate {where}")
    if f(lo) == 0:
        return lo
    try:
        return brentq(f, lo, hi, xtol=1e-15, rtol=4 * np.finfo(float).eps, maxiter=500)
    except (RuntimeError, ValueError) as exc:
        raise NonConvergenceError(f"root finding failed at coordinate {where}: {exc}") from exc


def solve_regularized_general(p, q, design, link: LinkFunction, cfg: EntropicConfig | None = None):
    """Minimize sum p u + sum q v + sum L*((Phi beta)_xy - u_x - v_y) blockwise.

    ``design`` is the already-weighted matrix (Phi beta). Each coordinate
    update solves its own margin equation exactly. Returns
    ``(potentials, plan, W)`` with ``pi = (L*)'(design - u - v)`` and W the
    minimized dual value.
    """
    cfg = cfg or EntropicConfig()
    p, q, w = as_weights(p), as_weights(q), as_surplus(design)
    _check_margins(p, q)
    n, m = w.shape
    u = np.zeros(n)
    v = np.zeros(m)
    mass = max(p.sum(), q.sum())
    for sweep in range(1, cfg.max_iterations + 1):
        for x in range(n):
            u[x] = _coordinate_root(link, w[x] - v, p[x], ("row", x))
        for y in range(m):
            v[y] = _coordinate_root(link, w[:, y] - u, q[y], ("col", y))
        plan = link.L_star_prime(w - u[:, None] - v[None, :])
        res = max(np.abs(plan.sum(axis=1) - p).max(), np.abs(plan.sum(axis=0) - q).max()) / mass
        if res <= cfg.marginal_tol:
            break
    else:
        raise NonConvergenceError(f"coordinate descent did not converge (residual {res:.3e})")
    W = float(p @ u + q @ v + np.sum(link.L_star(w - u[:, None] - v[None, :])))
    return Potentials(u, v), TransportPlan.with_surplus(plan, w), W
