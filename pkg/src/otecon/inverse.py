"""Inverse optimal transport: recover surplus weights from an observed plan.

The model plan is ``pi = exp(sum_k lam_k phi^k - u_x - v_y)`` (temperature
fixed at one; rescaling lam absorbs any other choice). Fitting minimizes the
Poisson pseudo-likelihood objective

    sum p u + sum q v + sum exp(Phi^lam - u - v) - sum pihat Phi^lam

by alternating exact Sinkhorn blocks in (u, v) with a step in lam.
"""
from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np

from .core import NonConvergenceError, OtError, Potentials
from .entropic import _gibbs, sinkhorn_potentials


class DegenerateDesignError(OtError):
    """The basis is collinear with the row/column fixed effects on the support."""

    def __init__(self, message, combination=None):
        super().__init__(message)
        self.combination = combination


@dataclass(frozen=True)
class ParametricSurplus:
    basis: np.ndarray
    coefficients: np.ndarray

    def __post_init__(self):
        b = np.asarray(self.basis, dtype=float)
        if b.ndim != 3:
            raise ValueError("basis must have shape (K, n, m)")
        c = np.asarray(self.coefficients, dtype=float).reshape(-1)
        if len(c) != b.shape[0]:
            raise ValueError("one coefficient per basis matrix")
        object.__setattr__(self, "basis", b)
        object.__setattr__(self, "coefficients", c)

    @property
    def surplus(self) -> np.ndarray:
        return np.tensordot(self.coefficients, self.basis, axes=1)


@dataclass(frozen=True)
class ObservedPlan:
    mass: np.ndarray
    mask: np.ndarray | None = None

    def __post_init__(self):
        mass = np.asarray(self.mass, dtype=float)
        if mass.ndim != 2 or np.any(mass < 0) or not np.all(np.isfinite(mass)):
            raise ValueError("observed plan must be a finite nonnegative matrix")
        mask = np.ones(mass.shape, dtype=bool) if self.mask is None else np.asarray(self.mask, dtype=bool)
        object.__setattr__(self, "mass", mass * mask)
        object.__setattr__(self, "mask", mask)

    @property
    def p(self):
        return self.mass.sum(axis=1)

    @property
    def q(self):
        return self.mass.sum(axis=0)

    def moments(self, basis) -> np.ndarray:
        return np.tensordot(np.asarray(basis, dtype=float), self.mass, axes=([1, 2], [0, 1]))


@dataclass(frozen=True)
class InverseConfig:
    moment_tol: float = 1e-6
    marginal_tol: float = 1e-12
    max_iterations: int = 500
    max_sinkhorn: int = 200_000
    hessian_cond_limit: float = 1e12


@dataclass
class FitReport:
    converged: bool
    iterations: int
    moment_residual: float
    margin_residual: float
    objective_history: list = field(default_factory=list)
    plan: np.ndarray | None = None


def _as_basis(basis, shape):
    b = np.asarray(basis, dtype=float)
    if b.size == 0:
        return np.zeros((0,) + shape)
    if b.ndim == 2:
        b = b[None]
    if b.shape[1:] != shape:
        raise ValueError(f"basis matrices have shape {b.shape[1:]}, expected {shape}")
    return b


def _residualize(basis, weights, mask):
    """Residuals of each basis matrix after weighted projection on row + column effects."""
    n, m = mask.shape
    rows, cols = np.nonzero(mask)
    D = np.zeros((len(rows), n + m))
    D[np.arange(len(rows)), rows] = 1.0
    D[np.arange(len(rows)), n + cols] = 1.0
    sw = np.sqrt(weights[rows, cols])
    F = basis[:, rows, cols].T  # cells x K
    coef, *_ = np.linalg.lstsq(D * sw[:, None], F * sw[:, None], rcond=None)
    return F - D @ coef, rows, cols, sw


def check_identification(basis, mask, tol=1e-9):
    """Raise DegenerateDesignError if some combination of the basis is absorbed by fixed effects."""
    K = basis.shape[0]
    if K == 0:
        return
    R, *_ = _residualize(basis, mask.astype(float), mask)
    gram = R.T @ R
    scale = max(float(np.trace(basis[:, mask].reshape(K, -1) @ basis[:, mask].reshape(K, -1).T)), 1.0)
    evals, evecs = np.linalg.eigh(gram)
    if evals[0] <= tol * scale:
        comb = evecs[:, 0]
        comb = comb / comb[np.argmax(np.abs(comb))]
        terms = " + ".join(f"{c:.3g}*phi[{k}]" for k, c in enumerate(comb) if abs(c) > 1e-8)
        raise DegenerateDesignError(
            f"basis is not identified: {terms} is explained by row/column effects", comb)


class _Problem:
    """Shared state for the lam-fitting loops."""

    def __init__(self, obs: ObservedPlan, basis, cfg: InverseConfig):
        self.obs = obs
        self.cfg = cfg
        self.mask = obs.mask
        self.basis = _as_basis(basis, obs.mass.shape)
        self.p, self.q = obs.p, obs.q
        if np.any(self.p <= 0) or np.any(self.q <= 0):
            raise ValueError("observed margins must be strictly positive on every retained type")
        self.mass = float(self.p.sum())
        self.target = obs.moments(self.basis)
        self.maskf = self.mask.astype(float)
        self.v = None

    def surplus(self, lam):
        return np.tensordot(lam, self.basis, axes=1) if len(lam) else np.zeros(self.mask.shape)

    def inner(self, lam, v0=None):
        phi = self.surplus(lam)
        u, v, _ = sinkhorn_potentials(phi, self.p, self.q, 1.0, mask=self.maskf,
                                      v0=self.v if v0 is None else v0,
                                      tol=self.cfg.marginal_tol,
                                      max_iterations=self.cfg.max_sinkhorn)
        pi = _gibbs(phi, u, v, 1.0, self.maskf)
        obj = float(self.p @ u + self.q @ v + pi.sum() - np.sum(self.obs.mass * phi))
        return u, v, pi, obj

    def gradient(self, pi):
        return np.tensordot(self.basis, pi, axes=([1, 2], [0, 1])) - self.target

    def margin_residual(self, pi):
        return max(np.abs(pi.sum(axis=1) - self.p).max(), np.abs(pi.sum(axis=0) - self.q).max()) / self.mass


def _normalized(u, v):
    shift = u.min() if len(u) else 0.0
    return Potentials(u - shift, v + shift)


def fit_inverse_ot(obs: ObservedPlan, basis, cfg: InverseConfig | None = None):
    """Fit lam so the model plan matches the observed margins and moments.

    Steps in lam are damped Newton steps using the covariance of the basis
    under the current plan, taken after projecting out the row and column
    effects (this is the exact Hessian of the objective once u and v are
    profiled out). An ill-conditioned Hessian falls back to a gradient step.
    Both are backtracked until the objective decreases.

    Returns ``(lam, potentials, report)``; potentials are pinned by min(u) = 0.
    """
    cfg = cfg or InverseConfig()
    if not isinstance(obs, ObservedPlan):
        obs = ObservedPlan(obs)
    prob = _Problem(obs, basis, cfg)
    check_identification(prob.basis, prob.mask)
    K = prob.basis.shape[0]
    lam = np.zeros(K)
    u, v, pi, obj = prob.inner(lam)
    prob.v = v
    history = [obj]

    for it in range(cfg.max_iterations + 1):
        g = prob.gradient(pi)
        if (np.max(np.abs(g), initial=0.0) / prob.mass <= cfg.moment_tol
                and prob.margin_residual(pi) <= max(cfg.marginal_tol, 1e-14) * 10):
            return lam, _normalized(u, v), FitReport(True, it, float(np.max(np.abs(g), initial=0.0)),
                                                     prob.margin_residual(pi), history, pi)
        if it == cfg.max_iterations:
            break
        R, rows, cols, sw = _residualize(prob.basis, pi, prob.mask)
        H = (R * (sw ** 2)[:, None]).T @ R
        try:
            if np.linalg.cond(H) > cfg.hessian_cond_limit:
                raise np.linalg.LinAlgError
            step = np.linalg.solve(H, -g)
        except np.linalg.LinAlgError:
            step = -g
        slope = float(g @ step)
        t = 1.0
        while True:
            cand = lam + t * step
            u2, v2, pi2, obj2 = prob.inner(cand)
            if obj2 <= obj + 1e-4 * t * slope + 1e-13 * (1 + abs(obj)):
                break
            t *= 0.5
            if t < 1e-12:
                raise NonConvergenceError("line search failed in the lam step")
        lam, u, v, pi, obj = cand, u2, v2, pi2, obj2
        prob.v = v
        history.append(obj)

    g = prob.gradient(pi)
    raise NonConvergenceError(f"inverse OT did not converge: moment residual {np.abs(g).max():.3e}")


def _soft(x, thr):
    return np.sign(x) * np.maximum(np.abs(x) - thr, 0.0)


def fit_lasso(obs: ObservedPlan, basis, penalty_weight: float, cfg: InverseConfig | None = None):
    """L1-penalized inverse OT by Sinkhorn blocks plus proximal gradient steps on lam.

    Minimizes the profiled objective plus ``penalty_weight * |lam|_1``. The
    step size starts at the inverse of the largest eigenvalue of the basis
    covariance under the current plan and is halved until the usual
    sufficient-decrease test for proximal steps passes. Stops when the
    gradient mapping falls below ``moment_tol``.

    Returns ``(lam, potentials, active_set)``.
    """
    if penalty_weight < 0:
        raise ValueError("penalty_weight must be nonnegative")
    cfg = cfg or InverseConfig()
    if not isinstance(obs, ObservedPlan):
        obs = ObservedPlan(obs)
    prob = _Problem(obs, basis, cfg)
    check_identification(prob.basis, prob.mask)
    K = prob.basis.shape[0]
    lam = np.zeros(K)
    u, v, pi, obj = prob.inner(lam)
    prob.v = v

    for _ in range(cfg.max_iterations * 100):
        g = prob.gradient(pi)
        F = prob.basis[:, prob.mask].T
        w = pi[prob.mask]
        mean = w @ F / w.sum()
        cov = ((F - mean) * w[:, None]).T @ (F - mean)
        eta = 1.0 / max(np.linalg.eigvalsh(cov)[-1], 1e-12) if K else 1.0
        while True:
            cand = _soft(lam - eta * g, eta * penalty_weight)
            d = cand - lam
            u2, v2, pi2, obj2 = prob.inner(cand)
            if obj2 <= obj + g @ d + (d @ d) / (2 * eta) + 1e-13 * (1 + abs(obj)):
                break
            eta *= 0.5
            if eta < 1e-14:
                raise NonConvergenceError("proximal step size collapsed")
        lam, u, v, pi, obj = cand, u2, v2, pi2, obj2
        prob.v = v
        if np.max(np.abs(d), initial=0.0) / eta <= cfg.moment_tol * prob.mass:
            active = tuple(int(k) for k in np.flatnonzero(lam != 0.0))
            return lam, _normalized(u, v), active
    raise NonConvergenceError("SISTA iterations exhausted")


@dataclass
class GravityFit:
    coefficients: np.ndarray
    resistances: Potentials
    fitted: np.ndarray
    kept: np.ndarray
    report: FitReport


def gravity_fit(flows, basis, cfg: InverseConfig | None = None) -> GravityFit:
    """Structural gravity: fit trade flows with exporter/importer fixed effects.

    The diagonal is excluded from every sum. Countries with zero exports or
    zero imports are dropped (with a warning) before fitting; ``kept`` lists
    the surviving indices into the original matrix.
    """
    cfg = cfg or InverseConfig()
    flows = np.asarray(flows, dtype=float)
    if flows.ndim != 2 or flows.shape[0] != flows.shape[1]:
        raise ValueError("trade flows must be a square matrix")
    n = flows.shape[0]
    basis = _as_basis(basis, flows.shape)
    off = ~np.eye(n, dtype=bool)
    kept = np.arange(n)
    while True:
        sub = flows[np.ix_(kept, kept)] * off[np.ix_(kept, kept)]
        bad = (sub.sum(axis=1) <= 0) | (sub.sum(axis=0) <= 0)
        if not bad.any():
            break
        warnings.warn(f"dropping countries {kept[bad].tolist()} with zero exports or imports")
        kept = kept[~bad]
        if len(kept) < 2:
            raise ValueError("fewer than two countries trade")
    sub_mask = off[np.ix_(kept, kept)]
    obs = ObservedPlan(flows[np.ix_(kept, kept)], mask=sub_mask)
    sub_basis = basis[:, kept][:, :, kept]
    lam, pot, report = fit_inverse_ot(obs, sub_basis, cfg)
    return GravityFit(lam, pot, report.plan, kept, report)
