"""Discrete-choice demand: share simulation and inversion of shares to utilities.

Utilities are normalized so the first alternative has V = 0. The random
utility sample is always supplied by the caller.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.special import logsumexp, softmax

from .core import NonConvergenceError, ToleranceConfig
from .entropic import sinkhorn_potentials
from .otexact import solve_exact


@dataclass(frozen=True)
class ChoiceSample:
    """N equally weighted draws of the utility shocks, plus a Gumbel scale sigma."""

    draws: np.ndarray
    sigma: float = 0.0

    def __post_init__(self):
        d = np.atleast_2d(np.asarray(self.draws, dtype=float))
        if d.shape[0] < 1 or d.shape[1] < 1:
            raise ValueError("need at least one draw over at least one alternative")
        if not np.all(np.isfinite(d)):
            raise ValueError("draws must be finite")
        if not self.sigma >= 0:
            raise ValueError("sigma must be nonnegative")
        object.__setattr__(self, "draws", d)

    @property
    def n_draws(self) -> int:
        return self.draws.shape[0]

    @property
    def n_alternatives(self) -> int:
        return self.draws.shape[1]

    @classmethod
    def degenerate(cls, n_alternatives: int, sigma: float = 1.0) -> "ChoiceSample":
        return cls(np.zeros((1, n_alternatives)), sigma)


def _shares(q, tol=1e-9, positive=False):
    q = np.asarray(q, dtype=float).reshape(-1)
    if np.any(q < -tol) or abs(q.sum() - 1.0) > tol:
        raise ValueError("shares must lie on the simplex")
    if positive and np.any(q <= 0):
        raise ValueError(f"share of alternative {int(np.argmin(q))} is zero; inversion needs positive shares")
    return np.maximum(q, 0.0)


def simulate_market_shares(V, sample: ChoiceSample) -> np.ndarray:
    """Average choice probabilities over the sample; argmax counting when sigma = 0."""
    V = np.asarray(V, dtype=float)
    util = V[None, :] + sample.draws
    if sample.sigma > 0:
        return softmax(util / sample.sigma, axis=1).mean(axis=0)
    picks = np.argmax(util, axis=1)
    return np.bincount(picks, minlength=len(V)) / sample.n_draws


def invert_pure_logit(q, sigma: float, reference: int = 0) -> np.ndarray:
    """Closed form V_y = sigma (log q_y - log q_ref)."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    q = _shares(q, positive=True)
    return sigma * (np.log(q) - np.log(q[reference]))


@dataclass(frozen=True)
class SampledInversion:
    V: np.ndarray
    plan: np.ndarray
    u: np.ndarray


def invert_sampled_lp(q, sample: ChoiceSample, cfg: ToleranceConfig | None = None) -> SampledInversion:
    """Exact OT between the empirical shock law and the shares, surplus eps_iy.

    The plan assigns each draw to alternatives in its argmax set under the
    returned V; with finitely many draws V is one point of an interval.
    """
    q = _shares(q)
    if len(q) != sample.n_alternatives:
        raise ValueError("share vector length differs from the number of alternatives")
    N = sample.n_draws
    sol = solve_exact(np.full(N, 1.0 / N), q, sample.draws, cfg)
    V = -np.array(sol.potentials.v)
    return SampledInversion(V - V[0], np.array(sol.plan.mass), np.array(sol.potentials.u))


def invert_mixed_logit(q, sample: ChoiceSample, tol: float = 1e-12, max_iterations: int = 100_000,
                       callback=None) -> np.ndarray:
    """Invert mixed-logit shares by IPFP on the draw-by-alternative problem.

    ``callback(t, V)`` receives the unnormalized iterate ``V = -v`` after each
    sweep; it equals the BLP contraction iterate started from V = 0.
    """
    if not sample.sigma > 0:
        raise ValueError("mixed logit needs sigma > 0; use invert_sampled_lp for sigma = 0")
    q = _shares(q, positive=True)
    N = sample.n_draws
    cb = None if callback is None else (lambda t, u, v: callback(t, -v))
    _, v, _ = sinkhorn_potentials(sample.draws, np.full(N, 1.0 / N), q, sample.sigma,
                                  tol=tol, max_iterations=max_iterations, callback=cb)
    V = -v
    return V - V[0]


def blp_contraction(q, sample: ChoiceSample, V0=None, tol: float = 1e-12,
                    max_iterations: int = 100_000, callback=None) -> np.ndarray:
    """Iterate V <- V + sigma (log q - log Q(V)) until shares match within ``tol``."""
    if not sample.sigma > 0:
        raise ValueError("the contraction needs sigma > 0")
    q = _shares(q, positive=True)
    s = sample.sigma
    V = np.zeros(sample.n_alternatives) if V0 is None else np.array(V0, dtype=float)
    logN = np.log(sample.n_draws)
    for t in range(1, max_iterations + 1):
        z = (V[None, :] + sample.draws) / s
        logQ = logsumexp(z - logsumexp(z, axis=1, keepdims=True), axis=0) - logN
        V = V + s * (np.log(q) - logQ)
        if callback is not None:
            callback(t, V)
        if np.abs(simulate_market_shares(V, sample) - q).max() <= tol:
            return V - V[0]
    raise NonConvergenceError("BLP contraction did not converge")
