"""Release-gate checks, one function per criterion.

Each check returns ``(passed, detail)``. ``run_all`` is used both by the
``otecon selftest`` command and by the test suite. Instances are drawn from a
fixed seed so two runs give identical reports.
"""
from __future__ import annotations

import itertools
import json
from dataclasses import dataclass

import numpy as np
from scipy.optimize import brentq

from .core import NonConvergenceError, ToleranceConfig, duality_gap
from .linprog import solve_lp, transportation_lp


@dataclass(frozen=True)
class AcceptanceConfig:
    seed: int = 20240101
    # solver tolerance used by the IPFP checks; the checks themselves use fixed thresholds
    marginal_tol: float = 1e-12


def _random_ot(rng, max_dim=20):
    n, m = rng.integers(1, max_dim + 1, size=2)
    p = rng.uniform(0.1, 1.0, n)
    q = rng.uniform(0.1, 1.0, m)
    return p / p.sum(), q / q.sum(), rng.uniform(-1, 1, (n, m))


def _ot_instances(cfg):
    rng = np.random.default_rng(cfg.seed)
    return [_random_ot(rng) for _ in range(100)]


def strong_duality(cfg: AcceptanceConfig):
    from .otexact import solve_exact

    worst_gap = worst_lp = 0.0
    for p, q, phi in _ot_instances(cfg):
        sol = solve_exact(p, q, phi)
        worst_gap = max(worst_gap, abs(duality_gap(sol.plan, sol.potentials, phi, p, q)))
        lp = solve_lp(transportation_lp(p, q, phi))
        worst_lp = max(worst_lp, abs(lp.objective_value - sol.value) if lp.optimal else np.inf)
    ok = worst_gap <= 1e-8 and worst_lp <= 1e-8
    return ok, f"max |primal - dual| = {worst_gap:.2e}, max |flow - LP| = {worst_lp:.2e}"


def complementary_slackness(cfg: AcceptanceConfig):
    from .otexact import solve_exact

    worst = 0.0
    for p, q, phi in _ot_instances(cfg):
        sol = solve_exact(p, q, phi)
        pi = sol.plan.mass
        gap = np.abs(sol.potentials.u[:, None] + sol.potentials.v[None, :] - phi)
        worst = max(worst, float(gap[pi > 1e-9].max(initial=0.0)))
    return worst <= 1e-9, f"max |u + v - Phi| on support = {worst:.2e}"


def _two_by_two_bisection(sigma):
    # symmetric 2x2, identity surplus: the cross ratio pi11 pi22 / (pi12 pi21) is exp(2 / sigma)
    k = np.exp(2.0 / sigma)
    return brentq(lambda a: a * a - k * (0.5 - a) ** 2, 0.0, 0.5, xtol=1e-15)


def ipfp_correctness(cfg: AcceptanceConfig):
    from .entropic import EntropicConfig, dual_objective, ipfp_solve
    from .core import plan_margin_residual

    rng = np.random.default_rng(cfg.seed + 3)
    worst_res = 0.0
    worst_rise = 0.0
    for _ in range(10):
        p, q, phi = _random_ot(rng, 8)
        sigma = float(rng.choice([0.1, 0.5, 1.0]))
        trace = []
        try:
            pot, plan, _ = ipfp_solve(p, q, phi, EntropicConfig(sigma=sigma, marginal_tol=cfg.marginal_tol),
                                      callback=lambda t, u, v: trace.append(dual_objective(u, v, p, q, phi, sigma)))
        except NonConvergenceError as exc:
            return False, str(exc)
        worst_res = max(worst_res, plan_margin_residual(plan, p, q))
        diffs = np.diff(trace)
        worst_rise = max(worst_rise, float(diffs.max(initial=0.0)))

    sigma = 0.5
    analytic = 0.5 * np.e ** 2 / (1 + np.e ** 2)
    oracle = _two_by_two_bisection(sigma)
    half = np.array([0.5, 0.5])
    try:
        _, plan, _ = ipfp_solve(half, half, np.eye(2), EntropicConfig(sigma=sigma, marginal_tol=cfg.marginal_tol))
        pi11 = plan.mass[0, 0]
    except NonConvergenceError as exc:
        return False, str(exc)
    err = max(abs(pi11 - oracle), abs(pi11 - analytic))
    ok = worst_res <= 1e-10 and worst_rise <= 1e-12 and err <= 1e-8
    return ok, (f"max margin residual {worst_res:.2e}, max dual rise per sweep {worst_rise:.2e}, "
                f"|pi11 - oracle| {err:.2e}")


def sigma_consistency(cfg: AcceptanceConfig):
    from .entropic import EntropicConfig, ipfp_solve, primal_objective
    from .otexact import solve_exact

    rng = np.random.default_rng(cfg.seed + 4)
    worst = -np.inf
    for _ in range(3):
        p = rng.uniform(0.1, 1, 5)
        q = rng.uniform(0.1, 1, 5)
        p, q = p / p.sum(), q / q.sum()
        phi = rng.uniform(-1, 1, (5, 5))
        exact = solve_exact(p, q, phi).value
        for sigma in (1.0, 0.1, 0.01, 0.001):
            ecfg = EntropicConfig(sigma=sigma, marginal_tol=max(cfg.marginal_tol, 1e-11),
                                  epsilon_scaling_schedule=(1.0, 0.1, 0.01))
            try:
                _, plan, _ = ipfp_solve(p, q, phi, ecfg)
            except NonConvergenceError as exc:
                return False, str(exc)
            value = primal_objective(plan, phi, sigma)
            worst = max(worst, abs(value - exact) - sigma * np.log(25))
    return worst <= 1e-6, f"max excess over sigma*log(|X||Y|) = {worst:.2e}"


def inverse_recovery(cfg: AcceptanceConfig):
    from .entropic import _gibbs, sinkhorn_potentials
    from .inverse import InverseConfig, ObservedPlan, fit_inverse_ot, gravity_fit

    rng = np.random.default_rng(cfg.seed + 5)
    n, K = 10, 3
    basis = rng.normal(size=(K, n, n))
    lam = np.array([1.0, -0.5, 0.75])
    p = rng.uniform(0.5, 1.5, n)
    q = rng.uniform(0.5, 1.5, n)
    p, q = p / p.sum(), q / q.sum()
    phi = np.tensordot(lam, basis, axes=1)
    u, v, _ = sinkhorn_potentials(phi, p, q, 1.0, tol=1e-15)
    obs = ObservedPlan(_gibbs(phi, u, v, 1.0))
    fit, _, report = fit_inverse_ot(obs, basis, InverseConfig(moment_tol=1e-10))
    lam_err = float(np.abs(fit - lam).max())
    moment_err = float(np.abs(np.tensordot(basis, report.plan, axes=([1, 2], [0, 1])) - obs.moments(basis)).max())
    margin_err = max(np.abs(report.plan.sum(1) - p).max(), np.abs(report.plan.sum(0) - q).max())

    N = 6
    pts = rng.uniform(size=(N, 2))
    dist = np.linalg.norm(pts[:, None] - pts[None], axis=2)
    gbasis = np.stack([-dist, -np.log1p(dist)])
    mask = ~np.eye(N, dtype=bool)
    gp = rng.uniform(1, 3, N)
    gq = rng.uniform(1, 3, N)
    gq *= gp.sum() / gq.sum()
    gphi = np.tensordot(np.array([2.0, 0.5]), gbasis, axes=1)
    gu, gv, _ = sinkhorn_potentials(gphi, gp, gq, 1.0, mask=mask.astype(float), tol=1e-15)
    flows = _gibbs(gphi, gu, gv, 1.0, mask)
    g = gravity_fit(flows, gbasis, InverseConfig(moment_tol=1e-10))
    trade_err = max(np.abs(g.fitted.sum(1) - flows.sum(1)).max(), np.abs(g.fitted.sum(0) - flows.sum(0)).max())
    diag = float(np.abs(np.diag(g.fitted)).max())
    ok = lam_err <= 1e-6 and moment_err <= 1e-6 and margin_err <= 1e-6 and trade_err <= 1e-8 and diag == 0.0
    return ok, (f"lambda error {lam_err:.2e}, moment residual {moment_err:.2e}, "
                f"gravity export/import residual {trade_err:.2e}")


def stability(cfg: AcceptanceConfig):
    from .markets import check_stability, solve_stable_matching, wage_bounds

    rng = np.random.default_rng(cfg.seed + 6)
    worst_issues = 0
    worst_width = 0.0
    for _ in range(100):
        n, m = rng.integers(1, 12, size=2)
        p = rng.uniform(0.1, 2.0, n)
        q = rng.uniform(0.1, 2.0, m)
        phi = rng.uniform(-1, 2, (n, m))
        out = solve_stable_matching(p, q, phi)
        issues = check_stability(out.plan, out.singles_x, out.singles_y, out.u, out.v, phi, p, q, 1e-9)
        worst_issues = max(worst_issues, len(issues))
        alpha = rng.uniform(-1, 1, (n, m))
        w = wage_bounds(out, alpha, phi - alpha)
        if w.matched.any():
            worst_width = max(worst_width, float(np.abs(w.width[w.matched]).max()))
    ok = worst_issues == 0 and worst_width <= 1e-9
    return ok, f"violated conditions {worst_issues}, max matched wage-interval width {worst_width:.2e}"


def blp_ipfp(cfg: AcceptanceConfig):
    from .choice import (ChoiceSample, blp_contraction, invert_mixed_logit, invert_pure_logit,
                         simulate_market_shares)

    rng = np.random.default_rng(cfg.seed + 7)
    worst_seq = worst_logit = worst_round = 0.0
    for _ in range(5):
        J = int(rng.integers(2, 6))
        sample = ChoiceSample(rng.gumbel(size=(int(rng.integers(5, 60)), J)), float(rng.uniform(0.3, 2.0)))
        q = rng.dirichlet(np.ones(J) * 3)
        a, b = [], []
        V = invert_mixed_logit(q, sample, callback=lambda t, V: a.append(V.copy()))
        blp_contraction(q, sample, callback=lambda t, V: b.append(V.copy()))
        k = min(len(a), len(b))
        worst_seq = max(worst_seq, max(float(np.abs(x - y).max()) for x, y in zip(a[:k], b[:k])))
        worst_round = max(worst_round, float(np.abs(simulate_market_shares(V, sample) - q).max()))
        sigma = sample.sigma
        V1 = invert_mixed_logit(q, ChoiceSample.degenerate(J, sigma))
        worst_logit = max(worst_logit, float(np.abs(V1 - invert_pure_logit(q, sigma)).max()))
    ok = worst_seq <= 1e-12 and worst_logit <= 1e-10 and worst_round <= 1e-8
    return ok, (f"max iterate difference {worst_seq:.2e}, logit closed-form error {worst_logit:.2e}, "
                f"share round-trip error {worst_round:.2e}")


def option_bounds(cfg: AcceptanceConfig):
    from .finance import (MarginalLaw, NoMartingaleCouplingError, option_bounds_martingale,
                          option_bounds_static)

    rng = np.random.default_rng(cfg.seed + 8)
    worst_sep = 0.0
    nest_ok = True
    for _ in range(10):
        n, m = rng.integers(1, 7, size=2)
        P = MarginalLaw(np.sort(rng.uniform(0, 4, n)), rng.dirichlet(np.ones(n)))
        Q = MarginalLaw(np.sort(rng.uniform(0, 4, m)), rng.dirichlet(np.ones(m)))
        a, b = rng.normal(size=n), rng.normal(size=m)
        sep = option_bounds_static(P, Q, a[:, None] + b[None, :])
        worst_sep = max(worst_sep, sep.width)
    for _ in range(10):
        # Y = X + zero-mean noise gives a convex-ordered pair
        xs = np.sort(rng.uniform(1, 3, 3))
        px = rng.dirichlet(np.ones(3))
        jumps = np.array([-0.5, 0.5])
        ys = (xs[:, None] + jumps[None, :]).reshape(-1)
        py = (px[:, None] * np.full(2, 0.5)[None, :]).reshape(-1)
        P, Q = MarginalLaw(xs, px), MarginalLaw(ys, py)
        payoff = rng.normal(size=(3, 6))
        st = option_bounds_static(P, Q, payoff)
        mt = option_bounds_martingale(P, Q, payoff)
        tol = 1e-9
        nest_ok &= st.lower - tol <= mt.lower <= mt.upper + tol and mt.upper <= st.upper + tol
    forced = option_bounds_martingale(MarginalLaw([1.0], [1.0]), MarginalLaw([0.0, 2.0], [0.5, 0.5]),
                                      lambda x, y: (y - 1.0) ** 2)
    forced_ok = forced.lower == 1.0 and forced.upper == 1.0
    detected = 0
    for P, Q in ((MarginalLaw([0.0], [1.0]), MarginalLaw([1.0], [1.0])),
                 (MarginalLaw([0.0, 2.0], [0.5, 0.5]), MarginalLaw([1.0], [1.0]))):
        try:
            option_bounds_martingale(P, Q, lambda x, y: x * y)
        except NoMartingaleCouplingError:
            detected += 1
    ok = worst_sep <= 1e-9 and nest_ok and forced_ok and detected == 2
    return ok, (f"separable width {worst_sep:.2e}, nesting {'holds' if nest_ok else 'fails'}, "
                f"forced coupling [{forced.lower!r}, {forced.upper!r}], infeasible cases detected {detected}/2")


def quantiles(cfg: AcceptanceConfig):
    from .finance import MarginalLaw
    from .otexact import solve_exact
    from .quantiles import QuantileGrid, RegressionData, empirical_quantile_interval, vqr_solve

    rng = np.random.default_rng(cfg.seed + 9)
    beaten = 0
    for n in range(1, 7):
        x = np.sort(rng.uniform(0, 1, n))
        y = np.sort(rng.normal(size=n))
        w = np.full(n, 1.0 / n)
        sol = solve_exact(w, w, np.outer(x, y))
        sorted_value = float(x @ y) / n
        best_perm = max(float(x @ y[list(s)]) / n for s in itertools.permutations(range(n)))
        if abs(sol.value - sorted_value) > 1e-12 or best_perm > sorted_value + 1e-12:
            beaten += 1
    misses = 0
    cases = [(2, 3), (5, 12), (10, 40), (25, 100), (50, 200), (37, 150)]
    for m, N in cases:
        Y = rng.normal(size=N)
        res = vqr_solve(RegressionData.intercept_only(Y), QuantileGrid.uniform(m))
        for level, beta in zip(res.curve.levels, res.curve.beta[:, 0]):
            lo, hi = empirical_quantile_interval(Y, level)
            if not lo - 1e-9 <= beta <= hi + 1e-9:
                misses += 1
    ok = beaten == 0 and misses == 0
    return ok, f"sorted coupling beaten on {beaten}/6 sizes, VQR quantile mismatches {misses} over {len(cases)} designs"


def hide_and_seek(cfg: AcceptanceConfig):
    from .games import HideSeekGame, hide_and_seek_solve, minimax_oracle

    rng = np.random.default_rng(cfg.seed + 10)
    worst = worst_cert = 0.0
    for _ in range(50):
        n = int(rng.integers(1, 6))
        K = rng.uniform(0.1, 5.0, (n, n))
        game = HideSeekGame(K)
        sol = hide_and_seek_solve(game)
        worst = max(worst, abs(sol.game_value - minimax_oracle(game)))
        worst_cert = max(worst_cert, sol.game_value - sol.seeker_guarantee(K),
                         sol.hider_guarantee(K) - sol.game_value,
                         abs(sol.hider_probs.sum() - 1.0),
                         abs(sol.seeker_row_probs.sum() + sol.seeker_col_probs.sum() - 1.0))
    ok = worst <= 1e-8 and worst_cert <= 1e-8
    return ok, f"max |OT value - minimax| {worst:.2e}, worst guarantee slack {worst_cert:.2e}"


def strassen(cfg: AcceptanceConfig):
    from .games import IdentificationSpec, strassen_test

    rng = np.random.default_rng(cfg.seed + 11)
    worst = 0.0
    for _ in range(30):
        nx, ny = int(rng.integers(1, 8)), int(rng.integers(1, 11))
        gamma = rng.uniform(size=(nx, ny)) < 0.35
        res = strassen_test(IdentificationSpec(gamma, rng.dirichlet(np.ones(nx)), rng.dirichlet(np.ones(ny))))
        worst = max(worst, abs(res.primal - res.dual))
    return worst <= 1e-8, f"max |primal - subset dual| {worst:.2e}"


def submodularity(cfg: AcceptanceConfig):
    from .otexact import check_submodular_Cstar

    rng = np.random.default_rng(cfg.seed + 12)
    failures = 0
    for _ in range(3):
        n, m = rng.integers(2, 6, size=2)
        phi = rng.uniform(-1, 1, (n, m))
        for sigma in (0.1, 1.0):
            for _ in range(1000):
                v1, v2 = rng.uniform(-1, 1, n + m), rng.uniform(-1, 1, n + m)
                failures += not check_submodular_Cstar(v1, v2, phi, sigma)
    return failures == 0, f"lattice inequality failures {failures}/6000"


def cli_determinism(cfg: AcceptanceConfig):
    from .cli import run_document

    problem = {
        "schema": 1, "kind": "choice_invert", "shares": [0.2, 0.3, 0.5], "sigma": 0.5,
        "sample": {"n_draws": 40, "distribution": "gumbel", "seed": cfg.seed},
    }
    text = json.dumps(problem)
    outs = []
    for _ in range(2):
        code, doc = run_document("choice", text, {})
        doc.pop("wall_clock_seconds", None)
        outs.append((code, json.dumps(doc, sort_keys=True)))
    same = outs[0] == outs[1] and outs[0][0] == 0
    return same, "two runs byte-identical" if same else "outputs differ"


CRITERIA = [
    (1, "strong duality", strong_duality),
    (2, "complementary slackness", complementary_slackness),
    (3, "IPFP correctness", ipfp_correctness),
    (4, "sigma to zero consistency", sigma_consistency),
    (5, "inverse OT recovery", inverse_recovery),
    (6, "stability certification", stability),
    (7, "BLP equals IPFP", blp_ipfp),
    (8, "option bounds", option_bounds),
    (9, "quantiles", quantiles),
    (10, "hide-and-seek", hide_and_seek),
    (11, "Strassen duality", strassen),
    (12, "submodularity of C*", submodularity),
    (13, "CLI determinism", cli_determinism),
]


def run_criterion(number: int, cfg: AcceptanceConfig | None = None):
    cfg = cfg or AcceptanceConfig()
    for k, name, fn in CRITERIA:
        if k == number:
            try:
                ok, detail = fn(cfg)
            except Exception as exc:  # a crash is a failed criterion, reported rather than raised
                ok, detail = False, f"{type(exc).__name__}: {exc}"
            return k, name, bool(ok), detail
    raise KeyError(number)


def run_all(cfg: AcceptanceConfig | None = None, out=print):
    results = []
    for k, _, _ in CRITERIA:
        k, name, ok, detail = run_criterion(k, cfg)
        out(f"[{'PASS' if ok else 'FAIL'}] {k:2d} {name}: {detail}")
        results.append((k, name, ok, detail))
    return results
