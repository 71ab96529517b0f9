"""Command-line front end.

Usage: ``otecon <subcommand> <file> [--tol X] [--max-iter N] [--sigma S] [--out path]``
and ``otecon selftest``. Problem files are JSON with ``"schema": 1`` and a
``"kind"``. Matrices are nested row-major lists, or ``{"shape": [n, m],
"data": [...]}``. Results go to stdout (or ``--out``) as JSON with sorted keys;
logs go to stderr.

Exit codes: 0 success, 1 solver failure (non-convergence or infeasibility,
with a diagnostic document), 2 malformed input.
"""
from __future__ import annotations

import argparse
import hashlib
import json
import logging
import math
import sys
import time

import numpy as np

from .core import InfeasibleInputError, NonConvergenceError, OtError, ToleranceConfig, UnbalancedMassError

SCHEMA = 1
log = logging.getLogger("otecon")

SUBCOMMANDS = {
    "solve": ("ot", "ot_unmatched"),
    "sinkhorn": ("entropic",),
    "invert": ("inverse",),
    "gravity": ("gravity",),
    "match": ("matching", "hedonic"),
    "choice": ("choice_invert",),
    "bounds": ("bounds", "bounds_martingale"),
    "vqr": ("qr", "vqr", "quantile_transform"),
    "game": ("game",),
    "identify": ("strassen",),
}


class InputError(ValueError):
    """Malformed problem file; the message names the offending field."""


# --------------------------------------------------------------------------
# reading


def _field(doc, key, where="$"):
    if key not in doc:
        raise InputError(f"{where}.{key}: required field missing")
    return doc[key]


def _number(doc, key, where="$", default=None):
    if key not in doc and default is not None:
        return float(default)
    val = _field(doc, key, where)
    if isinstance(val, bool) or not isinstance(val, (int, float)):
        raise InputError(f"{where}.{key}: expected a number")
    return float(val)


def _vector(doc, key, where="$"):
    val = _field(doc, key, where)
    try:
        arr = np.asarray(val, dtype=float)
    except (TypeError, ValueError):
        raise InputError(f"{where}.{key}: expected a list of numbers") from None
    if arr.ndim != 1:
        raise InputError(f"{where}.{key}: expected a vector, got {arr.ndim} dimensions")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{where}.{key}: entries must be finite")
    return arr


def _array(val, path, ndim):
    if isinstance(val, dict):
        shape = val.get("shape")
        data = val.get("data")
        if shape is None or data is None:
            raise InputError(f"{path}: matrix objects need 'shape' and 'data'")
        try:
            arr = np.asarray(data, dtype=float)
        except (TypeError, ValueError):
            raise InputError(f"{path}.data: not numeric") from None
        if list(arr.shape) != list(shape):
            try:
                arr = arr.reshape(shape)
            except ValueError:
                raise InputError(f"{path}: data does not fit shape {shape}") from None
    else:
        try:
            arr = np.asarray(val, dtype=float)
        except (TypeError, ValueError):
            raise InputError(f"{path}: expected a rectangular numeric array") from None
    if arr.ndim != ndim:
        raise InputError(f"{path}: expected {ndim} dimensions, got {arr.ndim}")
    if not np.all(np.isfinite(arr)):
        raise InputError(f"{path}: entries must be finite")
    return arr


def _matrix(doc, key, where="$", shape=None):
    arr = _array(_field(doc, key, where), f"{where}.{key}", 2)
    if shape is not None and arr.shape != tuple(shape):
        raise InputError(f"{where}.{key}: shape {list(arr.shape)} does not match expected {list(shape)}")
    return arr


def _basis(doc, key, shape, where="$"):
    val = doc.get(key, [])
    if isinstance(val, list) and len(val) == 0:
        return np.zeros((0,) + tuple(shape))
    if isinstance(val, dict):
        arr = _array(val, f"{where}.{key}", 3)
    else:
        if not isinstance(val, list):
            raise InputError(f"{where}.{key}: expected a list of matrices")
        arr = np.stack([_array(b, f"{where}.{key}[{k}]", 2) for k, b in enumerate(val)])
    if arr.shape[1:] != tuple(shape):
        raise InputError(f"{where}.{key}: basis matrices must have shape {list(shape)}")
    return arr


def _law(doc, key):
    from .finance import MarginalLaw

    sub = _field(doc, key)
    if not isinstance(sub, dict):
        raise InputError(f"$.{key}: expected an object with 'support' and 'probs'")
    try:
        return MarginalLaw(_vector(sub, "support", f"$.{key}"), _vector(sub, "probs", f"$.{key}"))
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"$.{key}: {exc}") from None


# --------------------------------------------------------------------------
# writing


def _num(x):
    x = float(x)
    if math.isnan(x):
        return "nan"
    if math.isinf(x):
        return "inf" if x > 0 else "-inf"
    return x + 0.0  # folds -0.0 into 0.0


def _out(a):
    arr = np.asarray(a, dtype=float)
    flat = [_num(v) for v in arr.reshape(-1)]
    if arr.ndim <= 1:
        return {"shape": list(arr.shape), "data": flat}
    return {"shape": list(arr.shape), "data": np.array(flat, dtype=object).reshape(arr.shape).tolist()}


def _margin_res(plan, p, q):
    return _num(max(np.abs(plan.sum(axis=1) - p).max(initial=0.0), np.abs(plan.sum(axis=0) - q).max(initial=0.0)))


# --------------------------------------------------------------------------
# handlers: each returns (values, arrays, diagnostics) computed from outputs


def _tol(opts):
    kw = {}
    if opts.get("tol") is not None:
        kw["feasibility_tol"] = opts["tol"]
    if opts.get("max_iter") is not None:
        kw["max_iterations"] = int(opts["max_iter"])
    return ToleranceConfig(**kw)


def _ot(doc, opts, unmatched):
    from .otexact import solve_exact, solve_with_unmatched

    p, q = _vector(doc, "p"), _vector(doc, "q")
    phi = _matrix(doc, "phi", shape=(len(p), len(q)))
    sol = (solve_with_unmatched if unmatched else solve_exact)(p, q, phi, _tol(opts))
    pi, u, v = np.array(sol.plan.mass), np.array(sol.potentials.u), np.array(sol.potentials.v)
    singles_x = p - pi.sum(axis=1)
    singles_y = q - pi.sum(axis=0)
    slack = u[:, None] + v[None, :] - phi
    dual = float(p @ u + q @ v)
    diag = {
        "dual_feasibility_violation": _num(max(-slack.min(initial=0.0), 0.0)),
        "complementary_slackness": _num(np.abs(slack[pi > 0]).max(initial=0.0)),
        "duality_gap": _num(dual - float(np.sum(pi * phi))),
    }
    if unmatched:
        diag["min_single_mass"] = _num(min(singles_x.min(initial=0.0), singles_y.min(initial=0.0)))
    else:
        diag["margin_residual"] = _margin_res(pi, p, q)
    arrays = {"plan": _out(pi), "u": _out(u), "v": _out(v)}
    if unmatched:
        arrays.update(singles_x=_out(singles_x), singles_y=_out(singles_y))
    return {"value": _num(np.sum(pi * phi)), "dual_value": _num(dual)}, arrays, diag


def _entropic(doc, opts):
    from .entropic import EntropicConfig, dual_objective, ipfp_solve, primal_objective

    p, q = _vector(doc, "p"), _vector(doc, "q")
    phi = _matrix(doc, "phi", shape=(len(p), len(q)))
    sigma = opts.get("sigma") if opts.get("sigma") is not None else _number(doc, "sigma", default=1.0)
    kw = {"sigma": sigma, "epsilon_scaling_schedule": tuple(doc.get("epsilon_scaling", ()))}
    if opts.get("tol") is not None:
        kw["marginal_tol"] = opts["tol"]
    if opts.get("max_iter") is not None:
        kw["max_iterations"] = int(opts["max_iter"])
    try:
        ecfg = EntropicConfig(**kw)
    except ValueError as exc:
        raise InputError(f"$: {exc}") from None
    pot, plan, sweeps = ipfp_solve(p, q, phi, ecfg)
    pi = np.array(plan.mass)
    return ({"value": _num(primal_objective(pi, phi, sigma)),
             "dual_value": _num(dual_objective(pot.u, pot.v, p, q, phi, sigma)),
             "sigma": _num(sigma)},
            {"plan": _out(pi), "u": _out(pot.u), "v": _out(pot.v)},
            {"sweeps": sweeps, "margin_residual": _margin_res(pi, p, q)})


def _inverse_cfg(opts):
    from .inverse import InverseConfig

    kw = {}
    if opts.get("tol") is not None:
        kw["moment_tol"] = opts["tol"]
    if opts.get("max_iter") is not None:
        kw["max_iterations"] = int(opts["max_iter"])
    return InverseConfig(**kw)


def _inverse(doc, opts):
    from .entropic import _gibbs
    from .inverse import ObservedPlan, fit_inverse_ot, fit_lasso

    obs_mat = _matrix(doc, "plan")
    if np.any(obs_mat < 0):
        raise InputError("$.plan: observed plan must be nonnegative")
    basis = _basis(doc, "basis", obs_mat.shape)
    mask = _matrix(doc, "mask", shape=obs_mat.shape).astype(bool) if "mask" in doc else None
    obs = ObservedPlan(obs_mat, mask)
    icfg = _inverse_cfg(opts)
    if "penalty" in doc:
        lam, pot, active = fit_lasso(obs, basis, _number(doc, "penalty"), icfg)
        extra = {"active_set": list(active)}
    else:
        lam, pot, _ = fit_inverse_ot(obs, basis, icfg)
        extra = {}
    phi = np.tensordot(lam, basis, axes=1) if len(lam) else np.zeros(obs_mat.shape)
    pi = _gibbs(phi, np.array(pot.u), np.array(pot.v), 1.0, obs.mask)
    moments = np.tensordot(basis, pi - obs.mass, axes=([1, 2], [0, 1])) if len(lam) else np.zeros(0)
    diag = {"margin_residual": _margin_res(pi, obs.p, obs.q),
            "moment_residual": _num(np.abs(moments).max(initial=0.0))}
    return extra, {"lambda": _out(lam), "u": _out(pot.u), "v": _out(pot.v), "fitted": _out(pi)}, diag


def _gravity(doc, opts):
    from .inverse import gravity_fit

    flows = _matrix(doc, "flows")
    if flows.shape[0] != flows.shape[1]:
        raise InputError("$.flows: trade flows must be square")
    basis = _basis(doc, "basis", flows.shape)
    g = gravity_fit(flows, basis, _inverse_cfg(opts))
    kept = g.kept
    sub = flows[np.ix_(kept, kept)] * ~np.eye(len(kept), dtype=bool)
    return ({"kept": [int(k) for k in kept]},
            {"lambda": _out(g.coefficients), "exporter_effects": _out(g.resistances.u),
             "importer_effects": _out(g.resistances.v), "fitted": _out(g.fitted)},
            {"margin_residual": _margin_res(g.fitted, sub.sum(axis=1), sub.sum(axis=0))})


def _matching(doc, opts):
    from .markets import check_stability, solve_stable_matching, wage_bounds

    p, q = _vector(doc, "p"), _vector(doc, "q")
    phi = _matrix(doc, "phi", shape=(len(p), len(q)))
    out = solve_stable_matching(p, q, phi, _tol(opts))
    arrays = {"plan": _out(out.plan), "singles_x": _out(out.singles_x), "singles_y": _out(out.singles_y),
              "u": _out(out.u), "v": _out(out.v)}
    if "alpha" in doc:
        alpha = _matrix(doc, "alpha", shape=phi.shape)
        gamma = _matrix(doc, "gamma", shape=phi.shape) if "gamma" in doc else phi - alpha
        try:
            w = wage_bounds(out, alpha, gamma)
        except ValueError as exc:
            raise InputError(f"$.alpha: {exc}") from None
        arrays.update(wage_lower=_out(w.lower), wage_upper=_out(w.upper))
    issues = check_stability(out.plan, out.singles_x, out.singles_y, out.u, out.v, phi, p, q)
    return ({"matched_mass": _num(out.matched_mass), "value": _num(np.sum(out.plan * phi))},
            arrays, {"stability_violations": len(issues)})


def _hedonic(doc, opts):
    from .markets import HedonicSpec, hedonic_price_bounds, hedonic_reduce, solve_stable_matching

    p, q = _vector(doc, "p"), _vector(doc, "q")
    C = _matrix(doc, "costs")
    U = _matrix(doc, "utilities")
    if C.shape[0] != len(p) or U.shape[0] != len(q):
        raise InputError("$.costs/$.utilities: rows must match p and q")
    try:
        spec = HedonicSpec(C, U)
    except ValueError as exc:
        raise InputError(f"$: {exc}") from None
    phi, zstar = hedonic_reduce(spec)
    out = solve_stable_matching(p, q, phi, _tol(opts))
    pb = hedonic_price_bounds(out, spec)
    return ({"matched_mass": _num(out.matched_mass)},
            {"plan": _out(out.plan), "u": _out(out.u), "v": _out(out.v), "surplus": _out(phi),
             "quality": _out(zstar), "price_lower": _out(pb.lower), "price_upper": _out(pb.upper)},
            {"max_traded_price_width": _num(pb.width[pb.traded].max(initial=0.0))})


def _draws(doc, J):
    if "draws" in doc:
        d = _matrix(doc, "draws")
        if d.shape[1] != J:
            raise InputError(f"$.draws: need {J} columns, one per alternative")
        return d
    sample = _field(doc, "sample")
    if not isinstance(sample, dict):
        raise InputError("$.sample: expected an object")
    if "seed" not in sample:
        raise InputError("$.sample.seed: a seed is required when draws are sampled")
    seed = sample["seed"]
    if isinstance(seed, bool) or not isinstance(seed, int) or not 0 <= seed < 2 ** 64:
        raise InputError("$.sample.seed: expected an unsigned 64-bit integer")
    n = sample.get("n_draws")
    if isinstance(n, bool) or not isinstance(n, int) or n < 1:
        raise InputError("$.sample.n_draws: expected a positive integer")
    rng = np.random.Generator(np.random.PCG64(seed))
    dist = sample.get("distribution", "gumbel")
    if dist == "gumbel":
        return rng.gumbel(size=(n, J))
    if dist == "normal":
        return rng.standard_normal(size=(n, J))
    raise InputError(f"$.sample.distribution: unknown distribution {dist!r}")


def _choice(doc, opts):
    from .choice import ChoiceSample, invert_mixed_logit, invert_sampled_lp, simulate_market_shares

    q = _vector(doc, "shares")
    sigma = opts.get("sigma") if opts.get("sigma") is not None else _number(doc, "sigma", default=0.0)
    try:
        sample = ChoiceSample(_draws(doc, len(q)), sigma)
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"$: {exc}") from None
    arrays = {}
    try:
        if sigma > 0:
            kw = {}
            if opts.get("tol") is not None:
                kw["tol"] = opts["tol"]
            if opts.get("max_iter") is not None:
                kw["max_iterations"] = int(opts["max_iter"])
            V = invert_mixed_logit(q, sample, **kw)
        else:
            res = invert_sampled_lp(q, sample, _tol(opts))
            V = res.V
            arrays["plan"] = _out(res.plan)
    except ValueError as exc:
        raise InputError(f"$.shares: {exc}") from None
    arrays["V"] = _out(V)
    return ({"sigma": _num(sigma), "n_draws": sample.n_draws}, arrays,
            {"share_residual": _num(np.abs(simulate_market_shares(V, sample) - q).max())})


def _bounds(doc, opts, martingale):
    from .finance import option_bounds_martingale, option_bounds_static

    P, Q = _law(doc, "P"), _law(doc, "Q")
    raw_payoff = _matrix(doc, "payoff", shape=(len(P.support), len(Q.support)))
    # laws are stored sorted; permute the payoff to match
    order_p = np.argsort(np.asarray(doc["P"]["support"], dtype=float), kind="stable")
    order_q = np.argsort(np.asarray(doc["Q"]["support"], dtype=float), kind="stable")
    payoff = raw_payoff[np.ix_(order_p, order_q)]
    res = (option_bounds_martingale if martingale else option_bounds_static)(P, Q, payoff, _tol(opts))
    arrays = {"upper_u": _out(res.upper_hedge.u), "upper_v": _out(res.upper_hedge.v),
              "lower_u": _out(res.lower_hedge.u), "lower_v": _out(res.lower_hedge.v),
              "upper_plan": _out(res.upper_plan), "lower_plan": _out(res.lower_plan)}
    if martingale:
        arrays.update(upper_delta=_out(res.upper_delta), lower_delta=_out(res.lower_delta))
    diag = {"upper_hedge_value": _num(res.upper_hedge.value(P.probs, Q.probs)),
            "lower_hedge_value": _num(res.lower_hedge.value(P.probs, Q.probs))}
    return {"lower": _num(res.lower), "upper": _num(res.upper)}, arrays, diag


def _regression(doc):
    from .quantiles import RegressionData

    Y = _vector(doc, "Y")
    X = _matrix(doc, "X") if "X" in doc else np.ones((len(Y), 1))
    try:
        return RegressionData(X, Y)
    except ValueError as exc:
        raise InputError(f"$.X: {exc}") from None


def _qr(doc, opts):
    from .quantiles import classic_qr, pinball_loss

    data = _regression(doc)
    tau = _number(doc, "tau")
    if not 0 < tau < 1:
        raise InputError("$.tau: must lie in (0, 1)")
    beta = classic_qr(data, tau, _tol(opts))
    return ({"tau": _num(tau)}, {"beta": _out(beta)},
            {"loss": _num(pinball_loss(data.Y - data.X @ beta, tau))})


def _vqr(doc, opts):
    from .quantiles import QuantileGrid, vqr_solve

    data = _regression(doc)
    m = doc.get("m")
    if isinstance(m, bool) or not isinstance(m, int) or m < 2:
        raise InputError("$.m: expected an integer grid size of at least 2")
    try:
        res = vqr_solve(data, QuantileGrid.uniform(m), _tol(opts))
    except ValueError as exc:
        raise InputError(f"$.X: {exc}") from None
    xbar = data.X.mean(axis=0)
    mean_indep = np.abs(res.plan @ data.X - xbar[None, :] / m).max()
    return ({"objective": _num(res.objective), "crossing": res.curve.crossing},
            {"plan": _out(res.plan), "levels": _out(res.curve.levels), "beta": _out(res.curve.beta),
             "b": _out(res.curve.b), "psi": _out(res.psi)},
            {"mean_independence_residual": _num(mean_indep),
             "representation_error": _num(res.representation_error)})


def _quantile_transform(doc, opts):
    from .quantiles import QuantileGrid, quantile_transform_ot

    Q = _law(doc, "Q")
    try:
        grid = QuantileGrid(_vector(doc, "taus")) if "taus" in doc else QuantileGrid.uniform(int(_number(doc, "m")))
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"$: {exc}") from None
    plan, monotone = quantile_transform_ot(grid, Q, _tol(opts))
    return ({"monotone": bool(monotone), "value": _num(np.sum(plan * np.outer(grid.taus, Q.support)))},
            {"plan": _out(plan), "taus": _out(grid.taus), "support": _out(Q.support)},
            {"margin_residual": _margin_res(plan, grid.weights, Q.probs)})


def _game(doc, opts):
    from .games import HideSeekGame, hide_and_seek_solve, minimax_oracle

    try:
        game = HideSeekGame(_matrix(doc, "K"))
    except ValueError as exc:
        if isinstance(exc, InputError):
            raise
        raise InputError(f"$.K: {exc}") from None
    sol = hide_and_seek_solve(game, _tol(opts))
    return ({"game_value": _num(sol.game_value), "ot_value": _num(sol.ot_value)},
            {"hider": _out(sol.hider_probs), "seeker_rows": _out(sol.seeker_row_probs),
             "seeker_cols": _out(sol.seeker_col_probs)},
            {"seeker_guarantee": _num(sol.seeker_guarantee(game.K)),
             "hider_guarantee": _num(sol.hider_guarantee(game.K)),
             "minimax_oracle": _num(minimax_oracle(game, _tol(opts)))})


def _strassen(doc, opts):
    from .games import IdentificationSpec, strassen_test

    P, Q = _vector(doc, "P"), _vector(doc, "Q")
    gamma = _matrix(doc, "gamma", shape=(len(P), len(Q)))
    try:
        spec = IdentificationSpec(gamma, P, Q)
    except ValueError as exc:
        raise InputError(f"$: {exc}") from None
    res = strassen_test(spec, _tol(opts))
    outside = float(np.sum(res.plan * ~spec.gamma))
    return ({"primal": _num(res.primal), "dual": _num(res.dual), "witness": list(res.witness),
             "identified": res.identified()},
            {"plan": _out(res.plan)},
            {"mass_outside": _num(outside), "margin_residual": _margin_res(res.plan, P, Q)})


HANDLERS = {
    "ot": lambda d, o: _ot(d, o, False),
    "ot_unmatched": lambda d, o: _ot(d, o, True),
    "entropic": _entropic,
    "inverse": _inverse,
    "gravity": _gravity,
    "matching": _matching,
    "hedonic": _hedonic,
    "choice_invert": _choice,
    "bounds": lambda d, o: _bounds(d, o, False),
    "bounds_martingale": lambda d, o: _bounds(d, o, True),
    "qr": _qr,
    "vqr": _vqr,
    "quantile_transform": _quantile_transform,
    "game": _game,
    "strassen": _strassen,
}


# --------------------------------------------------------------------------
# driver


def run_document(subcommand: str, text: str, opts: dict):
    """Solve one problem document. Returns ``(exit_code, result_doc)``.

    Raises InputError for malformed input (exit code 2 at the command line).
    """
    start = time.perf_counter()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise InputError(f"line {exc.lineno} column {exc.colno}: invalid JSON ({exc.msg})") from None
    if not isinstance(doc, dict):
        raise InputError("$: top level must be an object")
    if doc.get("schema") != SCHEMA:
        raise InputError(f"$.schema: expected {SCHEMA}, got {doc.get('schema')!r}")
    kind = _field(doc, "kind")
    if kind not in HANDLERS:
        raise InputError(f"$.kind: unknown kind {kind!r}")
    if kind not in SUBCOMMANDS[subcommand]:
        raise InputError(f"$.kind: {kind!r} is not handled by '{subcommand}' "
                         f"(expects one of {', '.join(SUBCOMMANDS[subcommand])})")
    file_opts = doc.get("options", {})
    if not isinstance(file_opts, dict):
        raise InputError("$.options: expected an object")
    merged = {k: file_opts.get(k) for k in ("tol", "max_iter", "sigma")}
    merged.update({k: v for k, v in opts.items() if v is not None})

    result = {"schema": SCHEMA, "kind": kind,
              "input_sha256": hashlib.sha256(text.encode("utf-8")).hexdigest()}
    code = 0
    try:
        values, arrays, diag = HANDLERS[kind](doc, merged)
        result.update(status="ok", values=values, arrays=arrays, diagnostics=diag)
    except InputError:
        raise
    except UnbalancedMassError as exc:
        raise InputError(f"$: {exc}") from None
    except NonConvergenceError as exc:
        code = 1
        result.update(status="nonconvergence", diagnostic=str(exc))
    except (InfeasibleInputError, OtError) as exc:
        code = 1
        result.update(status="infeasible", diagnostic=str(exc))
    except ValueError as exc:
        raise InputError(f"$: {exc}") from None
    result["wall_clock_seconds"] = time.perf_counter() - start
    return code, result


def render(result: dict) -> str:
    return json.dumps(result, sort_keys=True, allow_nan=False) + "\n"


def _selftest(args) -> int:
    from .acceptance import AcceptanceConfig, run_all

    kw = {}
    if args.marginal_tol is not None:
        kw["marginal_tol"] = args.marginal_tol
    if args.seed is not None:
        kw["seed"] = args.seed
    results = run_all(AcceptanceConfig(**kw))
    failed = [r for r in results if not r[2]]
    print(f"{len(results) - len(failed)}/{len(results)} criteria passed")
    return 0 if not failed else 1


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="otecon", description="Discrete optimal transport solvers")
    sub = parser.add_subparsers(dest="command", required=True)
    for name, kinds in SUBCOMMANDS.items():
        sp = sub.add_parser(name, help=f"kinds: {', '.join(kinds)}")
        sp.add_argument("file")
        sp.add_argument("--tol", type=float)
        sp.add_argument("--max-iter", type=int, dest="max_iter")
        sp.add_argument("--sigma", type=float)
        sp.add_argument("--out")
    st = sub.add_parser("selftest", help="run the acceptance checks")
    st.add_argument("--marginal-tol", type=float, dest="marginal_tol")
    st.add_argument("--seed", type=int)
    return parser


def main(argv=None) -> int:
    logging.basicConfig(stream=sys.stderr, level=logging.WARNING, format="%(levelname)s %(message)s")
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0) and 2
    if args.command == "selftest":
        return _selftest(args)
    try:
        with open(args.file, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        print(f"otecon: cannot read {args.file}: {exc.strerror}", file=sys.stderr)
        return 2
    opts = {"tol": args.tol, "max_iter": args.max_iter, "sigma": args.sigma}
    try:
        code, result = run_document(args.command, text, opts)
    except InputError as exc:
        print(f"otecon: {args.file}: {exc}", file=sys.stderr)
        return 2
    if code:
        log.warning("%s: %s", result["status"], result.get("diagnostic", ""))
    text_out = render(result)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text_out)
    else:
        sys.stdout.write(text_out)
    return code


if __name__ == "__main__":
    sys.exit(main())
