"""Exact discrete optimal transport as a bipartite min-cost flow.

Flow is pushed by successive shortest paths: Bellman-Ford seeds node
potentials, Dijkstra on reduced costs finds every later path. Optimal duals are
read off the final residual graph, so complementary slackness holds by
construction rather than by tolerance.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .core import (
    OtError,
    Potentials,
    ToleranceConfig,
    TransportPlan,
    as_surplus,
    as_weights,
    check_balanced,
    validate_problem,
)


@dataclass(frozen=True)
class OtSolution:
    plan: TransportPlan
    potentials: Potentials
    value: float
    slackness_report: list = field(default_factory=list)
    unmatched_rows: np.ndarray | None = None
    unmatched_cols: np.ndarray | None = None

    @property
    def dual_value(self) -> float:
        return self.potentials.value(self.plan.row_margins + _or0(self.unmatched_rows),
                                     self.plan.col_margins + _or0(self.unmatched_cols))


def _or0(a):
    return 0.0 if a is None else a


@dataclass(frozen=True)
class NetworkView:
    """Bipartite network with nodes X then Y and one arc per pair (x, y)."""

    n_rows: int
    n_cols: int

    @property
    def incidence(self) -> np.ndarray:
        n, m = self.n_rows, self.n_cols
        grad = np.zeros((n * m, n + m))
        arcs = np.arange(n * m)
        grad[arcs, arcs // m] = -1.0
        grad[arcs, n + arcs % m] = 1.0
        return grad

    def signed_quantities(self, p, q) -> np.ndarray:
        return np.concatenate([-as_weights(p), as_weights(q)])

    def signed_prices(self, u, v) -> np.ndarray:
        return np.concatenate([-np.asarray(u, dtype=float), np.asarray(v, dtype=float)])

    def arc_costs(self, phi) -> np.ndarray:
        return -as_surplus(phi).reshape(-1)


# --------------------------------------------------------------------------
# min-cost flow engine


def _bellman_ford(cost, arc, n_nodes):
    """Shortest distances from a virtual root joined to every node at cost 0."""
    dist = np.zeros(n_nodes)
    c = np.where(arc, cost, np.inf)
    for _ in range(n_nodes + 1):
        cand = np.min(dist[:, None] + c, axis=0)
        new = np.minimum(dist, cand)
        if np.array_equal(new, dist):
            break
        dist = new
    return dist


def _dijkstra(rcost, arc, s):
    V = len(rcost)
    dist = np.full(V, np.inf)
    prev = np.full(V, -1)
    done = np.zeros(V, dtype=bool)
    dist[s] = 0.0
    for _ in range(V):
        cand = np.where(done, np.inf, dist)
        i = int(np.argmin(cand))
        if not np.isfinite(cand[i]):
            break
        done[i] = True
        nd = dist[i] + rcost[i]
        better = arc[i] & ~done & (nd < dist)
        dist[better] = nd[better]
        prev[better] = i
    return dist, prev


def _transport_flow(p, q, phi, cfg: ToleranceConfig):
    """Max-surplus flow shipping min(sum p, sum q) from rows to columns.

    Returns the (n, m) flow matrix. Arc existence is decided against the mass
    quantum scaled by total mass.
    """
    n, m = phi.shape
    V = n + m + 2
    s, t = 0, n + m + 1
    X = np.arange(1, n + 1)
    Y = np.arange(n + 1, n + m + 1)
    total = min(p.sum(), q.sum())
    quantum = cfg.mass_quantum * max(p.sum(), q.sum(), 1.0)
    big = 2.0 * max(p.sum(), q.sum(), 1.0)

    res = np.zeros((V, V))
    cost = np.zeros((V, V))
    res[s, X] = p
    res[np.ix_(X, Y)] = big
    res[Y, t] = q
    cost[np.ix_(X, Y)] = -phi
    cost[np.ix_(Y, X)] = phi.T

    pot = _bellman_ford(cost, res > quantum, V)
    shipped = 0.0
    iterations = 0
    while total - shipped > quantum:
        iterations += 1
        if iterations > cfg.max_iterations:
            raise OtError("min-cost flow exceeded the iteration cap")
        arc = res > quantum
        rcost = np.maximum(cost + pot[:, None] - pot[None, :], 0.0)
        dist, prev = _dijkstra(rcost, arc, s)
        if not np.isfinite(dist[t]):
            break
        pot += np.minimum(dist, dist[t])
        path = [t]
        while path[-1] != s:
            path.append(int(prev[path[-1]]))
        path.reverse()
        a, b = np.array(path[:-1]), np.array(path[1:])
        delta = min(float(res[a, b].min()), total - shipped)
        res[a, b] -= delta
        res[b, a] += delta
        shipped += delta

    flow = res[np.ix_(Y, X)].T.copy()
    flow[flow <= quantum] = 0.0
    return flow


def _residual_duals(phi, flow, quantum):
    """Duals (u, v) from shortest distances in the final residual graph.

    Forward arcs x->y (cost -Phi) always exist; backward arcs y->x (cost +Phi)
    exist where flow is positive. Distances d give u = d_X, v = -d_Y with
    u_x + v_y >= Phi_xy everywhere and equality on the flow support.
    """
    n, m = phi.shape
    V = n + m
    cost = np.zeros((V, V))
    arc = np.zeros((V, V), dtype=bool)
    cost[:n, n:] = -phi
    arc[:n, n:] = True
    cost[n:, :n] = phi.T
    arc[n:, :n] = flow.T > quantum
    d = _bellman_ford(cost, arc, V)
    return d[:n], -d[n:]


def _slackness(plan_mass, u, v, phi, tol):
    gap = u[:, None] + v[None, :] - phi
    rows, cols = np.nonzero(plan_mass > tol)
    return [(int(x), int(y), float(plan_mass[x, y]), float(gap[x, y])) for x, y in zip(rows, cols)]


def _prepare(p, q, phi, cfg):
    report = validate_problem(p, q, phi, cfg)
    if not report.valid:
        raise ValueError("; ".join(report.issues))
    return as_weights(p), as_weights(q), as_surplus(phi)


def solve_exact(p, q, phi, cfg: ToleranceConfig | None = None) -> OtSolution:
    """Solve max sum(pi * Phi) over plans with row sums p and column sums q.

    Duals are normalized so that min(u) = 0.
    """
    cfg = cfg or ToleranceConfig()
    p, q, phi = _prepare(p, q, phi, cfg)
    check_balanced(p, q, cfg, hint="use solve_with_unmatched for unequal masses")
    n, m = phi.shape
    if n == 0 or m == 0:
        empty = TransportPlan.with_surplus(np.zeros((n, m)), phi)
        return OtSolution(empty, Potentials(np.zeros(n), np.zeros(m)), 0.0)

    flow = _transport_flow(p, q, phi, cfg)
    quantum = cfg.mass_quantum * max(p.sum(), 1.0)
    u, v = _residual_duals(phi, flow, quantum)
    shift = u.min()
    u, v = u - shift, v + shift

    plan = TransportPlan.with_surplus(flow, phi)
    pot = Potentials.from_surplus(u, v, phi)
    return OtSolution(plan, pot, plan.value, _slackness(flow, u, v, phi, cfg.feasibility_tol))


def solve_with_unmatched(p, q, phi, cfg: ToleranceConfig | None = None) -> OtSolution:
    """Optimal assignment when agents may stay unmatched (outside option 0).

    A null row carrying mass sum(q) and a null column carrying sum(p) are
    added with zero surplus; the balanced problem on the augmented network is
    then solved by the same flow engine. The returned duals are nonnegative.
    """
    cfg = cfg or ToleranceConfig()
    p, q, phi = _prepare(p, q, phi, cfg)
    n, m = phi.shape
    ext = np.zeros((n + 1, m + 1))
    ext[:n, :m] = phi
    pe = np.append(p, q.sum())
    qe = np.append(q, p.sum())

    flow = _transport_flow(pe, qe, ext, cfg)
    quantum = cfg.mass_quantum * max(pe.sum(), 1.0)
    ue, ve = _residual_duals(ext, flow, quantum)
    # fold the null-node prices into the real ones: u_x + v_0 >= 0 by feasibility
    u = ue[:n] + ve[m]
    v = ve[:m] + ue[n]
    u[np.abs(u) < 1e-15] = 0.0
    v[np.abs(v) < 1e-15] = 0.0
    u = np.maximum(u, 0.0)
    v = np.maximum(v, 0.0)

    matched = flow[:n, :m]
    plan = TransportPlan.with_surplus(matched, phi)
    pot = Potentials.from_surplus(u, v, phi)
    return OtSolution(plan, pot, plan.value, _slackness(matched, u, v, phi, cfg.feasibility_tol),
                      unmatched_rows=p - matched.sum(axis=1),
                      unmatched_cols=q - matched.sum(axis=0))


def eval_cost_C(q_signed, c, cfg: ToleranceConfig | None = None) -> float:
    """Min-cost-flow value C(q~) for signed quantities (-p, q) and arc costs c.

    Returns ``inf`` when the quantities do not sum to zero or give a row a
    positive (or a column a negative) entry, since no nonnegative flow exists.
    ``c`` is either an (n, m) matrix or its row-major flattening, in which case
    the split n + m = len(q~) must be recoverable; pass the matrix when in doubt.
    """
    cfg = cfg or ToleranceConfig()
    qt = np.asarray(q_signed, dtype=float)
    c = np.asarray(c, dtype=float)
    if c.ndim == 1:
        c = _unflatten_costs(c, len(qt))
    n, m = c.shape
    if len(qt) != n + m:
        raise ValueError("signed quantity length must equal |X| + |Y|")
    scale = max(float(np.abs(qt).sum()), 1.0)
    if abs(qt.sum()) > cfg.feasibility_tol * scale:
        return float("inf")
    p, q = -qt[:n], qt[n:]
    if np.any(p < -cfg.feasibility_tol * scale) or np.any(q < -cfg.feasibility_tol * scale):
        return float("inf")
    p, q = np.maximum(p, 0.0), np.maximum(q, 0.0)
    if p.sum() == 0.0:
        return 0.0
    return -solve_exact(p, q, -c, cfg).value


def _unflatten_costs(c, n_nodes):
    for n in range(1, n_nodes):
        m = n_nodes - n
        if n * m == len(c):
            return c.reshape(n, m)
    raise ValueError("cannot infer the bipartite split from flat costs")


def cstar_regularized(v_signed, phi, sigma: float) -> float:
    """Indirect profit sigma * sum exp((c - grad v~) / sigma) with c = -Phi."""
    phi = as_surplus(phi)
    n, m = phi.shape
    vt = np.asarray(v_signed, dtype=float)
    grad_v = vt[None, n:] - vt[:n, None]  # (grad v~)_xy = v~_y - v~_x
    return float(sigma * np.exp((-phi - grad_v) / sigma).sum())


def check_submodular_Cstar(v1, v2, phi, sigma: float, tol: float = 1e-10) -> bool:
    """Lattice inequality C*(v1 ^ v2) + C*(v1 v v2) <= C*(v1) + C*(v2)."""
    if not sigma > 0:
        raise ValueError("sigma must be positive")
    v1 = np.asarray(v1, dtype=float)
    v2 = np.asarray(v2, dtype=float)
    lo, hi = np.minimum(v1, v2), np.maximum(v1, v2)
    lhs = cstar_regularized(lo, phi, sigma) + cstar_regularized(hi, phi, sigma)
    rhs = cstar_regularized(v1, phi, sigma) + cstar_regularized(v2, phi, sigma)
    return bool(lhs <= rhs + tol * max(1.0, abs(rhs)))
