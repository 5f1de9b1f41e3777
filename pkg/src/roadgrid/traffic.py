"""Combined destination-choice and route-choice (CDA) solver.

Solves, per scenario, the convex program over nonnegative class link flows
x and destination flows q

    min  w_cong * sum_a int_0^{v_a} tt_a(u) du
       + w_ent  * sum_{rs} q_rs (ln q_rs - 1 - beta0_s)
       + charge(q)
    s.t. v = sum of class flows, flow conservation per class,
         sum_s q_rs = Q_r,

where tt_a is the BPR volume-delay function and charge(q) is either a fixed
per-destination charging price term (plain CDA) or the linear-plus-quadratic
coordination penalty around a charging supply target (the form used inside
the scenario decomposition loop).

Algorithm: Evans-style partial linearization. Each iteration linearizes the
congestion integral and the penalty but keeps the entropy term exact, so the
direction subproblem splits into a closed-form logit share per origin plus an
all-or-nothing assignment along current shortest paths; a golden-section line
search on the exact objective picks the step. Entropy keeps iterates strictly
interior, and pure linearization of q ln q (which blows up at the boundary)
is never needed.
"""

from __future__ import annotations

import heapq
import math
from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import UnreachableOD, ValidationError
from .network import RoadLink, TransportNetwork

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
LINE_SEARCH_MAX = 48
LINE_SEARCH_WIDTH = 1e-10


def link_time(link: RoadLink, v: float) -> float:
    """BPR travel time t0 * (1 + a (v/c)^b); strictly increasing for a > 0."""
    if v < 0:
        raise ValueError("negative flow")
    return link.free_flow_time * (1.0 + link.bpr_alpha * (v / link.capacity) ** link.bpr_beta)


def link_time_integral(link: RoadLink, v: float) -> float:
    """Closed-form antiderivative of the BPR time, evaluated at v."""
    if v < 0:
        raise ValueError("negative flow")
    b = link.bpr_beta
    return link.free_flow_time * (v + link.bpr_alpha * v * (v / link.capacity) ** b / (b + 1.0))


def logit_split(costs, total):
    """Multinomial logit shares total * softmax(-costs), max-shifted for overflow safety."""
    if isinstance(costs, Mapping):
        keys = list(costs)
        shares = logit_split(np.array([costs[k] for k in keys], dtype=float), total)
        return {k: float(w) for k, w in zip(keys, shares)}
    c = np.asarray(costs, dtype=float)
    if c.size == 0:
        raise ValueError("empty destination set")
    if total < 0:
        raise ValueError("negative total demand")
    w = np.exp(c.min() - c)  # shift so the best alternative has exponent 0
    return total * (w / w.sum())


@dataclass(frozen=True)
class PenaltyTerms:
    """Coordination data for the in-loop subproblem: price estimates, supply targets, weight."""

    lambda_hat: np.ndarray  # per destination, $/MWh
    supply_target: np.ndarray  # per destination, MW
    alpha: float


@dataclass(frozen=True)
class TrafficProblem:
    network: TransportNetwork
    fixed_prices: Optional[np.ndarray] = None  # per destination, $/MWh
    penalty: Optional[PenaltyTerms] = None

    def __post_init__(self):
        if (self.fixed_prices is None) == (self.penalty is None):
            raise ValidationError("exactly one of fixed-price mode and penalty mode must be active")
        if self.penalty is not None and self.penalty.alpha <= 0:
            raise ValidationError("penalty weight must be > 0")


@dataclass
class TrafficSolution:
    problem: TrafficProblem
    origins: tuple[int, ...]
    destinations: tuple[int, ...]
    link_ids: tuple[int, ...]
    link_flows: np.ndarray          # v, per link
    class_flows: np.ndarray         # (n_classes, n_links); EV classes first
    class_ods: tuple[tuple[int, int, str], ...]  # (r, s, "ev"|"cv") per class row
    od_flows: np.ndarray            # q, (n_origins, n_destinations)
    od_travel_times: np.ndarray     # hours, (n_origins, n_destinations)
    objective: float
    iterations: int
    relative_gap: float
    converged: bool

    def od_flow(self, r: int, s: int) -> float:
        return float(self.od_flows[self.origins.index(r), self.destinations.index(s)])

    def od_time(self, r: int, s: int) -> float:
        return float(self.od_travel_times[self.origins.index(r), self.destinations.index(s)])

    def charging_demand(self) -> np.ndarray:
        """MW drawn at each destination: sum_r e_rs q_rs."""
        return _charging_demand(self.problem.network, self.od_flows)

    def class_flow(self, r: int, s: int, kind: str = "ev") -> np.ndarray:
        return self.class_flows[self.class_ods.index((r, s, kind))]


class _Graph:
    """Static routing view of the network: arrays + adjacency sorted by link id."""

    def __init__(self, net: TransportNetwork):
        self.net = net
        self.nodes = tuple(net.nodes)
        self.nidx = net.node_index()
        self.links = net.links
        self.t0 = np.array([lk.free_flow_time for lk in net.links])
        self.cap = np.array([lk.capacity for lk in net.links])
        self.alpha = np.array([lk.bpr_alpha for lk in net.links])
        self.beta = np.array([lk.bpr_beta for lk in net.links])
        self.out = [[] for _ in self.nodes]
        for k, lk in enumerate(net.links):
            self.out[self.nidx[lk.tail]].append((lk.id, k, self.nidx[lk.head]))
        for lst in self.out:
            lst.sort()
        self.tail_idx = np.array([self.nidx[lk.tail] for lk in net.links], dtype=int)
        self.head_idx = np.array([self.nidx[lk.head] for lk in net.links], dtype=int)
        self.incidence_t = np.zeros((len(net.links), len(self.nodes)))
        for k in range(len(net.links)):
            self.incidence_t[k, self.tail_idx[k]] += 1.0
            self.incidence_t[k, self.head_idx[k]] -= 1.0

    def times(self, v: np.ndarray) -> np.ndarray:
        return self.t0 * (1.0 + self.alpha * (v / self.cap) ** self.beta)

    def integral(self, v: np.ndarray) -> np.ndarray:
        return self.t0 * (v + self.alpha * v * (v / self.cap) ** self.beta / (self.beta + 1.0))

    def dijkstra(self, origin: int, times: np.ndarray):
        """Single-source shortest paths; ties broken toward the smaller link id."""
        n = len(self.nodes)
        dist = np.full(n, np.inf)
        pred = np.full(n, -1, dtype=int)  # incoming link row index
        o = self.nidx[origin]
        dist[o] = 0.0
        done = np.zeros(n, dtype=bool)
        heap = [(0.0, o)]
        while heap:
            d, u = heapq.heappop(heap)
            if done[u]:
                continue
            done[u] = True
            for link_id, k, w in self.out[u]:
                nd = d + times[k]
                if nd < dist[w]:
                    dist[w] = nd
                    pred[w] = k
                    heapq.heappush(heap, (nd, w))
                elif nd == dist[w] and not done[w] and pred[w] >= 0 and link_id < self.links[pred[w]].id:
                    pred[w] = k
        return dist, pred

    def walk(self, pred: np.ndarray, origin: int, dest: int) -> list[int]:
        """Link rows of the shortest path origin -> dest from a predecessor array."""
        path = []
        u = self.nidx[dest]
        o = self.nidx[origin]
        while u != o:
            k = pred[u]
            if k < 0:
                raise UnreachableOD(origin, dest)
            path.append(k)
            u = self.nidx[self.links[k].tail]
        path.reverse()
        return path


def shortest_times(net: TransportNetwork, link_times: Mapping[int, float]):
    """Exact shortest travel times (and one representative path of link ids) per EV od pair."""
    g = _Graph(net)
    times = np.empty(len(net.links))
    for k, lk in enumerate(net.links):
        t = link_times[lk.id]
        if t <= 0:
            raise ValidationError(f"link {lk.id}: nonpositive travel time")
        times[k] = t
    tt: dict[tuple[int, int], float] = {}
    paths: dict[tuple[int, int], tuple[int, ...]] = {}
    for r in net.origins():
        dist, pred = g.dijkstra(r, times)
        for s in net.destinations():
            d = dist[g.nidx[s]]
            if not np.isfinite(d):
                raise UnreachableOD(r, s)
            tt[(r, s)] = float(d)
            paths[(r, s)] = tuple(net.links[k].id for k in g.walk(pred, r, s))
    return tt, paths


def _charging_demand(net: TransportNetwork, q: np.ndarray) -> np.ndarray:
    e = _energy_matrix(net)
    return (e * q).sum(axis=0)


def _energy_matrix(net: TransportNetwork) -> np.ndarray:
    origins, dests = net.origins(), net.destinations()
    e = np.empty((len(origins), len(dests)))
    for i, r in enumerate(origins):
        for j, s in enumerate(dests):
            e[i, j] = net.charging_energy[(r, s)]
    return e


class _Objective:
    """Exact objective and linearization pieces in the requested unit system."""

    def __init__(self, problem: TrafficProblem, units: str):
        net = problem.network
        b1, b2 = net.utility.beta1, net.utility.beta2
        if units == "money":
            self.w_cong, self.w_ent, self.w_chg = b1 / b2, 1.0 / b2, 1.0
        elif units == "time":
            if problem.penalty is not None:
                raise ValidationError("penalty mode is defined in money units only")
            self.w_cong, self.w_ent, self.w_chg = 1.0, 1.0 / b1, b2 / b1
        else:
            raise ValueError(f"unknown unit system {units!r}")
        self.beta0 = np.array([net.charging_destinations[s] for s in net.destinations()])
        self.e = _energy_matrix(net)
        self.problem = problem
        if problem.penalty is not None:
            self.lam = np.asarray(problem.penalty.lambda_hat, dtype=float)
            self.target = np.asarray(problem.penalty.supply_target, dtype=float)
            self.pen_alpha = problem.penalty.alpha
        else:
            self.lam = np.asarray(problem.fixed_prices, dtype=float)
            self.target = np.zeros_like(self.lam)
            self.pen_alpha = 0.0

    def entropy(self, q: np.ndarray) -> float:
        qlogq = np.where(q > 0, q * np.log(np.where(q > 0, q, 1.0)), 0.0)
        return float((qlogq - q * (1.0 + self.beta0)).sum())

    def charge(self, q: np.ndarray) -> float:
        resid = (self.e * q).sum(axis=0) - self.target
        return float((self.lam * resid).sum() + 0.5 * self.pen_alpha * (resid ** 2).sum())

    def value(self, graph: _Graph, v: np.ndarray, q: np.ndarray) -> float:
        return (self.w_cong * graph.integral(v).sum()
                + self.w_ent * self.entropy(q)
                + self.w_chg * self.charge(q))

    def effective_price(self, q: np.ndarray) -> np.ndarray:
        """Gradient of the charging term w.r.t. destination supply: lambda + alpha * residual."""
        resid = (self.e * q).sum(axis=0) - self.target
        return self.lam + self.pen_alpha * resid

    def charge_gradient_q(self, q: np.ndarray) -> np.ndarray:
        return self.w_chg * self.e * self.effective_price(q)[None, :]


def solve(problem: TrafficProblem, tol: float = 1e-6, max_iter: int = 2000,
          units: str = "money", start: Optional[tuple[np.ndarray, np.ndarray]] = None,
          trace: Optional[list] = None) -> TrafficSolution:
    """Run partial linearization until the relative optimality gap falls below tol.

    Hitting max_iter returns the best iterate tagged non-converged rather than
    raising, so coordination loops can keep going with the partial answer.
    `trace`, if given, receives the exact objective after every accepted step.
    """
    if tol <= 0:
        raise ValueError("tol must be > 0")
    net = problem.network
    g = _Graph(net)
    obj = _Objective(problem, units)
    origins, dests = net.origins(), net.destinations()
    b1, b2 = net.utility.beta1, net.utility.beta2
    q_total = np.array([net.ev_origins[r] for r in origins])

    ev_classes = [(r, s, "ev") for r in origins for s in dests]
    cv_classes = [(r, s, "cv") for (r, s), d in sorted(net.conventional_od.items()) if d > 0]
    cv_demand = np.array([net.conventional_od[(r, s)] for r, s, _ in cv_classes])
    classes = tuple(ev_classes + cv_classes)
    n_ev, n_cls, n_links = len(ev_classes), len(classes), len(net.links)

    def assign(w: np.ndarray, preds: dict[int, np.ndarray]) -> np.ndarray:
        y = np.zeros((n_cls, n_links))
        for i, r in enumerate(origins):
            pred = preds[r]
            for j, s in enumerate(dests):
                for k in g.walk(pred, r, s):
                    y[i * len(dests) + j, k] += w[i, j]
        for row, (r, s, _) in enumerate(cv_classes):
            for k in g.walk(preds[r], r, s):
                y[n_ev + row, k] += cv_demand[row]
        return y

    def direction(v: np.ndarray, q: np.ndarray):
        times = g.times(v)
        preds, dist = {}, {}
        for r in sorted(set(origins) | {r for r, _, _ in cv_classes}):
            d, p = g.dijkstra(r, times)
            preds[r], dist[r] = p, d
        tau = np.array([[dist[r][g.nidx[s]] for s in dests] for r in origins])
        if not np.all(np.isfinite(tau)):
            i, j = map(int, np.argwhere(~np.isfinite(tau))[0])
            raise UnreachableOD(origins[i], dests[j])
        for row, (r, s, _) in enumerate(cv_classes):
            if not np.isfinite(dist[r][g.nidx[s]]):
                raise UnreachableOD(r, s)
        util = obj.beta0[None, :] - b1 * tau - b2 * obj.e * obj.effective_price(q)[None, :]
        shifted = util - util.max(axis=1, keepdims=True)
        w = np.exp(shifted)
        w = q_total[:, None] * (w / w.sum(axis=1, keepdims=True))
        y = assign(w, preds)
        return y, w, times, preds, dist

    n_nodes = len(g.nodes)
    cls_origin_node = np.array([g.nidx[r] for r, _, _ in classes], dtype=int)
    cls_dest_node = np.array([g.nidx[s] for _, s, _ in classes], dtype=int)

    def repair(x: np.ndarray, q: np.ndarray, preds, dist) -> None:
        """Restore the conservation equalities exactly after an extrapolation.

        Destination-choice rows are renormalized to their totals; classes whose
        node imbalance exceeds rounding scale get it pushed back toward the
        origin along the current shortest-path tree.
        """
        q *= (q_total / q.sum(axis=1))[:, None]
        demand = np.concatenate([q.reshape(-1), cv_demand]) if cv_demand.size else q.reshape(-1)
        res_all = x @ g.incidence_t  # (n_classes, n_nodes)
        rows = np.arange(n_cls)
        res_all[rows, cls_origin_node] -= demand
        res_all[rows, cls_dest_node] += demand
        bad = np.abs(res_all).max(axis=1) > 1e-12 * np.maximum(demand, 1.0)
        for c_idx in np.flatnonzero(bad):
            r = classes[c_idx][0]
            res = res_all[c_idx]
            flow = x[c_idx]
            pred = preds[r]
            o = g.nidx[r]
            for n in np.argsort(-dist[r]):
                if n == o or res[n] == 0.0 or not np.isfinite(dist[r][n]):
                    continue
                k = pred[n]
                if k < 0:
                    continue
                flow[k] += res[n]
                res[g.tail_idx[k]] += res[n]
                res[n] = 0.0
            np.maximum(flow, 0.0, out=flow)

    # cold start: logit split at free-flow times, all-or-nothing assignment
    if start is None:
        y0, w0, _, _, _ = direction(np.zeros(n_links), np.full((len(origins), len(dests)), 1e-30))
        x, q = y0, w0
    else:
        x, q = np.array(start[0], dtype=float), np.array(start[1], dtype=float)
        if x.shape != (n_cls, n_links) or q.shape != (len(origins), len(dests)):
            raise ValidationError("warm start has wrong shape")
    v = x.sum(axis=0)

    def line_search(phi, lo, hi, f_at_lo, max_rounds=LINE_SEARCH_MAX, width=LINE_SEARCH_WIDTH):
        """Golden section on [lo, hi]; returns (argmin, value), never above f_at_lo."""
        a, bpt = lo + (1 - GOLDEN) * (hi - lo), lo + GOLDEN * (hi - lo)
        fa, fb = phi(a), phi(bpt)
        for _ in range(max_rounds):
            if hi - lo < width:
                break
            if fa < fb:
                hi, bpt, fb = bpt, a, fa
                a = lo + (1 - GOLDEN) * (hi - lo)
                fa = phi(a)
            else:
                lo, a, fa = a, bpt, fb
                bpt = lo + GOLDEN * (hi - lo)
                fb = phi(bpt)
        gamma, val = (a, fa) if fa < fb else (bpt, fb)
        f_hi = phi(hi)
        if f_hi < val:
            gamma, val = hi, f_hi
        if val >= f_at_lo:
            return lo, f_at_lo
        return gamma, val

    best_lb = -np.inf
    f = obj.value(g, v, q)
    rel_gap = np.inf
    it = 0
    converged = False
    x_anchor = q_anchor = None  # iterate from the previous round, for extrapolation
    drift = 0.0  # running bound on conservation roundoff amplified by extrapolations
    for it in range(1, max_iter + 1):
        y, w, times, preds, dist = direction(v, q)
        vy = y.sum(axis=0)
        dq = w - q
        lin = (obj.w_cong * float(times @ (vy - v))
               + float((obj.charge_gradient_q(q) * dq).sum())
               + obj.w_ent * (obj.entropy(w) - obj.entropy(q)))
        best_lb = max(best_lb, f + lin)
        rel_gap = (f - best_lb) / max(abs(f), 1e-10)
        if rel_gap <= tol:
            converged = True
            break

        x_prev, q_prev = x.copy(), q.copy()
        dv = vy - v
        gamma, f_new = line_search(
            lambda gm: obj.value(g, v + gm * dv, q + gm * dq), 0.0, 1.0, f)
        if gamma == 0.0:  # no descent along the subproblem direction: at optimum
            converged = rel_gap <= max(tol, 1e-12)
            break
        x += gamma * (y - x)
        q += gamma * dq
        f = f_new

        # parallel-tangent extrapolation through the pre-step iterate of the
        # previous round; capped so all flows stay feasible (q strictly so)
        if x_anchor is not None:
            ex = x - x_anchor
            eq = q - q_anchor
            eta_max = 3.0
            neg = ex < 0
            if np.any(neg):
                eta_max = min(eta_max, float(np.min(x[neg] / -ex[neg])) * 0.999)
            neg = eq < 0
            if np.any(neg):
                eta_max = min(eta_max, float(np.min(0.999 * q[neg] / -eq[neg])))
            if eta_max > 1e-3:
                veq = x_anchor.sum(axis=0)
                dve = x.sum(axis=0) - veq
                eta, f_ext = line_search(
                    lambda et: obj.value(g, veq + (1 + et) * dve,
                                         q_anchor + (1 + et) * eq),
                    0.0, eta_max, f, max_rounds=24, width=1e-6)
                if eta > 0.0:
                    x = x_anchor + (1 + eta) * ex
                    np.maximum(x, 0.0, out=x)
                    q = q_anchor + (1 + eta) * eq
                    drift = (2 + eta) * (drift + 1e-16)
                    if drift > 1e-13:
                        repair(x, q, preds, dist)
                        drift = 0.0
        x_anchor, q_anchor = x_prev, q_prev
        v = x.sum(axis=0)
        f = obj.value(g, v, q)
        if trace is not None:
            trace.append(f)

    v = x.sum(axis=0)
    final_times = g.times(v)
    tt = np.empty((len(origins), len(dests)))
    for i, r in enumerate(origins):
        dist, _ = g.dijkstra(r, final_times)
        tt[i] = [dist[g.nidx[s]] for s in dests]
    return TrafficSolution(
        problem=problem, origins=origins, destinations=dests,
        link_ids=tuple(lk.id for lk in net.links), link_flows=v,
        class_flows=x, class_ods=classes, od_flows=q, od_travel_times=tt,
        objective=f, iterations=it, relative_gap=float(rel_gap), converged=converged)


def od_travel_times(solution: TrafficSolution) -> dict[tuple[int, int], float]:
    """Equilibrium od travel times: shortest-path times under the final link flows."""
    return {(r, s): solution.od_time(r, s)
            for r in solution.origins for s in solution.destinations}


def decompose_paths(solution: TrafficSolution, r: int, s: int, kind: str = "ev",
                    drop: float = 1e-9):
    """Split one class flow into simple paths (list of (link-id tuple, flow)).

    Follows positive-flow arcs breadth-first, peeling off bottleneck flow until
    less than `drop` of the class total remains.
    """
    net = solution.problem.network
    g = _Graph(net)
    flow = solution.class_flows[solution.class_ods.index((r, s, kind))].copy()
    target_total = solution.od_flow(r, s) if kind == "ev" else net.conventional_od[(r, s)]
    paths = []
    remaining = target_total
    while remaining > drop * max(target_total, 1.0):
        # BFS over arcs carrying positive flow, deterministic by link id
        prev = {net.node_index()[r]: None}
        frontier = [net.node_index()[r]]
        sidx = net.node_index()[s]
        while frontier and sidx not in prev:
            nxt = []
            for u in frontier:
                for link_id, k, wnode in g.out[u]:
                    if flow[k] > drop and wnode not in prev:
                        prev[wnode] = k
                        nxt.append(wnode)
            frontier = nxt
        if sidx not in prev:
            break
        links = []
        u = sidx
        while prev[u] is not None:
            k = prev[u]
            links.append(k)
            u = net.node_index()[net.links[k].tail]
        links.reverse()
        bottleneck = min(flow[k] for k in links)
        amount = min(bottleneck, remaining)
        for k in links:
            flow[k] -= amount
        paths.append((tuple(net.links[k].id for k in links), float(amount)))
        remaining -= amount
    return paths
