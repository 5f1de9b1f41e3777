"""Independent equilibrium certification and small-instance reference solver.

The reference path solves the single convex program that couples every
scenario's generation, flow, and travel variables (with the entropy and
congestion terms exact) through a disciplined-convex-programming layer and a
conic solver, sharing no solver code with the decomposition path. Locational
prices are read off the duals of the two market-clearing constraint families,
rescaled by scenario probability.

`certify` replays each agent's own optimization at the candidate prices and
reports the money it could still gain (best-response regret), together with
market-clearing residuals and the worst Wardrop violation of the routing.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import cvxpy as cp
import numpy as np

from .errors import Infeasible, SizeGuardExceeded
from .network import CoupledSystem
from .scenarios import ScenarioSet
from .solution import PriceSet, ScenarioState, SystemState

_ATTEMPTS = (
    ("CLARABEL", dict(tol_gap_abs=1e-9, tol_gap_rel=1e-9, tol_feas=1e-9, max_iter=500)),
    ("CLARABEL", dict(tol_gap_abs=1e-8, tol_gap_rel=1e-8, tol_feas=1e-8, max_iter=500)),
    ("SCS", dict(eps=1e-8, max_iters=100000)),
)


def _solve_cvxpy(problem: cp.Problem) -> str:
    """Solve to optimality, falling back through solver settings.

    A later attempt overwrites the problem's values, so when everything comes
    back merely near-optimal the first such configuration is re-run to restore
    its (deterministic) solution before returning.
    """
    last = None
    first_inaccurate = None
    for name, opts in _ATTEMPTS:
        if name not in cp.installed_solvers():
            continue
        try:
            problem.solve(solver=name, **opts)
        except cp.SolverError as exc:
            last = exc
            continue
        if problem.status == cp.OPTIMAL:
            return problem.status
        if problem.status == cp.OPTIMAL_INACCURATE and first_inaccurate is None:
            first_inaccurate = (name, opts)
        if problem.status in (cp.INFEASIBLE, cp.INFEASIBLE_INACCURATE):
            raise Infeasible(f"reference solve infeasible ({problem.status})")
    if first_inaccurate is not None:
        name, opts = first_inaccurate
        problem.solve(solver=name, **opts)
        return problem.status
    raise RuntimeError(f"no conic solver produced a solution: status={problem.status!r}, {last!r}")


def _classes(net):
    origins, dests = net.origins(), net.destinations()
    ev = [(r, s, "ev") for r in origins for s in dests]
    cv = [(r, s, "cv") for (r, s), dmd in sorted(net.conventional_od.items()) if dmd > 0]
    return origins, dests, tuple(ev + cv)


def _bpr_integral_expr(net, v):
    t0 = np.array([lk.free_flow_time for lk in net.links])
    cap = np.array([lk.capacity for lk in net.links])
    al = np.array([lk.bpr_alpha for lk in net.links])
    be = np.array([lk.bpr_beta for lk in net.links])
    terms = [t0 @ v]
    for k in range(len(net.links)):
        if al[k] > 0:
            coef = t0[k] * al[k] / ((be[k] + 1.0) * cap[k] ** be[k])
            terms.append(coef * cp.power(v[k], be[k] + 1.0))
    return cp.sum(cp.hstack([cp.reshape(t, (), order="F") for t in terms])) if len(terms) > 1 else terms[0]


def scenario_variable_count(system: CoupledSystem) -> int:
    net, pw = system.transport, system.power
    origins, dests, classes = _classes(net)
    nS = len(pw.renewable_buses())
    nC = sum(1 for b in pw.buses if b.generator is not None)
    nG = len({*pw.renewable_buses(), *(b.id for b in pw.buses if b.generator)})
    return (nS + nC + len(dests) + nG + len(pw.buses) + len(pw.branches)
            + len(classes) * len(net.links) + len(origins) * len(dests))


@dataclass
class MonolithicResult:
    state: SystemState
    prices: PriceSet
    objective: float
    status: str


def monolithic_solve(system: CoupledSystem, scenarios: ScenarioSet, tol: float = 1e-8,
                     size_guard: int = 200, nonnegative_charging: bool = False) -> MonolithicResult:
    """Solve the coupled program directly; only intended for small instances."""
    nvars = scenario_variable_count(system)
    if nvars > size_guard:
        raise SizeGuardExceeded(f"{nvars} variables per scenario exceeds the guard ({size_guard})")
    net, pw = system.transport, system.power
    b1, b2 = net.utility.beta1, net.utility.beta2
    origins, dests, classes = _classes(net)
    n_or, n_ds, n_cls, n_lk = len(origins), len(dests), len(classes), len(net.links)
    sites = pw.renewable_buses()
    conv = [b.id for b in pw.buses if b.generator is not None]
    priced = [b.id for b in pw.buses if b.renewable_site is not None or b.generator is not None]
    bus_ids = [b.id for b in pw.buses]
    bus_pos = {i: k for k, i in enumerate(bus_ids)}
    ref = pw.reference_bus()
    coupling_bus = {s: system.coupling[s] for s in dests}
    beta0 = np.array([net.charging_destinations[s] for s in dests])
    e_mat = np.array([[net.charging_energy[(r, s)] for s in dests] for r in origins])
    Q = np.array([net.ev_origins[r] for r in origins])

    from .network import incidence
    A_inc = incidence(net).matrix
    node_pos = {n: k for k, n in enumerate(net.nodes)}

    u = cp.Variable(len(sites), nonneg=True, name="u") if sites else None
    objective_terms = []
    constraints = []
    if sites:
        objective_terms.append(sum(pw.bus(i).renewable_site.invest_quadratic * cp.square(u[k])
                                   + pw.bus(i).renewable_site.invest_linear * u[k]
                                   for k, i in enumerate(sites)))
        cap_cost = np.array([pw.bus(i).renewable_site.unit_capital_cost for i in sites])
        constraints.append(cap_cost @ u <= pw.budget)

    per_scen = {}
    clearing_gen = {}
    clearing_charge = {}
    for scen in scenarios:
        P = scen.probability
        gS = cp.Variable(len(sites), nonneg=True) if sites else None
        gC = cp.Variable(len(conv), nonneg=True) if conv else None
        p = cp.Variable(n_ds, nonneg=nonnegative_charging) if n_ds else None
        d = cp.Variable(len(priced), nonneg=True)
        theta = cp.Variable(len(bus_ids))
        f = cp.Variable(len(pw.branches)) if pw.branches else None
        x = cp.Variable((n_cls, n_lk), nonneg=True)
        q = cp.Variable((n_or, n_ds), nonneg=True)

        cost = 0
        if sites:
            for k, i in enumerate(sites):
                site = pw.bus(i).renewable_site
                cost = cost + site.operate_linear * gS[k]
                constraints.append(gS[k] <= scen.factor(i) * u[k])
        if conv:
            for k, i in enumerate(conv):
                gen = pw.bus(i).generator
                cost = cost + gen.cost_quadratic * cp.square(gC[k]) + gen.cost_linear * gC[k] + gen.cost_constant
                constraints += [gC[k] <= gen.upper, gC[k] >= gen.lower]
        v = cp.sum(x, axis=0)
        cost = cost + (b1 / b2) * _bpr_integral_expr(net, v)
        cost = cost + (1.0 / b2) * cp.sum(-cp.entr(q) - cp.multiply(q, 1.0 + beta0[None, :]))
        objective_terms.append(P * cost)

        for e, br in enumerate(pw.branches):
            constraints.append(f[e] == br.susceptance * (theta[bus_pos[br.from_bus]] - theta[bus_pos[br.to_bus]]))
            constraints += [f[e] <= br.limit, f[e] >= -br.limit]
        constraints.append(theta[bus_pos[ref]] == 0)
        d_pos = {i: k for k, i in enumerate(priced)}
        p_pos = {coupling_bus[s]: j for j, s in enumerate(dests)}
        for b in pw.buses:
            net_out = 0
            for e, br in enumerate(pw.branches):
                if br.from_bus == b.id:
                    net_out = net_out + f[e]
                if br.to_bus == b.id:
                    net_out = net_out - f[e]
            rhs = -b.base_load
            if b.id in d_pos:
                rhs = rhs + d[d_pos[b.id]]
            if b.id in p_pos:
                rhs = rhs - p[p_pos[b.id]]
            constraints.append(net_out == rhs)

        gen_rows = []
        for i in priced:
            supply = 0
            if i in sites:
                supply = supply + gS[sites.index(i)]
            if i in conv:
                supply = supply + gC[conv.index(i)]
            con = d[d_pos[i]] == supply
            constraints.append(con)
            gen_rows.append(con)
        clearing_gen[scen.id] = gen_rows

        charge_rows = []
        for j, s in enumerate(dests):
            con = e_mat[:, j] @ q[:, j] == p[j]
            constraints.append(con)
            charge_rows.append(con)
        clearing_charge[scen.id] = charge_rows

        for c_idx, (r, s, kind) in enumerate(classes):
            erow = np.zeros(len(net.nodes))
            erow[node_pos[r]] = 1.0
            erow[node_pos[s]] = -1.0
            demand = q[origins.index(r), dests.index(s)] if kind == "ev" else net.conventional_od[(r, s)]
            constraints.append(A_inc @ x[c_idx] == demand * erow)
        constraints.append(cp.sum(q, axis=1) == Q)
        per_scen[scen.id] = (gS, gC, p, d, theta, f, x, q)

    problem = cp.Problem(cp.Minimize(cp.sum(cp.hstack([cp.reshape(t, (), order="F")
                                                       for t in objective_terms]))), constraints)
    status = _solve_cvxpy(problem)

    states = {}
    rho = {}
    lam = {}
    for scen in scenarios:
        gS, gC, p, d, theta, f, x, q = per_scen[scen.id]
        P = scen.probability
        states[scen.id] = ScenarioState(
            scenario_id=scen.id,
            u={i: float(u.value[k]) for k, i in enumerate(sites)} if sites else {},
            g_renewable={i: float(gS.value[k]) for k, i in enumerate(sites)} if sites else {},
            g_conventional={i: float(gC.value[k]) for k, i in enumerate(conv)} if conv else {},
            p={coupling_bus[s]: float(p.value[j]) for j, s in enumerate(dests)},
            d={i: float(d.value[k]) for k, i in enumerate(priced)},
            theta={i: float(theta.value[k]) for k, i in enumerate(bus_ids)},
            flows={br.id: float(f.value[e]) for e, br in enumerate(pw.branches)} if pw.branches else {},
            link_flows={lk.id: float(val) for lk, val in zip(net.links, np.asarray(x.value).sum(axis=0))},
            link_ids=tuple(lk.id for lk in net.links),
            class_flows=np.asarray(x.value),
            class_ods=classes,
            od_flows=np.asarray(q.value),
            origins=origins,
            destinations=dests,
        )
        rho[scen.id] = {i: float(con.dual_value) / P
                        for i, con in zip(priced, clearing_gen[scen.id])}
        lam[scen.id] = {s: float(con.dual_value) / P
                        for s, con in zip(dests, clearing_charge[scen.id])}
    z = {i: float(u.value[k]) for k, i in enumerate(sites)} if sites else {}
    return MonolithicResult(SystemState(z=z, scenarios=states), PriceSet(rho, lam),
                            float(problem.value), status)


def system_objective(system: CoupledSystem, scenarios: ScenarioSet, state: SystemState) -> float:
    """Expected total system cost of a point, investment priced at the consensus z."""
    net, pw = system.transport, system.power
    b1, b2 = net.utility.beta1, net.utility.beta2
    dests = net.destinations()
    beta0 = np.array([net.charging_destinations[s] for s in dests])
    total = sum(pw.bus(i).renewable_site.invest_cost(z) for i, z in state.z.items())
    for scen in scenarios:
        st = state.scenarios[scen.id]
        val = sum(pw.bus(i).renewable_site.operate_cost(g) for i, g in st.g_renewable.items())
        val += sum(pw.bus(i).generator.cost(g) for i, g in st.g_conventional.items())
        from .traffic import link_time_integral
        val += (b1 / b2) * sum(link_time_integral(lk, st.link_flows[lk.id]) for lk in net.links)
        q = st.od_flows
        qlogq = np.where(q > 0, q * np.log(np.where(q > 0, q, 1.0)), 0.0)
        val += (1.0 / b2) * float((qlogq - q * (1.0 + beta0[None, :])).sum())
        total += scen.probability * val
    return total


def _investor_regret(system, scenarios, state, prices) -> float:
    pw = system.power
    sites = pw.renewable_buses()
    if not sites:
        return 0.0
    u = cp.Variable(len(sites), nonneg=True)
    cap_cost = np.array([pw.bus(i).renewable_site.unit_capital_cost for i in sites])
    cons = [cap_cost @ u <= pw.budget]
    profit = -sum(pw.bus(i).renewable_site.invest_quadratic * cp.square(u[k])
                  + pw.bus(i).renewable_site.invest_linear * u[k] for k, i in enumerate(sites))
    point_profit = -sum(pw.bus(i).renewable_site.invest_cost(state.z[i]) for i in sites)
    for scen in scenarios:
        g = cp.Variable(len(sites), nonneg=True)
        st = state.scenarios[scen.id]
        for k, i in enumerate(sites):
            site = pw.bus(i).renewable_site
            rho = prices.rho[scen.id][i]
            profit = profit + scen.probability * (rho * g[k] - site.operate_linear * g[k])
            cons.append(g[k] <= scen.factor(i) * u[k])
            point_profit += scen.probability * (rho * st.g_renewable[i]
                                                - site.operate_cost(st.g_renewable[i]))
    prob = cp.Problem(cp.Maximize(profit), cons)
    _solve_cvxpy(prob)
    return float(prob.value) - point_profit


def _generator_regret(system, scenarios, state, prices) -> float:
    pw = system.power
    total = 0.0
    for scen in scenarios:
        st = state.scenarios[scen.id]
        for b in pw.buses:
            if b.generator is None:
                continue
            gen = b.generator
            rho = prices.rho[scen.id][b.id]
            if gen.cost_quadratic > 0:
                g_star = (rho - gen.cost_linear) / (2.0 * gen.cost_quadratic)
            else:
                g_star = gen.upper if rho > gen.cost_linear else gen.lower
            g_star = min(max(g_star, gen.lower), gen.upper)
            best = rho * g_star - gen.cost(g_star)
            got = rho * st.g_conventional[b.id] - gen.cost(st.g_conventional[b.id])
            total += scen.probability * (best - got)
    return total


def _iso_regret(system, scenarios, state, prices, nonnegative_charging=False) -> float:
    pw = system.power
    net = system.transport
    dests = net.destinations()
    priced = [b.id for b in pw.buses if b.renewable_site is not None or b.generator is not None]
    bus_ids = [b.id for b in pw.buses]
    bus_pos = {i: k for k, i in enumerate(bus_ids)}
    big = 10.0 * (sum(b.base_load for b in pw.buses)
                  + sum(b.generator.upper for b in pw.buses if b.generator) + 1.0)
    total = 0.0
    for scen in scenarios:
        st = state.scenarios[scen.id]
        d = cp.Variable(len(priced), nonneg=True)
        p = cp.Variable(len(dests), nonneg=nonnegative_charging)
        theta = cp.Variable(len(bus_ids))
        f = cp.Variable(len(pw.branches)) if pw.branches else None
        cons = [theta[bus_pos[pw.reference_bus()]] == 0, d <= big, p <= big, p >= -big]
        for e, br in enumerate(pw.branches):
            cons.append(f[e] == br.susceptance * (theta[bus_pos[br.from_bus]] - theta[bus_pos[br.to_bus]]))
            cons += [f[e] <= br.limit, f[e] >= -br.limit]
        d_pos = {i: k for k, i in enumerate(priced)}
        p_pos = {system.coupling[s]: j for j, s in enumerate(dests)}
        for b in pw.buses:
            expr = 0
            for e, br in enumerate(pw.branches):
                if br.from_bus == b.id:
                    expr = expr + f[e]
                if br.to_bus == b.id:
                    expr = expr - f[e]
            rhs = -b.base_load
            if b.id in d_pos:
                rhs = rhs + d[d_pos[b.id]]
            if b.id in p_pos:
                rhs = rhs - p[p_pos[b.id]]
            cons.append(expr == rhs)
        rho = np.array([prices.rho[scen.id][i] for i in priced])
        lam = np.array([prices.lam[scen.id][s] for s in dests])
        prob = cp.Problem(cp.Minimize(rho @ d - lam @ p), cons)
        _solve_cvxpy(prob)
        point_cost = (sum(prices.rho[scen.id][i] * st.d[i] for i in priced)
                      - sum(prices.lam[scen.id][s] * st.p[system.coupling[s]] for s in dests))
        total += scen.probability * (point_cost - float(prob.value))
    return total


def _driver_objective_value(system, st: ScenarioState, lam_row: np.ndarray) -> float:
    net = system.transport
    b1, b2 = net.utility.beta1, net.utility.beta2
    dests = st.destinations
    beta0 = np.array([net.charging_destinations[s] for s in dests])
    e_mat = np.array([[net.charging_energy[(r, s)] for s in dests] for r in st.origins])
    from .traffic import link_time_integral
    val = (b1 / b2) * sum(link_time_integral(lk, st.link_flows[lk.id]) for lk in net.links)
    q = st.od_flows
    qlogq = np.where(q > 0, q * np.log(np.where(q > 0, q, 1.0)), 0.0)
    val += (1.0 / b2) * float((qlogq - q * (1.0 + beta0[None, :])).sum())
    val += float((e_mat * q * lam_row[None, :]).sum())
    return val


def _dijkstra(net, times: dict[int, float], origin: int) -> dict[int, float]:
    import heapq
    adjacency: dict[int, list] = {}
    for lk in net.links:
        adjacency.setdefault(lk.tail, []).append(lk)
    dist = {origin: 0.0}
    done = set()
    heap = [(0.0, origin)]
    while heap:
        d, u = heapq.heappop(heap)
        if u in done:
            continue
        done.add(u)
        for lk in adjacency.get(u, ()):
            nd = d + times[lk.id]
            if nd < dist.get(lk.head, math.inf):
                dist[lk.head] = nd
                heapq.heappush(heap, (nd, lk.head))
    return dist


def _driver_regret(system, scenarios, state, prices) -> float:
    """Upper bound on the drivers' collective regret at the given charging prices.

    The drivers' problem is convex with an entropy term, so the exact optimum
    of its partial linearization at the candidate point (shortest-path routing
    of a closed-form logit split, congestion and prices held at the point)
    yields a valid lower bound on the agents' optimal value; point value minus
    bound dominates the true regret and vanishes at an equilibrium. This
    avoids re-solving the routing program numerically.
    """
    net = system.transport
    b1, b2 = net.utility.beta1, net.utility.beta2
    dests = net.destinations()
    origins = net.origins()
    beta0 = np.array([net.charging_destinations[s] for s in dests])
    e_mat = np.array([[net.charging_energy[(r, s)] for s in dests] for r in origins])
    from .traffic import link_time, logit_split
    total = 0.0
    for scen in scenarios:
        st = state.scenarios[scen.id]
        lam_row = np.array([prices.lam[scen.id][s] for s in dests])
        times = {lk.id: link_time(lk, st.link_flows[lk.id]) for lk in net.links}
        dist = {r: _dijkstra(net, times, r) for r in set(origins) | {r for r, _ in net.conventional_od}}
        # linearized cost of the point itself
        point_lin = ((b1 / b2) * sum(times[lk.id] * st.link_flows[lk.id] for lk in net.links)
                     + float((e_mat * st.od_flows * lam_row[None, :]).sum()))
        point_ent = _entropy_term(st.od_flows, beta0) / b2
        # exact optimum of the linearized-congestion, exact-entropy subproblem
        best_lin = 0.0
        best_ent = 0.0
        for i, r in enumerate(origins):
            tau = np.array([dist[r][s] for s in dests])
            cost = b1 * tau + b2 * e_mat[i] * lam_row - beta0
            w = logit_split(cost, net.ev_origins[r])
            best_lin += (b1 / b2) * float(tau @ w) + float((e_mat[i] * lam_row) @ w)
            best_ent += _entropy_term(w[None, :], beta0) / b2
        for (r, s), dmd in net.conventional_od.items():
            if dmd > 0:
                best_lin += (b1 / b2) * dist[r][s] * dmd
        total += scen.probability * max(0.0, (point_lin + point_ent) - (best_lin + best_ent))
    return total


def _entropy_term(q: np.ndarray, beta0: np.ndarray) -> float:
    qlogq = np.where(q > 0, q * np.log(np.where(q > 0, q, 1.0)), 0.0)
    return float((qlogq - q * (1.0 + beta0[None, :])).sum())


def best_response_regret(agent: str, system: CoupledSystem, scenarios: ScenarioSet,
                         state: SystemState, prices: PriceSet, **kw) -> float:
    """Money the named agent could still gain by re-optimizing at the given prices."""
    fns = {"investor": _investor_regret, "generators": _generator_regret,
           "iso": _iso_regret, "drivers": _driver_regret}
    if agent not in fns:
        raise ValueError(f"unknown agent {agent!r}; expected one of {sorted(fns)}")
    return fns[agent](system, scenarios, state, prices, **kw)


def _wardrop_violation(system, state: SystemState) -> float:
    """Flow-weighted relative excess of class routings over shortest-path cost.

    For each scenario this compares the total class-weighted travel time
    sum_a tt_a x_a against routing every class demand on its current shortest
    path; the normalized excess vanishes exactly at a user equilibrium and is
    insensitive to the epsilon flows interior-point solutions spread over
    suboptimal paths.
    """
    net = system.transport
    from .traffic import link_time
    worst = 0.0
    for st in state.scenarios.values():
        times = {lk.id: link_time(lk, st.link_flows[lk.id]) for lk in net.links}
        tvec = np.array([times[i] for i in st.link_ids])
        origins = sorted({r for r, _, _ in st.class_ods})
        dist = {r: _dijkstra(net, times, r) for r in origins}
        actual = 0.0
        ideal = 0.0
        for c_idx, (r, s, kind) in enumerate(st.class_ods):
            demand = st.od_flow(r, s) if kind == "ev" else net.conventional_od[(r, s)]
            actual += float(tvec @ st.class_flows[c_idx])
            ideal += dist[r][s] * demand
        if ideal > 0:
            worst = max(worst, (actual - ideal) / ideal)
    return worst


@dataclass
class EquilibriumCertificate:
    investor_regret: float
    generator_regret: float
    iso_regret: float
    driver_regret: float
    clearing_residual_energy: float    # max |d - gS - gC|, MW
    clearing_residual_charging: float  # max |sum_r e q - p|, MW
    clearing_relative: float           # charging residual over max(1, |p|)
    wardrop_violation: float           # relative used-path time spread
    money_tol: float
    clearing_tol: float
    wardrop_tol: float
    verdict: bool

    def as_dict(self) -> dict:
        return {k: (bool(v) if k == "verdict" else float(v))
                for k, v in self.__dict__.items()}


def certify(system: CoupledSystem, scenarios: ScenarioSet, state: SystemState,
            prices: PriceSet, money_tol: Optional[float] = None,
            clearing_tol: float = 2e-3, wardrop_tol: float = 1e-2,
            nonnegative_charging: bool = False) -> EquilibriumCertificate:
    """Assemble regrets and residuals; the verdict holds iff all are within tolerance.

    money_tol defaults to 1e-3 x the point's total system cost, making the
    regret check scale-free.
    """
    for sid in (s.id for s in scenarios):
        if sid not in state.scenarios:
            raise ValueError(f"point is missing scenario {sid}")
    if money_tol is None:
        money_tol = 1e-3 * abs(system_objective(system, scenarios, state))
    inv = _investor_regret(system, scenarios, state, prices)
    gen = _generator_regret(system, scenarios, state, prices)
    iso = _iso_regret(system, scenarios, state, prices, nonnegative_charging)
    drv = _driver_regret(system, scenarios, state, prices)
    res_e = 0.0
    res_c = 0.0
    rel_c = 0.0
    for scen in scenarios:
        st = state.scenarios[scen.id]
        for i, d in st.d.items():
            gs = st.g_renewable.get(i, 0.0)
            gc = st.g_conventional.get(i, 0.0)
            res_e = max(res_e, abs(d - gs - gc))
        demand = st.charging_demand(system)
        for s, dem in demand.items():
            p = st.p[system.coupling[s]]
            res_c = max(res_c, abs(dem - p))
            rel_c = max(rel_c, abs(dem - p) / max(1.0, abs(p)))
    wv = _wardrop_violation(system, state)
    verdict = (max(inv, gen, iso, drv) <= money_tol
               and res_e <= max(1e-6, clearing_tol)
               and rel_c <= clearing_tol
               and wv <= wardrop_tol)
    return EquilibriumCertificate(
        investor_regret=inv, generator_regret=gen, iso_regret=iso, driver_regret=drv,
        clearing_residual_energy=res_e, clearing_residual_charging=res_c,
        clearing_relative=rel_c, wardrop_violation=wv,
        money_tol=money_tol, clearing_tol=clearing_tol, wardrop_tol=wardrop_tol,
        verdict=verdict)
