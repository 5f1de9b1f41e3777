"""Scenario/system decomposition loop.

Alternates, until the consensus and market-clearing residuals fall below the
gap tolerance:

  Step 1  per scenario: power-side QP (investment, generation, DC flow,
          clearing) against the road side's last charging demand,
  Step 2  per scenario: road-side CDA against the power side's fresh charging
          supply, then the analytic consensus update
          z = sum_xi P(xi) u_xi,
  Step 3  dual ascent at step size alpha for both the investment duals gamma
          and the charging-price duals lambda.

The probability-weighted mean of gamma is zero after every consensus update,
which is what makes the closed-form z-update exact. Reported charging prices
are the lambda duals; electricity prices come from the scenario QPs.
"""

from __future__ import annotations

import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import dispatch as _dispatch
from . import traffic as _traffic
from .errors import Infeasible, NonConverged
from .network import CoupledSystem
from .scenarios import ScenarioSet
from .solution import PriceSet, ScenarioState, SystemState


@dataclass(frozen=True)
class AdmmConfig:
    alpha: float = 1.0
    eps: float = 1e-3
    max_iter: int = 500
    qp_tol: float = 1e-9
    traffic_tol: float = 1e-6
    traffic_max_iter: int = 3000
    parallelism: int = 1
    nonnegative_charging: bool = False
    polish: bool = False
    adaptive_alpha: bool = False
    init_seed: Optional[int] = None
    warm_start: bool = True

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("alpha must be > 0")
        if self.eps <= 0:
            raise ValueError("eps must be > 0")


@dataclass
class TraceRow:
    iteration: int
    gap1: float
    gap2: float
    gap: float
    expected_objective: float
    wall_ms: float


@dataclass
class AdmmState:
    sites: tuple[int, ...]             # renewable buses
    destinations: tuple[int, ...]      # charging destinations (road nodes)
    charging_buses: tuple[int, ...]    # coupled power buses, aligned with destinations
    z: np.ndarray                      # consensus investment per site
    gamma: np.ndarray                  # (n_scen, n_sites)
    lam: np.ndarray                    # (n_scen, n_destinations), $/MWh
    dispatch: dict[str, _dispatch.DispatchSolution] = field(default_factory=dict)
    traffic: dict[str, _traffic.TrafficSolution] = field(default_factory=dict)
    q_init: Optional[np.ndarray] = None  # cold-start destination shares
    iteration: int = 0
    gap1: float = np.inf
    gap2: float = np.inf
    gap: float = np.inf
    alpha: float = 1.0


@dataclass
class EquilibriumResult:
    state: SystemState
    prices: PriceSet
    expected_rho: dict[int, float]
    expected_lambda: dict[int, float]
    investment: dict[int, float]
    expected_objective: float
    travel_time_hours: float       # expected total vehicle-hours per hour
    energy_cost_dollars: float     # investment + expected generation cost
    gap: float
    gap1: float
    gap2: float
    iterations: int
    converged: bool
    trace: list[TraceRow]


def _map_scenarios(fn, scenario_list, parallelism):
    if parallelism > 1 and len(scenario_list) > 1:
        with ThreadPoolExecutor(max_workers=parallelism) as pool:
            return list(pool.map(fn, scenario_list))
    return [fn(s) for s in scenario_list]


def _cold_start_q(system: CoupledSystem, seed: Optional[int]) -> np.ndarray:
    """Logit split at free-flow travel times with zero prices (optionally perturbed)."""
    net = system.transport
    free_flow = {lk.id: lk.free_flow_time for lk in net.links}
    tt, _ = _traffic.shortest_times(net, free_flow)
    origins, dests = net.origins(), net.destinations()
    b1 = net.utility.beta1
    rng = np.random.Generator(np.random.PCG64(seed)) if seed is not None else None
    q = np.empty((len(origins), len(dests)))
    for i, r in enumerate(origins):
        util = np.array([net.charging_destinations[s] - b1 * tt[(r, s)] for s in dests])
        if rng is not None:
            util = util + rng.normal(0.0, 1.0, size=util.size)
        q[i] = _traffic.logit_split(-util, net.ev_origins[r])
    return q


def _charging_demand(system: CoupledSystem, q: np.ndarray) -> np.ndarray:
    return _traffic._charging_demand(system.transport, q)


def init_state(system: CoupledSystem, scenarios: ScenarioSet, config: AdmmConfig) -> AdmmState:
    sites = system.power.renewable_buses()
    dests = system.transport.destinations()
    charging_buses = system.charging_buses()
    n = len(scenarios)
    state = AdmmState(
        sites=sites, destinations=dests, charging_buses=charging_buses,
        z=np.zeros(len(sites)),
        gamma=np.zeros((n, len(sites))),
        lam=np.zeros((n, len(dests))),
        alpha=config.alpha,
    )
    state.q_init = _cold_start_q(system, config.init_seed)
    if config.init_seed is not None:
        rng = np.random.Generator(np.random.PCG64(config.init_seed + 1))
        state.lam += rng.uniform(0.0, 10.0, size=state.lam.shape)
    return state


def step1(state: AdmmState, system: CoupledSystem, scenarios: ScenarioSet,
          config: AdmmConfig) -> None:
    """Solve every scenario's power QP against the latest charging demand."""
    dest_index = {s: j for j, s in enumerate(state.destinations)}

    def one(item):
        k, scen = item
        prev_traffic = state.traffic.get(scen.id)
        q = prev_traffic.od_flows if prev_traffic is not None else state.q_init
        demand = _charging_demand(system, q)
        problem = _dispatch.DispatchProblem(
            power=system.power, scenario=scen,
            charging_buses=state.charging_buses,
            lambda_hat={b: state.lam[k, dest_index[s]]
                        for s, b in zip(state.destinations, state.charging_buses)},
            charging_target={b: demand[dest_index[s]]
                             for s, b in zip(state.destinations, state.charging_buses)},
            consensus={i: state.z[j] for j, i in enumerate(state.sites)},
            gamma_hat={i: state.gamma[k, j] for j, i in enumerate(state.sites)},
            alpha=state.alpha, nonnegative_charging=config.nonnegative_charging)
        try:
            return scen.id, _dispatch.solve(problem, tol=config.qp_tol)
        except Infeasible as exc:
            exc.scenario_id = scen.id
            raise
    for sid, sol in _map_scenarios(one, list(enumerate(scenarios)), config.parallelism):
        state.dispatch[sid] = sol


def step2(state: AdmmState, system: CoupledSystem, scenarios: ScenarioSet,
          config: AdmmConfig) -> None:
    """Solve every scenario's CDA against the fresh charging supply, then update z."""
    seed = None

    def one(item):
        k, scen = item
        disp = state.dispatch[scen.id]
        p_by_bus = dict(zip(disp.charging_buses, disp.p))
        supply = np.array([p_by_bus[b] for b in state.charging_buses])
        problem = _traffic.TrafficProblem(
            network=system.transport,
            penalty=_traffic.PenaltyTerms(
                lambda_hat=state.lam[k].copy(), supply_target=supply, alpha=state.alpha))
        start = None
        prev = state.traffic.get(scen.id)
        if config.warm_start:
            if prev is not None:
                start = (prev.class_flows, prev.od_flows)
            elif seed is not None:
                start = seed
        return scen.id, _traffic.solve(problem, tol=config.traffic_tol,
                                       max_iter=config.traffic_max_iter, start=start)

    items = list(enumerate(scenarios))
    if config.warm_start and not state.traffic and len(items) > 1:
        # first call: pay the cold start once, seed the other scenarios with it
        sid, sol = one(items[0])
        state.traffic[sid] = sol
        seed = (sol.class_flows, sol.od_flows)
        items = items[1:]
    for sid, sol in _map_scenarios(one, items, config.parallelism):
        state.traffic[sid] = sol
    probs = scenarios.probabilities()
    u = np.array([state.dispatch[s.id].u for s in scenarios])
    state.z = probs @ u if u.size else np.zeros(0)


def step3(state: AdmmState, system: CoupledSystem, scenarios: ScenarioSet,
          config: AdmmConfig) -> None:
    """Dual ascent for the investment and charging-price multipliers."""
    for k, scen in enumerate(scenarios):
        disp = state.dispatch[scen.id]
        state.gamma[k] += state.alpha * (disp.u - state.z)
        traf = state.traffic[scen.id]
        resid = traf.charging_demand() - disp.p
        state.lam[k] += state.alpha * resid


def gaps(state: AdmmState, scenarios: ScenarioSet) -> tuple[float, float, float]:
    """Normalized consensus and clearing residuals; denominators floored at 1."""
    g1 = 0.0
    g2 = 0.0
    for k, scen in enumerate(scenarios):
        disp = state.dispatch[scen.id]
        if state.z.size:
            g1 = max(g1, float(np.max(np.abs(disp.u - state.z)
                                      / np.maximum(1.0, np.abs(state.z)))))
        traf = state.traffic[scen.id]
        resid = np.abs(traf.charging_demand() - disp.p)
        if resid.size:
            g2 = max(g2, float(np.max(resid / np.maximum(1.0, np.abs(disp.p)))))
    return g1, g2, max(g1, g2)


def _objective(state: AdmmState, system: CoupledSystem, scenarios: ScenarioSet) -> float:
    """Expected system objective at the consensus point (investment priced at z)."""
    net = system.transport
    b1, b2 = net.utility.beta1, net.utility.beta2
    total = sum(system.power.bus(i).renewable_site.invest_cost(z)
                for i, z in zip(state.sites, state.z))
    beta0 = np.array([net.charging_destinations[s] for s in net.destinations()])
    for scen in scenarios:
        disp = state.dispatch[scen.id]
        traf = state.traffic[scen.id]
        val = 0.0
        for i, g in zip(disp.renewable_buses, disp.g_renewable):
            val += system.power.bus(i).renewable_site.operate_cost(g)
        for i, g in zip(disp.conventional_buses, disp.g_conventional):
            val += system.power.bus(i).generator.cost(g)
        graph = _traffic._Graph(net)
        val += (b1 / b2) * float(graph.integral(traf.link_flows).sum())
        q = traf.od_flows
        qlogq = np.where(q > 0, q * np.log(np.where(q > 0, q, 1.0)), 0.0)
        val += (1.0 / b2) * float((qlogq - q * (1.0 + beta0[None, :])).sum())
        total += scen.probability * val
    return total


def _travel_time(state: AdmmState, system: CoupledSystem, scenarios: ScenarioSet) -> float:
    graph = _traffic._Graph(system.transport)
    total = 0.0
    for scen in scenarios:
        v = state.traffic[scen.id].link_flows
        total += scen.probability * float((v * graph.times(v)).sum())
    return total


def _energy_cost(state: AdmmState, system: CoupledSystem, scenarios: ScenarioSet) -> float:
    total = sum(system.power.bus(i).renewable_site.invest_cost(z)
                for i, z in zip(state.sites, state.z))
    for scen in scenarios:
        disp = state.dispatch[scen.id]
        for i, g in zip(disp.renewable_buses, disp.g_renewable):
            total += scen.probability * system.power.bus(i).renewable_site.operate_cost(g)
        for i, g in zip(disp.conventional_buses, disp.g_conventional):
            total += scen.probability * system.power.bus(i).generator.cost(g)
    return total


def _to_result(state: AdmmState, system: CoupledSystem, scenarios: ScenarioSet,
               trace: list[TraceRow], converged: bool) -> EquilibriumResult:
    dest_index = {s: j for j, s in enumerate(state.destinations)}
    per_scenario = {}
    rho = {}
    lam = {}
    for k, scen in enumerate(scenarios):
        disp = state.dispatch[scen.id]
        traf = state.traffic[scen.id]
        per_scenario[scen.id] = ScenarioState(
            scenario_id=scen.id,
            u=disp.investment(),
            g_renewable={i: float(g) for i, g in zip(disp.renewable_buses, disp.g_renewable)},
            g_conventional={i: float(g) for i, g in zip(disp.conventional_buses, disp.g_conventional)},
            p={i: float(v) for i, v in zip(disp.charging_buses, disp.p)},
            d={i: float(v) for i, v in zip(disp.priced_buses, disp.d)},
            theta={i: float(v) for i, v in zip((b.id for b in system.power.buses), disp.theta)},
            flows={i: float(v) for i, v in zip(disp.branch_ids, disp.flows)},
            link_flows={i: float(v) for i, v in zip(traf.link_ids, traf.link_flows)},
            link_ids=traf.link_ids,
            class_flows=traf.class_flows.copy(),
            class_ods=traf.class_ods,
            od_flows=traf.od_flows.copy(),
            origins=traf.origins,
            destinations=traf.destinations,
        )
        rho[scen.id] = dict(disp.rho)
        lam[scen.id] = {s: float(state.lam[k, dest_index[s]]) for s in state.destinations}
    prices = PriceSet(rho=rho, lam=lam)
    probs = {s.id: s.probability for s in scenarios}
    return EquilibriumResult(
        state=SystemState(z={i: float(v) for i, v in zip(state.sites, state.z)},
                          scenarios=per_scenario),
        prices=prices,
        expected_rho=prices.expected_rho(probs),
        expected_lambda=prices.expected_lambda(probs),
        investment={i: float(v) for i, v in zip(state.sites, state.z)},
        expected_objective=_objective(state, system, scenarios),
        travel_time_hours=_travel_time(state, system, scenarios),
        energy_cost_dollars=_energy_cost(state, system, scenarios),
        gap=state.gap, gap1=state.gap1, gap2=state.gap2,
        iterations=state.iteration, converged=converged, trace=trace)


def run(system: CoupledSystem, scenarios: ScenarioSet, config: AdmmConfig = AdmmConfig(),
        strict: bool = True) -> EquilibriumResult:
    """Iterate Steps 1-3 until gap <= eps or max_iter.

    With strict=True a run that stops above the tolerance raises NonConverged
    (the partial result rides on the exception); strict=False returns the
    result tagged converged=False.
    """
    state = init_state(system, scenarios, config)
    trace: list[TraceRow] = []
    converged = False
    stall_window: list[float] = []
    for nu in range(1, config.max_iter + 1):
        t0 = time.perf_counter()
        state.iteration = nu
        step1(state, system, scenarios, config)
        step2(state, system, scenarios, config)
        step3(state, system, scenarios, config)
        state.gap1, state.gap2, state.gap = gaps(state, scenarios)
        wall_ms = 1000.0 * (time.perf_counter() - t0)
        trace.append(TraceRow(nu, state.gap1, state.gap2, state.gap,
                              _objective(state, system, scenarios), wall_ms))
        if state.gap <= config.eps:
            converged = True
            break
        if config.adaptive_alpha:
            stall_window.append(state.gap)
            if len(stall_window) > 20:
                stall_window.pop(0)
                if stall_window[0] - state.gap < 0.01 * stall_window[0] and state.alpha < 64 * config.alpha:
                    state.alpha *= 2.0
                    stall_window.clear()
    if converged and config.polish:
        step1(state, system, scenarios, config)
        step2(state, system, scenarios, config)
        state.gap1, state.gap2, state.gap = gaps(state, scenarios)
    result = _to_result(state, system, scenarios, trace, converged)
    if not converged and strict:
        raise NonConverged(
            f"gap {state.gap:.3e} above tolerance {config.eps:.3e} "
            f"after {state.iteration} iterations", result=result)
    return result
