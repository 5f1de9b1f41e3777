"""Per-scenario power-side subproblem.

Assembles and solves the convex QP that merges renewable investment and
operation, conventional generation, DC power flow, and the generation-side
market clearing identity d_i = g^S_i + g^C_i, plus the two coordination
penalties (investment consensus and charging supply targets). Locational
electricity prices are the multipliers of the clearing rows.

Variable layout: [u, gS, gC, p, d, theta, f]
  u, gS : renewable buses        gC : conventional buses
  p     : charging-coupled buses d  : generator buses
  theta : all buses              f  : branches (from->to positive)
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional

import numpy as np

from .errors import Infeasible, NumericalBreakdown
from .network import PowerNetwork
from .qp import QPResult, feasibility_certificate, solve_qp as _solve_qp_core
from .scenarios import Scenario


@dataclass(frozen=True)
class DispatchProblem:
    power: PowerNetwork
    scenario: Scenario
    charging_buses: tuple[int, ...]
    lambda_hat: Mapping[int, float]       # bus -> price estimate, $/MWh
    charging_target: Mapping[int, float]  # bus -> demanded MW from the road side
    consensus: Mapping[int, float]        # bus -> z_i, MW
    gamma_hat: Mapping[int, float]        # bus -> investment dual estimate, $/MW
    alpha: float = 1.0
    nonnegative_charging: bool = False

    def __post_init__(self):
        if self.alpha <= 0:
            raise ValueError("penalty weight must be > 0")
        for i in self.charging_buses:
            if i not in self.charging_target:
                raise ValueError(f"charging target missing for bus {i}")


@dataclass
class DispatchSolution:
    scenario_id: str
    renewable_buses: tuple[int, ...]
    conventional_buses: tuple[int, ...]
    priced_buses: tuple[int, ...]  # renewable + conventional, aligned with d and rho
    charging_buses: tuple[int, ...]
    branch_ids: tuple[int, ...]
    u: np.ndarray
    g_renewable: np.ndarray
    g_conventional: np.ndarray
    p: np.ndarray
    d: np.ndarray
    theta: np.ndarray
    flows: np.ndarray
    rho: dict[int, float]          # duals of the clearing rows, $/MWh
    nodal_price: dict[int, float]  # duals of the power-balance rows, all buses
    multipliers: dict[str, np.ndarray]
    objective: float
    kkt_residual: float
    converged: bool

    def investment(self) -> dict[int, float]:
        return {i: float(v) for i, v in zip(self.renewable_buses, self.u)}


@dataclass
class QPInstance:
    P: np.ndarray
    c: np.ndarray
    constant: float
    A: np.ndarray
    b: np.ndarray
    G: np.ndarray
    h: np.ndarray
    var_slices: dict[str, slice]
    eq_slices: dict[str, slice]
    ineq_slices: dict[str, slice]
    meta: dict


def assemble(problem: DispatchProblem) -> QPInstance:
    pw = problem.power
    xi = problem.scenario.factors
    buses = pw.buses
    bus_pos = {b.id: k for k, b in enumerate(buses)}
    S = [b.id for b in buses if b.renewable_site is not None]
    C = [b.id for b in buses if b.generator is not None]
    Gset = [b.id for b in buses if b.renewable_site is not None or b.generator is not None]
    T = list(problem.charging_buses)
    nS, nC, nG, nT, nB, nBr = len(S), len(C), len(Gset), len(T), len(buses), len(pw.branches)
    ref = pw.reference_bus()

    off = 0
    sl = {}
    for name, size in [("u", nS), ("gS", nS), ("gC", nC), ("p", nT),
                       ("d", nG), ("theta", nB), ("f", nBr)]:
        sl[name] = slice(off, off + size)
        off += size
    n = off

    P = np.zeros((n, n))
    c = np.zeros(n)
    constant = 0.0
    alpha = problem.alpha
    for k, i in enumerate(S):
        site = pw.bus(i).renewable_site
        iu, ig = sl["u"].start + k, sl["gS"].start + k
        P[iu, iu] += 2.0 * site.invest_quadratic
        c[iu] += site.invest_linear
        c[ig] += site.operate_linear
        gam, z = problem.gamma_hat.get(i, 0.0), problem.consensus.get(i, 0.0)
        P[iu, iu] += alpha
        c[iu] += gam - alpha * z
        constant += -gam * z + 0.5 * alpha * z * z
    for k, i in enumerate(C):
        gen = pw.bus(i).generator
        ig = sl["gC"].start + k
        P[ig, ig] += 2.0 * gen.cost_quadratic
        c[ig] += gen.cost_linear
        constant += gen.cost_constant
    for k, i in enumerate(T):
        ip = sl["p"].start + k
        lam, t = problem.lambda_hat.get(i, 0.0), problem.charging_target[i]
        P[ip, ip] += alpha
        c[ip] += -lam - alpha * t
        constant += lam * t + 0.5 * alpha * t * t

    # equalities: branch flow physics, nodal balance, market clearing, angle reference
    rows = []
    rhs = []
    eq_slices = {}
    start = 0
    for e, br in enumerate(pw.branches):
        row = np.zeros(n)
        row[sl["f"].start + e] = 1.0
        row[sl["theta"].start + bus_pos[br.from_bus]] = -br.susceptance
        row[sl["theta"].start + bus_pos[br.to_bus]] = br.susceptance
        rows.append(row)
        rhs.append(0.0)
    eq_slices["flow_physics"] = slice(start, len(rows)); start = len(rows)

    d_pos = {i: sl["d"].start + k for k, i in enumerate(Gset)}
    p_pos = {i: sl["p"].start + k for k, i in enumerate(T)}
    for b in buses:
        row = np.zeros(n)
        for e, br in enumerate(pw.branches):
            if br.from_bus == b.id:
                row[sl["f"].start + e] += 1.0
            if br.to_bus == b.id:
                row[sl["f"].start + e] -= 1.0
        if b.id in d_pos:
            row[d_pos[b.id]] = -1.0
        if b.id in p_pos:
            row[p_pos[b.id]] = 1.0
        rows.append(row)
        rhs.append(-b.base_load)
    eq_slices["balance"] = slice(start, len(rows)); start = len(rows)

    gS_pos = {i: sl["gS"].start + k for k, i in enumerate(S)}
    gC_pos = {i: sl["gC"].start + k for k, i in enumerate(C)}
    for i in Gset:
        row = np.zeros(n)
        row[d_pos[i]] = 1.0
        if i in gS_pos:
            row[gS_pos[i]] = -1.0
        if i in gC_pos:
            row[gC_pos[i]] = -1.0
        rows.append(row)
        rhs.append(0.0)
    eq_slices["clearing"] = slice(start, len(rows)); start = len(rows)

    row = np.zeros(n)
    row[sl["theta"].start + bus_pos[ref]] = 1.0
    rows.append(row)
    rhs.append(0.0)
    eq_slices["reference"] = slice(start, len(rows))

    A = np.vstack(rows)
    b_eq = np.array(rhs)

    # inequalities
    g_rows, g_rhs = [], []
    ineq_slices = {}
    start = 0
    for k, i in enumerate(S):
        row = np.zeros(n)
        row[sl["gS"].start + k] = 1.0
        row[sl["u"].start + k] = -xi[i]
        g_rows.append(row)
        g_rhs.append(0.0)
    ineq_slices["capacity_factor"] = slice(start, len(g_rows)); start = len(g_rows)

    row = np.zeros(n)
    for k, i in enumerate(S):
        row[sl["u"].start + k] = pw.bus(i).renewable_site.unit_capital_cost
    g_rows.append(row)
    g_rhs.append(pw.budget)
    ineq_slices["budget"] = slice(start, len(g_rows)); start = len(g_rows)

    for k, i in enumerate(C):
        row = np.zeros(n)
        row[sl["gC"].start + k] = 1.0
        g_rows.append(row)
        g_rhs.append(pw.bus(i).generator.upper)
    ineq_slices["gen_upper"] = slice(start, len(g_rows)); start = len(g_rows)
    for k, i in enumerate(C):
        row = np.zeros(n)
        row[sl["gC"].start + k] = -1.0
        g_rows.append(row)
        g_rhs.append(-pw.bus(i).generator.lower)
    ineq_slices["gen_lower"] = slice(start, len(g_rows)); start = len(g_rows)

    for e, br in enumerate(pw.branches):
        row = np.zeros(n)
        row[sl["f"].start + e] = 1.0
        g_rows.append(row)
        g_rhs.append(br.limit)
    ineq_slices["flow_upper"] = slice(start, len(g_rows)); start = len(g_rows)
    for e, br in enumerate(pw.branches):
        row = np.zeros(n)
        row[sl["f"].start + e] = -1.0
        g_rows.append(row)
        g_rhs.append(br.limit)
    ineq_slices["flow_lower"] = slice(start, len(g_rows)); start = len(g_rows)

    nonneg = ["u", "gS", "d"] + (["p"] if problem.nonnegative_charging else [])
    for name in nonneg:
        for k in range(sl[name].stop - sl[name].start):
            row = np.zeros(n)
            row[sl[name].start + k] = -1.0
            g_rows.append(row)
            g_rhs.append(0.0)
    ineq_slices["nonneg"] = slice(start, len(g_rows))

    G = np.vstack(g_rows)
    h = np.array(g_rhs)
    meta = {"S": tuple(S), "C": tuple(C), "G": tuple(Gset), "T": tuple(T),
            "bus_ids": tuple(b.id for b in buses),
            "branch_ids": tuple(br.id for br in pw.branches),
            "scenario_id": problem.scenario.id}
    return QPInstance(P, c, constant, A, b_eq, G, h, sl, eq_slices, ineq_slices, meta)


def _scales(pw: PowerNetwork) -> tuple[float, float]:
    """(power scale, money scale) used to condition the QP; duals are unscaled on return."""
    pscale = max([br.limit for br in pw.branches]
                 + [b.base_load for b in pw.buses] + [1.0])
    marg = [1.0]
    for b in pw.buses:
        if b.generator is not None:
            marg.append(abs(b.generator.marginal_cost(b.generator.upper)))
        if b.renewable_site is not None:
            marg.append(abs(b.renewable_site.operate_linear))
    return pscale, max(marg)


def solve_instance(instance: QPInstance, pw: PowerNetwork, tol: float = 1e-9) -> tuple[QPResult, float]:
    ps, ms = _scales(pw)
    scale = ps * ms
    try:
        res = _solve_qp_core(
            instance.P * (ps / ms), instance.c / ms,
            instance.A, instance.b / ps,
            instance.G, instance.h / ps, tol=tol)
    except NumericalBreakdown:
        cert = feasibility_certificate(instance.A, instance.b, instance.G, instance.h)
        if not cert.feasible:
            raise Infeasible(
                f"dispatch subproblem infeasible (violation {cert.violation:.3e} MW)",
                scenario_id=instance.meta["scenario_id"], certificate=cert) from None
        raise
    res.x *= ps
    res.y *= ms
    res.z *= ms
    res.slack *= ps
    res.objective *= scale
    return res, instance.constant


def solve(problem: DispatchProblem, tol: float = 1e-9) -> DispatchSolution:
    instance = assemble(problem)
    res, constant = solve_instance(instance, problem.power, tol)
    sl, eq, ineq, meta = instance.var_slices, instance.eq_slices, instance.ineq_slices, instance.meta
    rho = {i: float(v) for i, v in zip(meta["G"], res.y[eq["clearing"]])}
    nodal = {i: float(v) for i, v in zip(meta["bus_ids"], res.y[eq["balance"]])}
    multipliers = {name: res.z[ineq[name]].copy()
                   for name in ("capacity_factor", "budget", "gen_upper", "gen_lower",
                                "flow_upper", "flow_lower")}
    return DispatchSolution(
        scenario_id=meta["scenario_id"],
        renewable_buses=meta["S"], conventional_buses=meta["C"],
        priced_buses=meta["G"],
        charging_buses=meta["T"], branch_ids=meta["branch_ids"],
        u=res.x[sl["u"]].copy(), g_renewable=res.x[sl["gS"]].copy(),
        g_conventional=res.x[sl["gC"]].copy(), p=res.x[sl["p"]].copy(),
        d=res.x[sl["d"]].copy(), theta=res.x[sl["theta"]].copy(),
        flows=res.x[sl["f"]].copy(), rho=rho, nodal_price=nodal,
        multipliers=multipliers,
        objective=res.objective + constant,
        kkt_residual=max(res.primal_residual, res.dual_residual),
        converged=res.converged)


def extract_prices(solution: DispatchSolution) -> dict[int, float]:
    """Locational electricity prices: clearing-row duals, marginal cost at interior optima."""
    if not solution.converged:
        raise NumericalBreakdown("cannot extract prices from a non-converged dispatch solve")
    return dict(solution.rho)
