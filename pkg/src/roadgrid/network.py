"""Coupled road / power network data model.

All quantities use hours, MW / MWh, and dollars. Types are immutable after
construction and safe to share read-only across concurrent solver workers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping, Optional, Sequence

import numpy as np

from .errors import ValidationError

BPR_ALPHA_DEFAULT = 0.15
BPR_BETA_DEFAULT = 4.0


@dataclass(frozen=True)
class RoadLink:
    id: int
    tail: int
    head: int
    free_flow_time: float  # hours
    capacity: float        # vehicles/hour
    bpr_alpha: float = BPR_ALPHA_DEFAULT
    bpr_beta: float = BPR_BETA_DEFAULT


@dataclass(frozen=True)
class UtilityCoefficients:
    """Taste weights of the charging-destination utility: time (1/hour) and money (1/$)."""

    beta1: float
    beta2: float


@dataclass(frozen=True)
class TransportNetwork:
    nodes: tuple[int, ...]
    links: tuple[RoadLink, ...]
    ev_origins: Mapping[int, float]              # r -> Q_r, vehicles/hour
    charging_destinations: Mapping[int, float]   # s -> attractiveness beta0_s
    conventional_od: Mapping[tuple[int, int], float]  # (r, s) -> fixed demand
    charging_energy: Mapping[tuple[int, int], float]  # (r, s) -> MWh/vehicle
    utility: UtilityCoefficients

    def link_index(self) -> dict[int, int]:
        return {lk.id: k for k, lk in enumerate(self.links)}

    def node_index(self) -> dict[int, int]:
        return {n: k for k, n in enumerate(self.nodes)}

    def destinations(self) -> tuple[int, ...]:
        return tuple(sorted(self.charging_destinations))

    def origins(self) -> tuple[int, ...]:
        return tuple(sorted(r for r, q in self.ev_origins.items() if q > 0))

    def energy(self, r: int, s: int) -> float:
        return self.charging_energy[(r, s)]


@dataclass(frozen=True)
class GeneratorSpec:
    lower: float          # MW
    upper: float          # MW
    cost_quadratic: float  # $/MW^2
    cost_linear: float     # $/MW
    cost_constant: float = 0.0

    def cost(self, g):
        return self.cost_quadratic * g * g + self.cost_linear * g + self.cost_constant

    def marginal_cost(self, g):
        return 2.0 * self.cost_quadratic * g + self.cost_linear


@dataclass(frozen=True)
class RenewableSiteSpec:
    invest_quadratic: float  # $/MW^2
    invest_linear: float     # $/MW
    operate_linear: float    # $/MWh
    unit_capital_cost: float  # $/MW, weight in the budget constraint

    def invest_cost(self, u):
        return self.invest_quadratic * u * u + self.invest_linear * u

    def operate_cost(self, g):
        return self.operate_linear * g


@dataclass(frozen=True)
class PowerBus:
    id: int
    base_load: float = 0.0  # MW
    generator: Optional[GeneratorSpec] = None
    renewable_site: Optional[RenewableSiteSpec] = None
    is_reference: bool = False


@dataclass(frozen=True)
class PowerBranch:
    id: int
    from_bus: int
    to_bus: int
    susceptance: float  # MW/rad
    limit: float        # MW


@dataclass(frozen=True)
class PowerNetwork:
    buses: tuple[PowerBus, ...]
    branches: tuple[PowerBranch, ...]
    budget: float  # $, cap on total capital-weighted renewable investment

    def bus_index(self) -> dict[int, int]:
        return {b.id: k for k, b in enumerate(self.buses)}

    def bus(self, bus_id: int) -> PowerBus:
        return self.buses[self.bus_index()[bus_id]]

    def renewable_buses(self) -> tuple[int, ...]:
        return tuple(b.id for b in self.buses if b.renewable_site is not None)

    def generator_buses(self) -> tuple[int, ...]:
        return tuple(b.id for b in self.buses if b.generator is not None)

    def reference_bus(self) -> int:
        refs = [b.id for b in self.buses if b.is_reference]
        if len(refs) != 1:
            raise ValidationError(f"expected exactly one reference bus, found {refs}")
        return refs[0]


@dataclass(frozen=True)
class CoupledSystem:
    transport: TransportNetwork
    power: PowerNetwork
    coupling: Mapping[int, int]  # charging destination s -> power bus i(s)

    def charging_buses(self) -> tuple[int, ...]:
        """Power buses backing a charging destination, ordered like destinations()."""
        return tuple(self.coupling[s] for s in self.transport.destinations())


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def __str__(self):
        return "ok" if self.ok else "\n".join(self.violations)


@dataclass(frozen=True)
class IncidenceStructure:
    """Node-link incidence A (+1 tail, -1 head) and OD incidence vectors E^{rs}."""

    nodes: tuple[int, ...]
    link_ids: tuple[int, ...]
    matrix: np.ndarray  # shape (n_nodes, n_links), entries in {-1, 0, +1}

    def od_vector(self, r: int, s: int) -> np.ndarray:
        idx = {n: k for k, n in enumerate(self.nodes)}
        if r not in idx:
            raise ValidationError(f"unknown origin node {r}")
        if s not in idx:
            raise ValidationError(f"unknown destination node {s}")
        e = np.zeros(len(self.nodes))
        e[idx[r]] += 1.0
        e[idx[s]] -= 1.0
        return e


def _transport_violations(net: TransportNetwork, out: list[str]) -> None:
    node_set = set(net.nodes)
    seen_ids = set()
    for lk in net.links:
        if lk.id in seen_ids:
            out.append(f"duplicate link id {lk.id}")
        seen_ids.add(lk.id)
        if lk.capacity <= 0:
            out.append(f"link {lk.id}: capacity must be > 0")
        if lk.free_flow_time <= 0:
            out.append(f"link {lk.id}: free_flow_time must be > 0")
        if lk.bpr_beta < 1:
            out.append(f"link {lk.id}: bpr_beta must be >= 1")
        if lk.bpr_alpha < 0:
            out.append(f"link {lk.id}: bpr_alpha must be >= 0")
        for n in (lk.tail, lk.head):
            if n not in node_set:
                out.append(f"link {lk.id}: unknown node {n}")
    for r, q in net.ev_origins.items():
        if r not in node_set:
            out.append(f"ev origin {r}: unknown node")
        if q < 0:
            out.append(f"ev origin {r}: negative demand")
    for s in net.charging_destinations:
        if s not in node_set:
            out.append(f"charging destination {s}: unknown node")
    for (r, s), q in net.conventional_od.items():
        if q < 0:
            out.append(f"conventional od ({r},{s}): negative demand")
        if r not in node_set or s not in node_set:
            out.append(f"conventional od ({r},{s}): unknown node")
    if net.utility.beta1 <= 0:
        out.append("utility beta1 must be > 0")
    if net.utility.beta2 <= 0:
        out.append("utility beta2 must be > 0")
    for r in net.origins():
        for s in net.destinations():
            if (r, s) not in net.charging_energy:
                out.append(f"charging energy missing for od ({r},{s})")
            elif net.charging_energy[(r, s)] < 0:
                out.append(f"charging energy negative for od ({r},{s})")
    # connectivity for every demand pair
    adjacency: dict[int, list[int]] = {n: [] for n in net.nodes}
    for lk in net.links:
        if lk.tail in adjacency:
            adjacency[lk.tail].append(lk.head)
    reach_cache: dict[int, set[int]] = {}

    def reachable(r: int) -> set[int]:
        if r not in reach_cache:
            seen = {r}
            stack = [r]
            while stack:
                n = stack.pop()
                for m in adjacency.get(n, ()):
                    if m not in seen:
                        seen.add(m)
                        stack.append(m)
            reach_cache[r] = seen
        return reach_cache[r]

    for r, q in net.ev_origins.items():
        if q > 0 and r in node_set:
            for s in net.destinations():
                if s in node_set and s not in reachable(r):
                    out.append(f"no directed path from ev origin {r} to destination {s}")
    for (r, s), q in net.conventional_od.items():
        if q > 0 and r in node_set and s in node_set and s not in reachable(r):
            out.append(f"no directed path for conventional od ({r},{s})")


def _power_violations(pw: PowerNetwork, out: list[str]) -> None:
    ids = [b.id for b in pw.buses]
    if len(ids) != len(set(ids)):
        out.append("duplicate bus ids")
    refs = [b.id for b in pw.buses if b.is_reference]
    if len(refs) != 1:
        out.append(f"expected exactly one reference bus, found {len(refs)}")
    bus_set = set(ids)
    for b in pw.buses:
        g = b.generator
        if g is not None:
            if not (0 <= g.lower <= g.upper):
                out.append(f"bus {b.id}: generator bounds must satisfy 0 <= lower <= upper")
            if g.cost_quadratic < 0:
                out.append(f"bus {b.id}: generator cost_quadratic must be >= 0")
        r = b.renewable_site
        if r is not None:
            if r.invest_quadratic < 0:
                out.append(f"bus {b.id}: invest_quadratic must be >= 0")
            if min(r.invest_linear, r.operate_linear, r.unit_capital_cost) < 0:
                out.append(f"bus {b.id}: renewable costs must be >= 0")
    seen_branch = set()
    for br in pw.branches:
        if br.id in seen_branch:
            out.append(f"duplicate branch id {br.id}")
        seen_branch.add(br.id)
        if br.susceptance <= 0:
            out.append(f"branch {br.id}: susceptance must be > 0")
        if br.limit <= 0:
            out.append(f"branch {br.id}: limit must be > 0")
        for n in (br.from_bus, br.to_bus):
            if n not in bus_set:
                out.append(f"branch {br.id}: unknown bus {n}")
    if pw.budget < 0:
        out.append("budget must be >= 0")


def validate(system: CoupledSystem) -> ValidationReport:
    """Collect every violated invariant; an empty report means the system is well-formed."""
    out: list[str] = []
    _transport_violations(system.transport, out)
    _power_violations(system.power, out)
    bus_ids = {b.id for b in system.power.buses}
    targets = list(system.coupling.values())
    if len(targets) != len(set(targets)):
        out.append("coupling map is not injective")
    for s in system.transport.destinations():
        if s not in system.coupling:
            out.append(f"uncoupled charging destination {s}")
    for s, i in system.coupling.items():
        if s not in system.transport.charging_destinations:
            out.append(f"coupling references unknown destination {s}")
        if i not in bus_ids:
            out.append(f"coupling references unknown bus {i}")
    return ValidationReport(tuple(out))


def incidence(net: TransportNetwork) -> IncidenceStructure:
    """Node-link incidence with +1 on tail rows and -1 on head rows."""
    idx = net.node_index()
    a = np.zeros((len(net.nodes), len(net.links)))
    for k, lk in enumerate(net.links):
        if lk.tail not in idx or lk.head not in idx:
            raise ValidationError(f"link {lk.id} references unknown node")
        a[idx[lk.tail], k] += 1.0
        a[idx[lk.head], k] -= 1.0
    return IncidenceStructure(tuple(net.nodes), tuple(lk.id for lk in net.links), a)
