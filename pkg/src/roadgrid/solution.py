"""Solution containers shared by the decomposition solver and the reference solver."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from .network import CoupledSystem


@dataclass
class ScenarioState:
    """Primal point of one scenario: power side, traffic side, and class flows."""

    scenario_id: str
    u: dict[int, float]                 # renewable bus -> first-stage capacity, MW
    g_renewable: dict[int, float]
    g_conventional: dict[int, float]
    p: dict[int, float]                 # charging bus -> supplied MW
    d: dict[int, float]
    theta: dict[int, float]
    flows: dict[int, float]             # branch id -> MW
    link_flows: dict[int, float]        # road link id -> vehicles/hour
    link_ids: tuple[int, ...]           # column order of class_flows
    class_flows: np.ndarray             # (n_classes, n_links)
    class_ods: tuple[tuple[int, int, str], ...]
    od_flows: np.ndarray                # (n_origins, n_destinations)
    origins: tuple[int, ...]
    destinations: tuple[int, ...]

    def od_flow(self, r: int, s: int) -> float:
        return float(self.od_flows[self.origins.index(r), self.destinations.index(s)])

    def charging_demand(self, system: CoupledSystem) -> dict[int, float]:
        """MW of charging demand at each destination, sum_r e_rs q_rs."""
        net = system.transport
        out = {}
        for j, s in enumerate(self.destinations):
            out[s] = float(sum(net.charging_energy[(r, s)] * self.od_flows[i, j]
                               for i, r in enumerate(self.origins)))
        return out


@dataclass
class SystemState:
    z: dict[int, float]  # consensus renewable investment, MW
    scenarios: dict[str, ScenarioState]

    def scenario_ids(self) -> tuple[str, ...]:
        return tuple(self.scenarios)


@dataclass
class PriceSet:
    """Locational electricity prices rho (per priced bus) and charging prices lambda (per destination)."""

    rho: dict[str, dict[int, float]]
    lam: dict[str, dict[int, float]]

    def expected_rho(self, probabilities: Mapping[str, float]) -> dict[int, float]:
        return _expect(self.rho, probabilities)

    def expected_lambda(self, probabilities: Mapping[str, float]) -> dict[int, float]:
        return _expect(self.lam, probabilities)


def _expect(table: dict[str, dict[int, float]], probs: Mapping[str, float]) -> dict[int, float]:
    out: dict[int, float] = {}
    for sid, row in table.items():
        for k, v in row.items():
            out[k] = out.get(k, 0.0) + probs[sid] * v
    return out
