#!/usr/bin/env python3
"""Regenerate the three-node fixture family under data/three_node/.

The base case couples a triangle road network (one EV origin, two charging
destinations) with a three-bus power triangle: cheap conventional generation
at bus 1, renewable sites plus an expensive backup unit at buses 2/3. The
case2 variant halves the road capacity of link 1->3 (10 -> 5); the case3
variant cuts the transmission limit of branch 1-3 from 200 to 50. Scenario
factors are drawn once from U[0.5, 1.5] and committed.

Run from the repository root:  python3 scripts/make_three_node_fixtures.py
"""

import pathlib
import sys

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from roadgrid.io import write_coupling, write_power_case, write_scenarios, write_tntp
from roadgrid.network import (GeneratorSpec, PowerBranch, PowerBus, PowerNetwork,
                              RenewableSiteSpec, RoadLink, TransportNetwork,
                              UtilityCoefficients)
from roadgrid.scenarios import sample_uniform

OUT = pathlib.Path(__file__).resolve().parents[1] / "data" / "three_node"

ROAD_CAP = 10.0
ROAD_CAP_CASE2 = 5.0
TRANS_LIMIT = 200.0
TRANS_LIMIT_CASE3 = 50.0
BASE_LOAD = 50.0
EV_FLOW = 50.0
CHARGE_ENERGY = 1.0  # MWh per vehicle
N_SCENARIOS = 5
SEED = 20240601

SITE = RenewableSiteSpec(invest_quadratic=0.5, invest_linear=5.0,
                         operate_linear=3.0, unit_capital_cost=1.0)
CHEAP_GEN = GeneratorSpec(lower=0.0, upper=500.0, cost_quadratic=0.02, cost_linear=20.0)
BACKUP_GEN = GeneratorSpec(lower=0.0, upper=200.0, cost_quadratic=0.01, cost_linear=40.0)


def road(cap_13: float) -> TransportNetwork:
    links = (
        RoadLink(1, 1, 2, 1.0, ROAD_CAP),
        RoadLink(2, 1, 3, 1.0, cap_13),
        RoadLink(3, 3, 2, 0.5, ROAD_CAP),
        RoadLink(4, 2, 3, 0.5, ROAD_CAP),
    )
    return TransportNetwork(nodes=(1, 2, 3), links=links, ev_origins={},
                            charging_destinations={}, conventional_od={},
                            charging_energy={}, utility=UtilityCoefficients(1.0, 1.0))


def power(limit_13: float) -> PowerNetwork:
    buses = (
        PowerBus(1, BASE_LOAD, CHEAP_GEN, None, True),
        PowerBus(2, BASE_LOAD, None, SITE, False),
        PowerBus(3, BASE_LOAD, BACKUP_GEN, SITE, False),
    )
    branches = (
        PowerBranch(1, 1, 2, susceptance=1000.0, limit=TRANS_LIMIT),
        PowerBranch(2, 1, 3, susceptance=1000.0, limit=limit_13),
        PowerBranch(3, 2, 3, susceptance=1000.0, limit=TRANS_LIMIT),
    )
    return PowerNetwork(buses, branches, budget=0.0)


CONFIG = """\
# three-node coupled test system ({label})
network = {net}
trips = three_node_trips.tntp
power_case = {case}
coupling = coupling.csv
scenarios = scenarios.csv

beta1 = 1.0
beta2 = 0.1
ev_origin.1 = {ev}
budget = 100.0

alpha = 1.0
eps = 0.001
max_iter = 400
seed = {seed}
outdir = out/{label}
"""


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    write_tntp(road(ROAD_CAP), OUT / "three_node_net.tntp", OUT / "three_node_trips.tntp")
    write_tntp(road(ROAD_CAP_CASE2), OUT / "three_node_net_case2.tntp", OUT / "_trips_case2.tntp")
    (OUT / "_trips_case2.tntp").unlink()  # trips are shared across cases
    write_power_case(power(TRANS_LIMIT), OUT / "three_node_case.m")
    write_power_case(power(TRANS_LIMIT_CASE3), OUT / "three_node_case_case3.m")
    write_coupling({2: 2, 3: 3}, {2: 0.0, 3: 0.0},
                   {2: CHARGE_ENERGY, 3: CHARGE_ENERGY}, OUT / "coupling.csv")
    write_scenarios(sample_uniform([2, 3], N_SCENARIOS, 0.5, 1.5, SEED),
                    OUT / "scenarios.csv")
    cases = [("case1", "three_node_net.tntp", "three_node_case.m"),
             ("case2", "three_node_net_case2.tntp", "three_node_case.m"),
             ("case3", "three_node_net.tntp", "three_node_case_case3.m")]
    for label, net, case in cases:
        (OUT / f"{label}.cfg").write_text(
            CONFIG.format(label=label, net=net, case=case, ev=EV_FLOW, seed=SEED))
    print(f"wrote fixtures to {OUT}")


if __name__ == "__main__":
    main()
