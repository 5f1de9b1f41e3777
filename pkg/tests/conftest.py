import pathlib
import sys

import numpy as np
import pytest

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from roadgrid.network import (CoupledSystem, GeneratorSpec, PowerBranch, PowerBus,
                              PowerNetwork, RenewableSiteSpec, RoadLink, TransportNetwork,
                              UtilityCoefficients)
from roadgrid.scenarios import Scenario, ScenarioSet

REPO = pathlib.Path(__file__).resolve().parents[1]
DATA = REPO / "data"


@pytest.fixture(scope="session")
def data_dir():
    return DATA


def triangle_road(cap_12=10.0, cap_13=10.0, beta1=1.0, beta2=0.1, energy=0.5,
                  ev_flow=50.0, beta0=(0.0, 0.0)):
    """Three road nodes, one EV origin, destinations 2 and 3, cross links both ways."""
    links = (
        RoadLink(1, 1, 2, 1.0, cap_12),
        RoadLink(2, 1, 3, 1.0, cap_13),
        RoadLink(3, 3, 2, 0.5, 10.0),
        RoadLink(4, 2, 3, 0.5, 10.0),
    )
    return TransportNetwork(
        nodes=(1, 2, 3), links=links, ev_origins={1: ev_flow},
        charging_destinations={2: beta0[0], 3: beta0[1]},
        conventional_od={},
        charging_energy={(1, 2): energy, (1, 3): energy},
        utility=UtilityCoefficients(beta1, beta2))


def triangle_power(line_limit_13=200.0, budget=100.0, backup=False):
    site = RenewableSiteSpec(0.5, 5.0, 3.0, 1.0)
    buses = (
        PowerBus(1, 50.0, GeneratorSpec(0.0, 500.0, 0.02, 20.0), None, True),
        PowerBus(2, 50.0, None, site, False),
        PowerBus(3, 50.0, GeneratorSpec(0.0, 200.0, 0.01, 40.0) if backup else None,
                 site, False),
    )
    branches = (
        PowerBranch(1, 1, 2, 1000.0, 200.0),
        PowerBranch(2, 1, 3, 1000.0, line_limit_13),
        PowerBranch(3, 2, 3, 1000.0, 200.0),
    )
    return PowerNetwork(buses, branches, budget=budget)


def toy_system(**kw):
    road_kw = {k: kw[k] for k in ("cap_12", "cap_13", "beta1", "beta2", "energy",
                                  "ev_flow", "beta0") if k in kw}
    power_kw = {k: kw[k] for k in ("line_limit_13", "budget", "backup") if k in kw}
    return CoupledSystem(triangle_road(**road_kw), triangle_power(**power_kw),
                         coupling={2: 2, 3: 3})


def two_point_scenarios(lo=0.8, hi=1.2, sites=(2, 3)):
    return ScenarioSet((
        Scenario("lo", {i: lo for i in sites}, 0.5),
        Scenario("hi", {i: hi for i in sites}, 0.5),
    ))


@pytest.fixture
def toy():
    return toy_system()


@pytest.fixture
def toy_scenarios():
    return two_point_scenarios()
