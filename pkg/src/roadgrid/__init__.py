"""Market equilibrium for coupled road and power networks with EV charging.

The library couples a destination/route-choice traffic model (logit over
charging destinations, user-equilibrium routing) with renewable investment
under scenario uncertainty, conventional dispatch, and DC power flow, clears
both markets, and returns the endogenous locational electricity and charging
prices. `admm.run` is the production solver; `verify.monolithic_solve` is the
independent small-instance reference.
"""

from .admm import AdmmConfig, EquilibriumResult, run
from .errors import (Infeasible, MaxIterationsExceeded, NonConverged, NumericalBreakdown,
                     ParseError, RoadGridError, SizeGuardExceeded, UnreachableOD,
                     ValidationError)
from .network import (CoupledSystem, GeneratorSpec, PowerBranch, PowerBus, PowerNetwork,
                      RenewableSiteSpec, RoadLink, TransportNetwork, UtilityCoefficients,
                      incidence, validate)
from .scenarios import Scenario, ScenarioSet, expectation, sample_uniform
from .solution import PriceSet, ScenarioState, SystemState
from .verify import certify, monolithic_solve

__version__ = "0.1.0"

__all__ = [
    "AdmmConfig", "EquilibriumResult", "run",
    "CoupledSystem", "GeneratorSpec", "PowerBranch", "PowerBus", "PowerNetwork",
    "RenewableSiteSpec", "RoadLink", "TransportNetwork", "UtilityCoefficients",
    "incidence", "validate",
    "Scenario", "ScenarioSet", "expectation", "sample_uniform",
    "PriceSet", "ScenarioState", "SystemState",
    "certify", "monolithic_solve",
    "Infeasible", "MaxIterationsExceeded", "NonConverged", "NumericalBreakdown",
    "ParseError", "RoadGridError", "SizeGuardExceeded", "UnreachableOD", "ValidationError",
]
