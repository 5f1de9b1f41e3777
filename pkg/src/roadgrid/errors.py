"""Exception types shared across the solver stack."""


class RoadGridError(Exception):
    """Base class for all roadgrid errors."""


class ValidationError(RoadGridError):
    """A network or system failed structural validation."""


class UnreachableOD(RoadGridError):
    """A destination with positive demand cannot be reached from its origin."""

    def __init__(self, origin, destination, message=None):
        self.origin = origin
        self.destination = destination
        super().__init__(message or f"no path from {origin} to {destination} with positive demand")


class Infeasible(RoadGridError):
    """A dispatch problem admits no feasible point; carries a Farkas-style certificate."""

    def __init__(self, message, scenario_id=None, certificate=None):
        self.scenario_id = scenario_id
        self.certificate = certificate
        super().__init__(message)


class NumericalBreakdown(RoadGridError):
    """The QP solver lost too much precision to continue."""


class MaxIterationsExceeded(RoadGridError):
    """An iterative solve hit its iteration budget; carries the best iterate."""

    def __init__(self, message, best=None):
        self.best = best
        super().__init__(message)


class NonConverged(RoadGridError):
    """The coordinator stopped above the gap tolerance; carries the best state and trace."""

    def __init__(self, message, result=None):
        self.result = result
        super().__init__(message)


class SizeGuardExceeded(RoadGridError):
    """Instance is too large for the direct (monolithic) reference solver."""


class ParseError(RoadGridError):
    """An input file is malformed."""

    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")
