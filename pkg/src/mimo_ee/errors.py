"""Exception types shared across the simulator."""


class SimulationError(Exception):
    """Base class for all domain errors raised by this package."""


class InfeasibleEstimation(SimulationError):
    """A drawn user distance makes the channel-estimate variance non-positive.

    Signals the caller to reject (and usually redraw) the realization.
    """


class DegenerateChannel(SimulationError):
    """An estimated channel has squared norm <= K, so the rate lower bound
    is undefined for that user; the realization must be rejected."""


class NonpositiveArgument(SimulationError):
    """An operand left the open domain of a formula (e.g. zero power inside
    a logarithm)."""


class NonpositiveDenominator(SimulationError):
    """The closed-form power update denominator is <= 0 for the current
    multiplier state; the caller should back off the subgradient step."""


class NoConvergence(SimulationError):
    """An iteration budget was exhausted before reaching its tolerance."""


class Infeasible(SimulationError):
    """No power vector satisfies the constraint set (minimum-rate floors
    alone exceed a group power budget)."""


class AllRejected(SimulationError):
    """Every trial of a Monte Carlo batch was rejected; the sweep point is
    mis-parameterized."""


class ConfigError(SimulationError):
    """Base class for configuration-file problems."""


class ParseError(ConfigError):
    """The configuration file could not be parsed at all."""


class ValidationError(ConfigError):
    """A parsed configuration violates an invariant; `field` names the
    offending entry."""

    def __init__(self, field: str, message: str):
        self.field = field
        super().__init__(f"{field}: {message}")
