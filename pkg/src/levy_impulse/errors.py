"""Exception hierarchy for the levy_impulse toolkit."""

from __future__ import annotations


class LevyImpulseError(Exception):
    """Base class for every error raised by the toolkit."""


class InvalidModelError(LevyImpulseError, ValueError):
    """Model or jump-law parameters violate their invariants."""


class InvalidPayoffError(LevyImpulseError, ValueError):
    """Payoff or cost parameters violate their invariants (γ decreasing, h negative, K ≤ 0)."""


class NonPositiveMeanError(LevyImpulseError):
    """E(X₁) ≤ 0: the long-term-average problem is not posed for this model."""

    def __init__(self, mean: float) -> None:
        super().__init__(f"mean rate E(X_1) = {mean:.6g} must be strictly positive")
        self.mean = mean


class ExpMomentDivergesError(LevyImpulseError):
    """An exponential moment or kernel integral is infinite at the requested rate."""

    def __init__(self, message: str, rate: float) -> None:
        super().__init__(message)
        self.rate = rate


class HorizonExceededError(LevyImpulseError):
    """Simulated time ran past the configured cap before the passage happened."""


class NoDownwardMovementError(LevyImpulseError):
    """The model is a subordinator, so there is no descending ladder."""


class RootNotBracketedError(LevyImpulseError):
    """ψ has no positive root inside its convergence strip."""

    def __init__(self, message: str, strip_bound: float) -> None:
        super().__init__(message)
        self.strip_bound = strip_bound


class MissingDescendingRepError(LevyImpulseError):
    """A two-sided model needs an empirical descending occupation density."""


class NormalizationMismatchError(LevyImpulseError):
    """δ_H + ∫Π̄_H exceeds E(X₁) beyond tolerance."""


class InsufficientRecordsError(LevyImpulseError):
    """Too few ladder events were observed for a Monte Carlo estimate."""


class VolterraStepTooCoarseError(LevyImpulseError):
    """The renewal equation did not reach the residual tolerance after halving the step."""


class DriftlessLadderUnsupportedError(LevyImpulseError):
    """δ_H = 0 and the ladder jump law has no density, with Monte Carlo disabled."""


class NotUnimodalError(LevyImpulseError):
    """The gain rate has an interior local minimum between two local maxima."""


class AboveMaximumError(LevyImpulseError):
    """ρ ≥ max g: the set {g > ρ} is empty."""


class NoUpperCrossingError(LevyImpulseError):
    """g − ρ stays positive up to the right working bound."""


class UnboundedError(LevyImpulseError):
    """The one-cycle value grows without bound: the control problem has infinite value."""

    degeneracy = "unbounded"


class NoThresholdError(LevyImpulseError):
    """No charge rate yields a threshold pair; the (s,S) technique does not apply."""

    degeneracy = "no-threshold"


class RestartAboveThresholdError(LevyImpulseError):
    """The fixed restart point lies above the trigger for every charge rate tried."""


class ZeroCycleTimeError(LevyImpulseError):
    """The strategy restarts at or above its trigger, so cycles have zero length."""


class SpecParseError(LevyImpulseError):
    """A problem document is malformed."""

    def __init__(self, message: str, field: str | None = None, line: int | None = None) -> None:
        location = []
        if field is not None:
            location.append(f"field '{field}'")
        if line is not None:
            location.append(f"line {line}")
        prefix = f"{', '.join(location)}: " if location else ""
        super().__init__(f"{prefix}{message}")
        self.field = field
        self.line = line
