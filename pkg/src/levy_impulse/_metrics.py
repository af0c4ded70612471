"""Metrics helpers for operation histograms."""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

from levy_impulse._constants import (
    DURATION_BUCKETS,
    ERROR_TYPE,
    ITERATION_BUCKETS,
    LEVY_OPERATION_DURATION,
    LEVY_SOLVER_ITERATIONS,
)

if TYPE_CHECKING:
    from opentelemetry.metrics import Histogram, Meter


def create_duration_histogram(meter: Meter) -> Histogram:
    """Create the levy.operation.duration histogram."""
    return meter.create_histogram(
        name=LEVY_OPERATION_DURATION,
        description="Duration of solver and simulator operations",
        unit="s",
        explicit_bucket_boundaries_advisory=DURATION_BUCKETS,
    )


def create_iterations_histogram(meter: Meter) -> Histogram:
    """Create the levy.solver.iterations histogram (bisection steps on ρ)."""
    return meter.create_histogram(
        name=LEVY_SOLVER_ITERATIONS,
        description="Bisection iterations needed to locate the optimal average",
        unit="{iteration}",
        explicit_bucket_boundaries_advisory=ITERATION_BUCKETS,
    )


def record_duration(
    histogram: Histogram,
    duration_seconds: float,
    attributes: dict[str, Any],
    error_type: str | None = None,
) -> None:
    """Record operation duration as a histogram measurement.

    Args:
        histogram: The duration histogram.
        duration_seconds: Duration in seconds.
        attributes: Base attributes.
        error_type: Optional error type to include as a dimension.
    """
    attrs = {**attributes}
    if error_type is not None:
        attrs[ERROR_TYPE] = error_type
    histogram.record(duration_seconds, attrs)


def record_iterations(histogram: Histogram, iterations: int, attributes: dict[str, Any]) -> None:
    histogram.record(iterations, attributes)
