"""Span creation and attribute helpers for solver and simulator operations."""

from __future__ import annotations

import math
from typing import TYPE_CHECKING, Any

from opentelemetry.trace import SpanKind, StatusCode, Tracer

from levy_impulse._constants import (
    ERROR_TYPE,
    LEVY_LADDER_DELTA_H,
    LEVY_LADDER_PROVENANCE,
    LEVY_OPERATION_NAME,
    LEVY_PROCESS_CLASS,
    LEVY_SIMULATION_CYCLES,
    LEVY_SIMULATION_J_HAT,
    LEVY_SIMULATION_SE,
    LEVY_SOLUTION_DEGENERACY,
    LEVY_SOLUTION_ITERATIONS,
    LEVY_SOLUTION_RHO_STAR,
    LEVY_SOLUTION_S,
    LEVY_SOLUTION_SHORTCUT,
    LEVY_SOLUTION_UPPER,
    LEVY_VERIFICATION_PASSED,
)
from levy_impulse.process import LevyModel, classify

if TYPE_CHECKING:
    from opentelemetry.context import Context
    from opentelemetry.trace import Span

    from levy_impulse.ladder import LadderSystem
    from levy_impulse.simulate import SimulationReport, VerificationReport
    from levy_impulse.solver import PolicySolution


def create_operation_span(
    tracer: Tracer,
    operation: str,
    model: Any = None,
    parent_context: Context | None = None,
) -> Span:
    """Create a ``levy.<operation>`` INTERNAL span.

    Args:
        tracer: OTel tracer instance.
        operation: Operation name, e.g. ``solve``.
        model: The driving process, when the call has one; adds its spectral class.
        parent_context: Context of the enclosing instrumented operation, if any.

    Returns:
        A started span (must be ended by caller).
    """
    attributes: dict[str, str] = {LEVY_OPERATION_NAME: operation}
    if isinstance(model, LevyModel):
        attributes[LEVY_PROCESS_CLASS] = classify(model).value
    return tracer.start_span(
        name=f"levy.{operation}",
        kind=SpanKind.INTERNAL,
        attributes=attributes,
        context=parent_context,
    )


def _finite(value: float | None) -> bool:
    return value is not None and math.isfinite(value)


def set_ladder_attributes(span: Span, ladder: LadderSystem) -> None:
    span.set_attribute(LEVY_LADDER_PROVENANCE, ladder.provenance.value)
    span.set_attribute(LEVY_LADDER_DELTA_H, ladder.delta_h)


def set_solution_attributes(span: Span, solution: PolicySolution) -> None:
    """Set ρ*, thresholds and solver diagnostics on a solve span."""
    span.set_attribute(LEVY_SOLUTION_DEGENERACY, solution.degeneracy.value)
    span.set_attribute(LEVY_SOLUTION_ITERATIONS, solution.iterations)
    span.set_attribute(LEVY_SOLUTION_SHORTCUT, solution.used_special_shortcut)
    for key, value in (
        (LEVY_SOLUTION_RHO_STAR, solution.rho_star),
        (LEVY_SOLUTION_S, solution.s),
        (LEVY_SOLUTION_UPPER, solution.S),
    ):
        if _finite(value):
            span.set_attribute(key, value)


def set_simulation_attributes(span: Span, report: SimulationReport) -> None:
    span.set_attribute(LEVY_SIMULATION_J_HAT, report.j_hat)
    span.set_attribute(LEVY_SIMULATION_SE, report.se)
    span.set_attribute(LEVY_SIMULATION_CYCLES, report.n_cycles)


def set_verification_attributes(span: Span, report: VerificationReport) -> None:
    span.set_attribute(LEVY_VERIFICATION_PASSED, report.passed)
    if report.simulation is not None:
        set_simulation_attributes(span, report.simulation)


def set_error_attributes(span: Span, exception: BaseException) -> None:
    """Set error.type and ERROR status on a span.

    Args:
        span: The span to annotate with error info.
        exception: The exception that occurred.
    """
    error_type = type(exception).__qualname__
    span.set_attribute(ERROR_TYPE, error_type)
    span.set_status(StatusCode.ERROR, str(exception))
