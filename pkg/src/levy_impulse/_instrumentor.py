"""LevyImpulseInstrumentor: OpenTelemetry instrumentation for the solver and simulator."""

from __future__ import annotations

import time
from typing import TYPE_CHECKING, Any

import wrapt
from opentelemetry.instrumentation.instrumentor import BaseInstrumentor  # type: ignore[attr-defined]
from opentelemetry.metrics import get_meter_provider
from opentelemetry.trace import get_tracer_provider

from levy_impulse._constants import (
    LEVY_OPERATION_NAME,
    OPERATION_BUILD_LADDER,
    OPERATION_RUN_POLICY,
    OPERATION_SOLVE,
    OPERATION_SOLVE_FIXED_RESTART,
    OPERATION_VERIFY,
)
from levy_impulse._context import RunContext, get_run_context, reset_run_context, set_run_context
from levy_impulse._metrics import (
    create_duration_histogram,
    create_iterations_histogram,
    record_duration,
    record_iterations,
)
from levy_impulse._spans import (
    create_operation_span,
    set_error_attributes,
    set_ladder_attributes,
    set_simulation_attributes,
    set_solution_attributes,
    set_verification_attributes,
)
from levy_impulse.version import __version__

if TYPE_CHECKING:
    from collections.abc import Callable, Collection

    from opentelemetry.trace import Span

_INSTRUMENTATION_NAME = "levy_impulse"

# (module, function, operation name, result annotator)
_TARGETS: list[tuple[str, str, str, Callable[[Span, Any], None]]] = [
    ("levy_impulse.ladder", "build_ladder_system", OPERATION_BUILD_LADDER, set_ladder_attributes),
    ("levy_impulse.solver", "solve", OPERATION_SOLVE, set_solution_attributes),
    ("levy_impulse.solver", "solve_fixed_restart", OPERATION_SOLVE_FIXED_RESTART, set_solution_attributes),
    ("levy_impulse.simulate", "run_policy", OPERATION_RUN_POLICY, set_simulation_attributes),
    ("levy_impulse.simulate", "verify_solution", OPERATION_VERIFY, set_verification_attributes),
]

_SOLVE_OPERATIONS = (OPERATION_SOLVE, OPERATION_SOLVE_FIXED_RESTART)


class LevyImpulseInstrumentor(BaseInstrumentor):  # type: ignore[misc]
    """OpenTelemetry instrumentor for levy_impulse operations."""

    def instrumentation_dependencies(self) -> Collection[str]:
        return []

    def _instrument(self, **kwargs: Any) -> None:
        tracer_provider = kwargs.get("tracer_provider") or get_tracer_provider()
        meter_provider = kwargs.get("meter_provider") or get_meter_provider()

        self._tracer = tracer_provider.get_tracer(_INSTRUMENTATION_NAME, __version__)
        self._meter = meter_provider.get_meter(_INSTRUMENTATION_NAME, __version__)
        self._duration_histogram = create_duration_histogram(self._meter)
        self._iterations_histogram = create_iterations_histogram(self._meter)
        self._capture_evaluations = kwargs.get("capture_evaluations", False)

        for module, name, operation, annotate in _TARGETS:
            wrapt.wrap_function_wrapper(module, name, self._make_wrapper(operation, annotate))

    def _uninstrument(self, **kwargs: Any) -> None:
        import importlib

        for module_name, name, _, _ in _TARGETS:
            module = importlib.import_module(module_name)
            try:
                func = getattr(module, name, None)
                if func and hasattr(func, "__wrapped__"):
                    setattr(module, name, func.__wrapped__)
            except (AttributeError, ValueError):
                pass

    # --- Wrapper implementation ---

    def _make_wrapper(self, operation: str, annotate: Callable[[Span, Any], None]) -> Callable[..., Any]:
        def wrapper(wrapped: Any, instance: Any, args: tuple[Any, ...], kwargs: dict[str, Any]) -> Any:
            return self._traced_call(operation, annotate, wrapped, args, kwargs)

        return wrapper

    def _traced_call(
        self,
        operation: str,
        annotate: Callable[[Span, Any], None],
        wrapped: Any,
        args: tuple[Any, ...],
        kwargs: dict[str, Any],
    ) -> Any:
        """Run one operation inside its span; nested operations become child spans."""
        parent = get_run_context()
        model = args[0] if args else kwargs.get("model")
        span = create_operation_span(
            self._tracer,
            operation,
            model=model,
            parent_context=parent.parent_otel_context if parent is not None else None,
        )
        ctx = RunContext(span=span, operation=operation, capture_evaluations=self._capture_evaluations)
        token = set_run_context(ctx)

        metric_attrs = {LEVY_OPERATION_NAME: operation}
        error_occurred: BaseException | None = None
        try:
            result = wrapped(*args, **kwargs)
            annotate(span, result)
            if operation in _SOLVE_OPERATIONS:
                record_iterations(self._iterations_histogram, result.iterations, metric_attrs)
            return result
        except BaseException as exc:
            error_occurred = exc
            set_error_attributes(span, exc)
            raise
        finally:
            duration = time.monotonic() - ctx.start_time
            error_type = type(error_occurred).__qualname__ if error_occurred else None
            record_duration(
                self._duration_histogram,
                duration_seconds=duration,
                attributes=metric_attrs,
                error_type=error_type,
            )
            span.end()
            reset_run_context(token)
