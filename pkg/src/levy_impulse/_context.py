"""Per-operation context management using contextvars."""

from __future__ import annotations

import time
from contextvars import ContextVar, Token
from dataclasses import dataclass, field
from typing import Any

from opentelemetry.trace import Span, set_span_in_context

from levy_impulse._constants import EVENT_BIG_G, LEVY_EVAL_RHO, LEVY_EVAL_VALUE


@dataclass
class RunContext:
    """State of the innermost instrumented operation.

    Nested operations start their spans under ``parent_otel_context``.
    """

    span: Span
    operation: str
    start_time: float = field(default_factory=time.monotonic)
    capture_evaluations: bool = False
    evaluations: int = 0
    parent_otel_context: Any = field(default=None, repr=False)

    def __post_init__(self) -> None:
        if self.parent_otel_context is None:
            self.parent_otel_context = set_span_in_context(self.span)


_run_context_var: ContextVar[RunContext | None] = ContextVar("levy_impulse_run_context", default=None)


def get_run_context() -> RunContext | None:
    """Get the current run context."""
    return _run_context_var.get()


def set_run_context(ctx: RunContext | None) -> Token[RunContext | None]:
    """Set the current run context; the token restores the previous one."""
    return _run_context_var.set(ctx)


def reset_run_context(token: Token[RunContext | None]) -> None:
    _run_context_var.reset(token)


def record_evaluation(rho: float, value: float) -> None:
    """Add a 𝔊(ρ) evaluation event to the current span when capture is on."""
    ctx = _run_context_var.get()
    if ctx is None:
        return
    ctx.evaluations += 1
    if ctx.capture_evaluations:
        ctx.span.add_event(EVENT_BIG_G, {LEVY_EVAL_RHO: float(rho), LEVY_EVAL_VALUE: float(value)})
