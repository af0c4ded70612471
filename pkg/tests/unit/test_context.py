"""Tests for RunContext and ContextVar management."""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor

from opentelemetry.trace import get_current_span

from levy_impulse._constants import EVENT_BIG_G, LEVY_EVAL_RHO, LEVY_EVAL_VALUE
from levy_impulse._context import (
    RunContext,
    get_run_context,
    record_evaluation,
    reset_run_context,
    set_run_context,
)


class TestRunContextCreation:
    def test_defaults(self, tracer_provider):
        span = tracer_provider.get_tracer("test").start_span("test")
        ctx = RunContext(span=span, operation="solve")

        assert ctx.span is span
        assert ctx.capture_evaluations is False
        assert ctx.evaluations == 0
        assert ctx.start_time > 0
        span.end()

    def test_parent_context_carries_the_span(self, tracer_provider):
        span = tracer_provider.get_tracer("test").start_span("test")
        ctx = RunContext(span=span, operation="solve")

        assert get_current_span(ctx.parent_otel_context) is span
        span.end()


class TestContextVar:
    def test_default_is_none(self):
        assert get_run_context() is None

    def test_set_and_reset(self, tracer_provider):
        span = tracer_provider.get_tracer("test").start_span("test")
        outer = RunContext(span=span, operation="solve")
        inner = RunContext(span=span, operation="build_ladder_system")

        outer_token = set_run_context(outer)
        inner_token = set_run_context(inner)
        assert get_run_context() is inner
        reset_run_context(inner_token)
        assert get_run_context() is outer
        reset_run_context(outer_token)
        assert get_run_context() is None
        span.end()

    def test_worker_threads_do_not_see_the_context(self, tracer_provider):
        span = tracer_provider.get_tracer("test").start_span("test")
        token = set_run_context(RunContext(span=span, operation="run_policy"))
        try:
            with ThreadPoolExecutor(max_workers=1) as pool:
                assert pool.submit(get_run_context).result() is None
        finally:
            reset_run_context(token)
        span.end()


class TestRecordEvaluation:
    def test_noop_without_context(self):
        record_evaluation(-1.0, 0.5)
        assert get_run_context() is None

    def test_counts_without_events_by_default(self, tracer_provider, span_exporter):
        span = tracer_provider.get_tracer("test").start_span("test")
        ctx = RunContext(span=span, operation="solve")
        token = set_run_context(ctx)
        try:
            record_evaluation(-1.0, 0.5)
            record_evaluation(-0.5, -0.25)
        finally:
            reset_run_context(token)
        span.end()

        assert ctx.evaluations == 2
        assert len(span_exporter.get_finished_spans()[0].events) == 0

    def test_adds_events_when_capturing(self, tracer_provider, span_exporter):
        span = tracer_provider.get_tracer("test").start_span("test")
        token = set_run_context(RunContext(span=span, operation="solve", capture_evaluations=True))
        try:
            record_evaluation(-1.0, 0.5)
        finally:
            reset_run_context(token)
        span.end()

        events = span_exporter.get_finished_spans()[0].events
        assert len(events) == 1
        assert events[0].name == EVENT_BIG_G
        assert events[0].attributes[LEVY_EVAL_RHO] == -1.0
        assert events[0].attributes[LEVY_EVAL_VALUE] == 0.5
