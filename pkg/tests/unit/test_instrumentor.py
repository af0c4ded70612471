"""Tests for LevyImpulseInstrumentor lifecycle and traced operations."""

from __future__ import annotations

import pytest
from opentelemetry.trace import StatusCode

import levy_impulse.ladder as ladder_ops
import levy_impulse.simulate as simulate_ops
import levy_impulse.solver as solver_ops
from levy_impulse._constants import (
    ERROR_TYPE,
    EVENT_BIG_G,
    LEVY_OPERATION_DURATION,
    LEVY_OPERATION_NAME,
    LEVY_PROCESS_CLASS,
    LEVY_SOLUTION_RHO_STAR,
    LEVY_SOLVER_ITERATIONS,
)
from levy_impulse._instrumentor import LevyImpulseInstrumentor
from levy_impulse.config import Numerics
from levy_impulse.errors import NoThresholdError
from levy_impulse.transform import Cost, Gamma, PayoffSpec, Restart


def _metric_points(metric_reader, name):
    for rm in metric_reader.get_metrics_data().resource_metrics:
        for sm in rm.scope_metrics:
            for metric in sm.metrics:
                if metric.name == name:
                    return list(metric.data.data_points)
    return []


class TestLifecycle:
    def test_instrumentation_dependencies(self):
        assert list(LevyImpulseInstrumentor().instrumentation_dependencies()) == []

    def test_wraps_and_restores_targets(self, tracer_provider, meter_provider):
        originals = {
            "build_ladder_system": ladder_ops.build_ladder_system,
            "solve": solver_ops.solve,
            "run_policy": simulate_ops.run_policy,
        }
        inst = LevyImpulseInstrumentor()
        inst.instrument(tracer_provider=tracer_provider, meter_provider=meter_provider)
        try:
            assert hasattr(ladder_ops.build_ladder_system, "__wrapped__")
            assert hasattr(solver_ops.solve, "__wrapped__")
            assert hasattr(solver_ops.solve_fixed_restart, "__wrapped__")
            assert hasattr(simulate_ops.run_policy, "__wrapped__")
            assert hasattr(simulate_ops.verify_solution, "__wrapped__")
        finally:
            inst.uninstrument()

        assert ladder_ops.build_ladder_system is originals["build_ladder_system"]
        assert solver_ops.solve is originals["solve"]
        assert simulate_ops.run_policy is originals["run_policy"]

    def test_no_spans_after_uninstrument(self, tracer_provider, meter_provider, span_exporter, brownian):
        inst = LevyImpulseInstrumentor()
        inst.instrument(tracer_provider=tracer_provider, meter_provider=meter_provider)
        inst.uninstrument()

        ladder_ops.build_ladder_system(brownian)
        assert span_exporter.get_finished_spans() == ()


class TestTracedSolve:
    def test_solve_span_with_nested_ladder_span(self, instrumentor, span_exporter, brownian, quadratic_payoff):
        solution = solver_ops.solve(brownian, quadratic_payoff)

        spans = {s.name: s for s in span_exporter.get_finished_spans()}
        assert set(spans) == {"levy.solve", "levy.build_ladder_system"}
        solve_span = spans["levy.solve"]
        ladder_span = spans["levy.build_ladder_system"]
        assert ladder_span.parent is not None
        assert ladder_span.parent.span_id == solve_span.context.span_id

        attrs = dict(solve_span.attributes or {})
        assert attrs[LEVY_OPERATION_NAME] == "solve"
        assert attrs[LEVY_PROCESS_CLASS] == "two-sided"
        assert attrs[LEVY_SOLUTION_RHO_STAR] == pytest.approx(solution.rho_star)

    def test_fixed_restart_nests_under_solve(self, instrumentor, span_exporter, brownian):
        payoff = PayoffSpec(Gamma.linear(1.0), Cost.polynomial(0.0, 0.0, 1.0), 4.0 / 3.0, Restart.fixed(0.0))
        solver_ops.solve(brownian, payoff)

        spans = {s.name: s for s in span_exporter.get_finished_spans()}
        assert spans["levy.solve_fixed_restart"].parent.span_id == spans["levy.solve"].context.span_id

    def test_records_duration_and_iterations(self, instrumentor, metric_reader, brownian, quadratic_payoff):
        solution = solver_ops.solve(brownian, quadratic_payoff)

        iterations = _metric_points(metric_reader, LEVY_SOLVER_ITERATIONS)
        assert len(iterations) == 1
        assert iterations[0].sum == solution.iterations

        durations = _metric_points(metric_reader, LEVY_OPERATION_DURATION)
        operations = {dict(p.attributes)[LEVY_OPERATION_NAME] for p in durations}
        assert operations == {"solve", "build_ladder_system"}

    def test_error_sets_status_and_metric_dimension(self, instrumentor, span_exporter, metric_reader, brownian):
        payoff = PayoffSpec(Gamma.linear(1.0), Cost.zero(), 1.0)
        with pytest.raises(NoThresholdError):
            solver_ops.solve(brownian, payoff)

        solve_span = next(s for s in span_exporter.get_finished_spans() if s.name == "levy.solve")
        assert solve_span.status.status_code == StatusCode.ERROR
        assert dict(solve_span.attributes or {})[ERROR_TYPE] == "NoThresholdError"

        durations = _metric_points(metric_reader, LEVY_OPERATION_DURATION)
        failed = [p for p in durations if dict(p.attributes)[LEVY_OPERATION_NAME] == "solve"]
        assert dict(failed[0].attributes)[ERROR_TYPE] == "NoThresholdError"
        assert _metric_points(metric_reader, LEVY_SOLVER_ITERATIONS) == []

    def test_evaluations_are_not_events_by_default(self, instrumentor, span_exporter, brownian, quadratic_payoff):
        solver_ops.solve(brownian, quadratic_payoff)

        solve_span = next(s for s in span_exporter.get_finished_spans() if s.name == "levy.solve")
        assert len(solve_span.events) == 0


class TestCaptureEvaluations:
    def test_big_g_events(self, tracer_provider, meter_provider, span_exporter, brownian, quadratic_payoff):
        inst = LevyImpulseInstrumentor()
        inst.instrument(tracer_provider=tracer_provider, meter_provider=meter_provider, capture_evaluations=True)
        try:
            solver_ops.solve(brownian, quadratic_payoff)
        finally:
            inst.uninstrument()

        solve_span = next(s for s in span_exporter.get_finished_spans() if s.name == "levy.solve")
        events = [e for e in solve_span.events if e.name == EVENT_BIG_G]
        assert len(events) >= 2
        assert {"levy.eval.rho", "levy.eval.value"} <= set(events[0].attributes)


class TestTracedSimulation:
    def test_verify_nests_run_policy(self, instrumentor, span_exporter, pure_drift):
        numerics = Numerics(mc_cycles=10, workers=1)
        payoff = PayoffSpec(Gamma.linear(1.0), Cost.polynomial(0.0, 0.0, 1.0), 0.5)
        solution = solver_ops.solve(pure_drift, payoff, numerics)
        span_exporter.clear()

        report = simulate_ops.verify_solution(pure_drift, payoff, solution, numerics, grid_cycles=5)

        spans = span_exporter.get_finished_spans()
        verify_span = next(s for s in spans if s.name == "levy.verify_solution")
        runs = [s for s in spans if s.name == "levy.run_policy"]
        # one direct simulation plus the nine grid cells
        assert len(runs) == 10
        assert all(r.parent.span_id == verify_span.context.span_id for r in runs)
        assert dict(verify_span.attributes or {})["levy.verification.passed"] is report.passed
