"""Integration tests for command-line runs under instrumentation."""

from __future__ import annotations

import json
from io import StringIO

import pytest

from levy_impulse._constants import (
    EXIT_DEGENERATE,
    EXIT_OK,
    LEVY_OPERATION_DURATION,
    LEVY_OPERATION_NAME,
    LEVY_SIMULATION_CYCLES,
    LEVY_SOLUTION_DEGENERACY,
)
from levy_impulse.cli import main
from tests.integration.conftest import get_operation_spans

pytestmark = pytest.mark.integration


def _run(*argv: str) -> tuple[int, str]:
    out = StringIO()
    code = main(list(argv), out=out)
    return code, out.getvalue()


class TestInstrumentedCommands:
    def test_simulate_preset_produces_solver_and_simulation_spans(self, instrumentor, span_exporter):
        code, stdout = _run("simulate", "--preset", "brownian-quadratic", "--cycles", "2000")

        assert code == EXIT_OK
        document = json.loads(stdout)
        assert document["simulation"]["n_cycles"] == 2000

        (solve_span,) = get_operation_spans(span_exporter, "solve")
        (ladder_span,) = get_operation_spans(span_exporter, "build_ladder_system")
        (run_span,) = get_operation_spans(span_exporter, "run_policy")
        assert ladder_span.parent.span_id == solve_span.context.span_id
        assert run_span.parent is None
        assert dict(run_span.attributes or {})[LEVY_SIMULATION_CYCLES] == 2000

    def test_inventory_solve_records_metrics(self, instrumentor, span_exporter, metric_reader):
        code, stdout = _run("solve", "--preset", "inventory")

        assert code == EXIT_OK
        assert json.loads(stdout)["solution"]["degeneracy"] == "none"
        (solve_span,) = get_operation_spans(span_exporter, "solve")
        assert dict(solve_span.attributes or {})[LEVY_SOLUTION_DEGENERACY] == "none"

        operations = set()
        for rm in metric_reader.get_metrics_data().resource_metrics:
            for sm in rm.scope_metrics:
                for metric in sm.metrics:
                    if metric.name == LEVY_OPERATION_DURATION:
                        operations |= {dict(p.attributes)[LEVY_OPERATION_NAME] for p in metric.data.data_points}
        assert operations == {"solve", "build_ladder_system"}

    def test_degenerate_verify_leaves_an_error_span(self, instrumentor, span_exporter, tmp_path):
        spec = {
            "process": {"drift": 1.0},
            "payoff": {"gamma": {"kind": "linear", "params": [1.0]}, "h": {"kind": "zero"}, "K": 0.5},
        }
        path = tmp_path / "flat.json"
        path.write_text(json.dumps(spec), encoding="utf-8")

        code, stdout = _run("verify", str(path))

        assert code == EXIT_DEGENERATE
        assert json.loads(stdout)["degeneracy"] == "no-threshold"
        (solve_span,) = get_operation_spans(span_exporter, "solve")
        assert dict(solve_span.attributes or {})["error.type"] == "NoThresholdError"
        assert get_operation_spans(span_exporter, "verify_solution") == []
