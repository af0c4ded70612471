"""Helpers for the Monte Carlo acceptance suites; fixtures live in tests/conftest.py."""

from __future__ import annotations

import math

import numpy as np
from opentelemetry.sdk.trace.export.in_memory_span_exporter import InMemorySpanExporter


def mean_and_se(samples: np.ndarray) -> tuple[float, float]:
    """Sample mean and its standard error."""
    return float(samples.mean()), float(samples.std(ddof=1) / math.sqrt(len(samples)))


def get_operation_spans(exporter: InMemorySpanExporter, operation: str) -> list:
    return [s for s in exporter.get_finished_spans() if s.name == f"levy.{operation}"]
