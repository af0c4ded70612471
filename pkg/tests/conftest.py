"""Shared test fixtures for the unit and integration suites."""

from __future__ import annotations

import pytest
from opentelemetry.sdk.metrics import MeterProvider as SDKMeterProvider
from opentelemetry.sdk.metrics.export import InMemoryMetricReader
from opentelemetry.sdk.trace import TracerProvider as SDKTracerProvider
from opentelemetry.sdk.trace.export import SimpleSpanProcessor
from opentelemetry.sdk.trace.export.in_memory_span_exporter import InMemorySpanExporter

from levy_impulse._instrumentor import LevyImpulseInstrumentor
from levy_impulse.process import JumpLaw, LevyModel
from levy_impulse.transform import Cost, Gamma, PayoffSpec

# --- Model Fixtures ---


@pytest.fixture()
def brownian() -> LevyModel:
    """X_t = t + √2·W_t; q = 1, pure-drift ladder with δ_H = 1."""
    return LevyModel(drift=1.0, sigma2=2.0)


@pytest.fixture()
def pure_drift() -> LevyModel:
    return LevyModel(drift=1.0)


@pytest.fixture()
def spectrally_positive() -> LevyModel:
    """Drift −1 with exponential(1) upward jumps at rate 4: mean 3, q = 3, driftless ladder."""
    return LevyModel(drift=-1.0, jump_rate=4.0, jump_law=JumpLaw.exponential_up(1.0))


@pytest.fixture()
def spectrally_negative() -> LevyModel:
    """Drift 2 with exponential(1) downward jumps at rate 1: mean 1."""
    return LevyModel(drift=2.0, jump_rate=1.0, jump_law=JumpLaw.exponential_down(1.0))


@pytest.fixture()
def unit_jumps() -> LevyModel:
    """Drift −1 with unit upward jumps at rate 2: mean 1, driftless ladder with a bounded jump law."""
    return LevyModel(drift=-1.0, jump_rate=2.0, jump_law=JumpLaw.deterministic(1.0))


@pytest.fixture()
def quadratic_payoff() -> PayoffSpec:
    """γ(x) = x, h(x) = x², K = 4/3."""
    return PayoffSpec(Gamma.linear(1.0), Cost.polynomial(0.0, 0.0, 1.0), 4.0 / 3.0)


# --- OTel Test Fixtures ---


@pytest.fixture()
def span_exporter() -> InMemorySpanExporter:
    """Create an in-memory span exporter for testing."""
    return InMemorySpanExporter()


@pytest.fixture()
def tracer_provider(span_exporter: InMemorySpanExporter) -> SDKTracerProvider:
    """Create a TracerProvider with in-memory exporter for testing."""
    provider = SDKTracerProvider()
    provider.add_span_processor(SimpleSpanProcessor(span_exporter))
    return provider


@pytest.fixture()
def metric_reader() -> InMemoryMetricReader:
    """Create an in-memory metric reader for testing."""
    return InMemoryMetricReader()


@pytest.fixture()
def meter_provider(metric_reader: InMemoryMetricReader) -> SDKMeterProvider:
    """Create a MeterProvider with in-memory reader for testing."""
    return SDKMeterProvider(metric_readers=[metric_reader])


@pytest.fixture()
def instrumentor(tracer_provider: SDKTracerProvider, meter_provider: SDKMeterProvider):
    """Instrumented for the duration of one test."""
    inst = LevyImpulseInstrumentor()
    inst.instrument(tracer_provider=tracer_provider, meter_provider=meter_provider)
    yield inst
    inst.uninstrument()
