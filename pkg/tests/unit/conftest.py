"""Fixtures for levy_impulse unit tests; models and OTel fixtures live in tests/conftest.py."""

from __future__ import annotations

import pytest

from levy_impulse.config import Numerics


@pytest.fixture()
def fast_numerics() -> Numerics:
    """Small Monte Carlo budgets for unit-speed runs."""
    return Numerics(mc_paths=200, mc_cycles=2_000, workers=1)
