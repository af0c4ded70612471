"""Numerical configuration shared by the solver, simulator and command line."""

from __future__ import annotations

import os
from dataclasses import asdict, dataclass, field, fields
from enum import Enum
from typing import Any

THREADS_ENV_VAR = "LEVY_IMPULSE_THREADS"


class AuditLevel(str, Enum):
    """How much cross-checking the solver performs on its own shortcuts."""

    FAST = "fast"
    STANDARD = "standard"
    HIGH = "high"


def workers_from_env() -> int:
    """Thread count for cycle simulation, from ``LEVY_IMPULSE_THREADS`` (default 1)."""
    raw = os.environ.get(THREADS_ENV_VAR, "").strip()
    if not raw:
        return 1
    try:
        value = int(raw)
    except ValueError:
        return 1
    return max(1, value)


@dataclass(frozen=True)
class Numerics:
    """Numeric knobs of one problem run.

    ``grid_step=None`` means automatic: the interval length divided by 2000.
    Tolerances ``tol_rho`` and ``tol_g`` are relative (to max g and K).
    """

    dt: float = 1e-3
    grid_step: float | None = None
    working_bound: float = 1e3
    initial_width: float = 8.0
    scan_points: int = 4001
    mc_paths: int = 2000
    mc_cycles: int = 100_000
    seed: int = 42
    tol_rho: float = 1e-9
    tol_g: float = 1e-8
    audit: AuditLevel = AuditLevel.STANDARD
    max_time: float = 1e4
    ladder_horizon: float = 200.0
    min_records: int = 100
    volterra_tol: float = 1e-6
    max_halvings: int = 4
    max_bisections: int = 200
    workers: int = field(default_factory=workers_from_env)

    def __post_init__(self) -> None:
        if not isinstance(self.audit, AuditLevel):
            object.__setattr__(self, "audit", AuditLevel(self.audit))
        for f in fields(self):
            if f.name in ("audit", "seed", "grid_step"):
                continue
            value = getattr(self, f.name)
            if value <= 0:
                raise ValueError(f"{f.name} must be positive, got {value!r}")
        if self.grid_step is not None and self.grid_step <= 0:
            raise ValueError(f"grid_step must be positive, got {self.grid_step!r}")
        if self.seed < 0:
            raise ValueError(f"seed must be nonnegative, got {self.seed!r}")

    def step_for(self, length: float) -> float:
        """Grid step for an interval of the given length."""
        if self.grid_step is not None:
            return self.grid_step
        return max(length, 1e-12) / 2000.0

    def to_dict(self) -> dict[str, Any]:
        data = asdict(self)
        data["audit"] = self.audit.value
        return data

    @classmethod
    def from_dict(cls, data: dict[str, Any]) -> Numerics:
        known = {f.name for f in fields(cls)}
        unknown = set(data) - known
        if unknown:
            raise ValueError(f"unknown numerics keys: {sorted(unknown)}")
        return cls(**data)
