"""Monte Carlo evaluation of threshold strategies and numerical verification of solver output.

Each cycle starts at the restart point and runs until X first reaches S; cycle i
draws from its own substream, so reports depend only on (seed, dt, n_cycles).
"""

from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any

import numpy as np
from scipy import integrate

import levy_impulse.solver as solver_ops
from levy_impulse.config import AuditLevel, Numerics
from levy_impulse.errors import ZeroCycleTimeError
from levy_impulse.process import (
    FloatArray,
    PathIntegral,
    mean_rate,
    path_rng,
    simulate_first_passage,
    simulate_path,
)
from levy_impulse.transform import RestartMode

if TYPE_CHECKING:
    from levy_impulse.process import LevyModel
    from levy_impulse.solver import PolicySolution, SolverContext
    from levy_impulse.transform import PayoffSpec

logger = logging.getLogger(__name__)

_Z95 = 1.959963984540054

# expected overshoot of a discretely monitored Brownian passage is about 0.5826·σ·√dt
MONITORING_OVERSHOOT = 0.5826


class StrategyKind(str, Enum):
    BAND = "band"
    FIXED_RESTART = "fixed-restart"


@dataclass(frozen=True)
class Strategy:
    """Shift the state down to ``restart`` whenever it reaches ``trigger``."""

    kind: StrategyKind
    restart: float
    trigger: float

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", StrategyKind(self.kind))
        if not (math.isfinite(self.restart) and math.isfinite(self.trigger)):
            raise ValueError(f"strategy thresholds must be finite, got ({self.restart!r}, {self.trigger!r})")
        if self.restart > self.trigger:
            raise ValueError(f"restart point {self.restart!r} lies above the trigger {self.trigger!r}")

    @classmethod
    def band(cls, s: float, S: float) -> Strategy:
        return cls(StrategyKind.BAND, float(s), float(S))

    @classmethod
    def fixed_restart(cls, y0: float, S: float) -> Strategy:
        return cls(StrategyKind.FIXED_RESTART, float(y0), float(S))

    @classmethod
    def from_solution(cls, solution: PolicySolution) -> Strategy:
        if solution.restart is RestartMode.FIXED:
            return cls.fixed_restart(solution.s, solution.S)
        return cls.band(solution.s, solution.S)

    @property
    def s(self) -> float:
        return self.restart

    @property
    def S(self) -> float:
        return self.trigger

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "s": self.restart, "S": self.trigger}


@dataclass(frozen=True, eq=False)
class SimulationReport:
    n_cycles: int
    j_hat: float
    se: float
    ci95: tuple[float, float] | None
    mean_cycle_time: float
    mean_cycle_reward: float
    mean_cycle_cost: float
    seed: int
    dt: float
    strategy: Strategy
    cycle_times: FloatArray = field(repr=False)
    cycle_rewards: FloatArray = field(repr=False)
    cycle_costs: FloatArray = field(repr=False)
    trigger_states: FloatArray = field(repr=False)

    def truncated_average(self, horizon: float) -> float:
        """Σ_{τ_n ≤ T} R_n / T over the same sample laid end to end."""
        ends = np.cumsum(self.cycle_times)
        if not 0 < horizon <= ends[-1]:
            raise ValueError(f"horizon must lie in (0, {ends[-1]:.6g}], got {horizon!r}")
        done = int(np.searchsorted(ends, horizon, side="right"))
        return math.fsum(self.cycle_rewards[:done]) / horizon

    def batch_means_se(self, batches: int = 20) -> float:
        """Standard error of J from the spread of per-batch ratio estimates."""
        if self.n_cycles < 2 * batches:
            raise ValueError(f"need at least {2 * batches} cycles for {batches} batches")
        parts = np.array_split(np.arange(self.n_cycles), batches)
        ratios = np.array([
            math.fsum(self.cycle_rewards[p]) / math.fsum(self.cycle_times[p]) for p in parts
        ])
        return float(np.std(ratios, ddof=1) / math.sqrt(batches))

    def to_dict(self) -> dict[str, Any]:
        return {
            "n_cycles": self.n_cycles,
            "J_hat": self.j_hat,
            "SE": self.se,
            "ci95": list(self.ci95) if self.ci95 is not None else None,
            "mean_cycle_time": self.mean_cycle_time,
            "mean_cycle_reward": self.mean_cycle_reward,
            "mean_cycle_cost": self.mean_cycle_cost,
            "seed": self.seed,
            "dt": self.dt,
            "strategy": self.strategy.to_dict(),
        }


# --- Cycles ---


def _run_cycles(
    model: LevyModel,
    payoff: PayoffSpec,
    strategy: Strategy,
    indices: range,
    dt: float,
    seed: int,
    max_time: float,
) -> tuple[FloatArray, FloatArray, FloatArray]:
    n = len(indices)
    times, costs, states = np.empty(n), np.zeros(n), np.empty(n)
    track_cost = not payoff.h.is_zero
    for k, i in enumerate(indices):
        cost = PathIntegral(payoff.h) if track_cost else None
        passage = simulate_first_passage(
            model, strategy.restart, strategy.trigger, dt, path_rng(seed, i),
            on_segment=cost, max_time=max_time,
        )
        times[k] = passage.time
        states[k] = passage.state
        if cost is not None:
            costs[k] = cost.total
    return times, costs, states


def run_policy(
    model: LevyModel,
    payoff: PayoffSpec,
    strategy: Strategy,
    n_cycles: int = 100_000,
    dt: float = 1e-3,
    seed: int = 42,
    *,
    workers: int = 1,
    max_time: float = 1e4,
) -> SimulationReport:
    """Renewal-reward estimate of the long-run average of ``strategy``.

    J_hat = Σ rewards / Σ cycle times with a delta-method standard error.
    """
    if n_cycles < 1:
        raise ValueError(f"n_cycles must be positive, got {n_cycles!r}")
    if not strategy.restart < strategy.trigger:
        raise ZeroCycleTimeError(
            f"restart {strategy.restart!r} equals the trigger: every cycle ends immediately"
        )

    workers = max(1, min(workers, n_cycles))
    blocks = [range(b[0], b[-1] + 1) for b in np.array_split(np.arange(n_cycles), workers) if len(b)]
    if workers == 1:
        parts = [_run_cycles(model, payoff, strategy, blocks[0], dt, seed, max_time)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            parts = list(pool.map(
                lambda block: _run_cycles(model, payoff, strategy, block, dt, seed, max_time), blocks
            ))
    times = np.concatenate([p[0] for p in parts])
    costs = np.concatenate([p[1] for p in parts])
    states = np.concatenate([p[2] for p in parts])

    gains = payoff.gamma(states) - float(payoff.gamma(np.asarray([strategy.restart]))[0])
    rewards = gains - payoff.K - costs
    total_time = math.fsum(times)
    if not total_time > 0:
        raise ZeroCycleTimeError("simulated cycles have zero total duration")
    j_hat = math.fsum(rewards) / total_time
    mean_time = total_time / n_cycles

    se = 0.0
    if n_cycles >= 2:
        residuals = rewards - j_hat * times
        se = float(np.std(residuals, ddof=1) / (mean_time * math.sqrt(n_cycles)))
    ci95 = (j_hat - _Z95 * se, j_hat + _Z95 * se) if n_cycles >= 100 else None
    logger.debug("simulated %d cycles of %s: J = %.6g ± %.3g", n_cycles, strategy.kind.value, j_hat, se)
    return SimulationReport(
        n_cycles=n_cycles,
        j_hat=j_hat,
        se=se,
        ci95=ci95,
        mean_cycle_time=mean_time,
        mean_cycle_reward=math.fsum(rewards) / n_cycles,
        mean_cycle_cost=math.fsum(costs) / n_cycles,
        seed=seed,
        dt=dt,
        strategy=strategy,
        cycle_times=times,
        cycle_rewards=rewards,
        cycle_costs=costs,
        trigger_states=states,
    )


def passage_delay(model: LevyModel, dt: float) -> float:
    """Mean lag of a grid-detected creeping passage behind the true one."""
    return MONITORING_OVERSHOOT * math.sqrt(model.sigma2 * dt) / mean_rate(model)


def monitoring_bias(model: LevyModel, payoff: PayoffSpec, S: float, rho: float, report: SimulationReport) -> float:
    """Expected size of the bias in ``report.j_hat`` from checking X ≥ S on the Euler grid only.

    A creeping passage is seen late by about 0.5826·σ·√dt / E(X₁), time spent near S
    at cost h(S) while the average is ρ.
    """
    if model.sigma2 == 0 or not math.isfinite(S):
        return 0.0
    delay = passage_delay(model, report.dt)
    cost = float(payoff.h(np.asarray([S]))[0])
    return abs(cost + rho) * delay / report.mean_cycle_time


# --- Perturbation grid ---


@dataclass(frozen=True)
class GridCell:
    strategy: Strategy
    report: SimulationReport | None
    improves: bool = False

    def to_dict(self) -> dict[str, Any]:
        report = self.report
        return {
            **self.strategy.to_dict(),
            "J_hat": report.j_hat if report else None,
            "SE": report.se if report else None,
            "improves": self.improves,
        }


@dataclass(frozen=True)
class PerturbationGrid:
    centre: GridCell
    cells: list[GridCell]
    delta: float

    @property
    def flagged(self) -> list[GridCell]:
        return [c for c in self.cells if c.improves]

    def to_dict(self) -> dict[str, Any]:
        return {"delta": self.delta, "cells": [c.to_dict() for c in self.cells]}


def perturbation_grid(
    model: LevyModel,
    payoff: PayoffSpec,
    solution: PolicySolution,
    delta: float,
    n_cycles: int = 10_000,
    seed: int = 42,
    *,
    dt: float = 1e-3,
    workers: int = 1,
    max_time: float = 1e4,
) -> PerturbationGrid:
    """J_hat over {s−δ, s, s+δ} × {S−δ, S, S+δ}, all cells on common random numbers.

    A fixed-restart solution only moves S. A neighbour is flagged when it beats
    the centre by more than 3·√(SE_centre² + SE_neighbour²).
    """
    if delta < 0:
        raise ValueError(f"delta must be nonnegative, got {delta!r}")
    centre_strategy = Strategy.from_solution(solution)
    fixed = centre_strategy.kind is StrategyKind.FIXED_RESTART
    restarts = [solution.s] if fixed else [solution.s - delta, solution.s, solution.s + delta]
    triggers = [solution.S - delta, solution.S, solution.S + delta]

    def evaluate(strategy: Strategy) -> SimulationReport:
        return run_policy(model, payoff, strategy, n_cycles, dt, seed, workers=workers, max_time=max_time)

    centre_report = evaluate(centre_strategy)
    centre = GridCell(centre_strategy, centre_report)
    cells: list[GridCell] = []
    for s in restarts:
        for S in triggers:
            if s == solution.s and S == solution.S:
                cells.append(centre)
                continue
            if not s < S:
                cells.append(GridCell(Strategy(centre_strategy.kind, min(s, S), S), None))
                continue
            strategy = Strategy(centre_strategy.kind, s, S)
            report = evaluate(strategy)
            margin = 3.0 * math.hypot(centre_report.se, report.se)
            cells.append(GridCell(strategy, report, report.j_hat - centre_report.j_hat > margin))
    grid = PerturbationGrid(centre, cells, delta)
    if grid.flagged:
        logger.info("%d neighbour(s) of (%.6g, %.6g) beat the centre", len(grid.flagged), solution.s, solution.S)
    return grid


# --- Verification ---


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    magnitude: float
    tolerance: float
    detail: str = ""

    def to_dict(self) -> dict[str, Any]:
        return {
            "name": self.name,
            "passed": self.passed,
            "magnitude": self.magnitude,
            "tolerance": self.tolerance,
            "detail": self.detail,
        }


@dataclass(frozen=True)
class VerificationReport:
    checks: list[CheckResult]
    simulation: SimulationReport | None = None
    grid: PerturbationGrid | None = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> CheckResult:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def to_dict(self) -> dict[str, Any]:
        return {
            "passed": self.passed,
            "checks": [c.to_dict() for c in self.checks],
            "simulation": self.simulation.to_dict() if self.simulation else None,
            "grid": self.grid.to_dict() if self.grid else None,
        }


def verify_solution(
    model: LevyModel,
    payoff: PayoffSpec,
    solution: PolicySolution,
    numerics: Numerics | None = None,
    *,
    n_cycles: int | None = None,
    grid_cycles: int | None = None,
    delta: float = 0.25,
    supermartingale: bool = False,
) -> VerificationReport:
    """Check a solution against its optimality conditions, analytically and by simulation.

    ``threshold`` g(S) = ρ*, ``cycle`` Ξ_ρ*(s) = K, ``simulation`` J_hat ≈ ρ*,
    ``perturbation`` no neighbouring band does better, and optionally
    ``supermartingale`` on the relative value γ + Ξ_ρ*.
    """
    numerics = numerics or Numerics()
    if solution.degeneracy is not solver_ops.Degeneracy.NONE:
        check = CheckResult("degeneracy", False, math.nan, 0.0, f"solution is {solution.degeneracy.value}")
        return VerificationReport([check])

    context = solution.context or solver_ops.context_for(model, payoff, numerics)
    rho = solution.rho_star
    checks: list[CheckResult] = []

    g_at_S = float(context.g(np.asarray([solution.S]))[0])
    tol = 1e-8 * max(1.0, abs(solution.g_max), abs(rho))
    checks.append(CheckResult("threshold", abs(g_at_S - rho) <= tol, abs(g_at_S - rho), tol, f"g(S) = {g_at_S:.10g}"))

    cycle = context.big_g.xi(rho, solution.s, solution.S)
    tol = 1e-6 * max(1.0, payoff.K)
    checks.append(CheckResult("cycle", abs(cycle - payoff.K) <= tol, abs(cycle - payoff.K), tol, f"Xi(s) = {cycle:.10g}"))

    n_cycles = n_cycles or numerics.mc_cycles
    report = run_policy(
        model, payoff, Strategy.from_solution(solution), n_cycles, numerics.dt, numerics.seed,
        workers=numerics.workers, max_time=numerics.max_time,
    )
    se = report.se
    if numerics.audit is AuditLevel.HIGH and report.n_cycles >= 40:
        se = max(se, report.batch_means_se())
    allowance = monitoring_bias(model, payoff, solution.S, rho, report)
    tol = max(3.0 * se, 0.02) + allowance
    gap = abs(report.j_hat - rho)
    detail = f"J_hat = {report.j_hat:.6g} ± {report.se:.3g}, monitoring allowance {allowance:.3g}"
    checks.append(CheckResult("simulation", gap <= tol, gap, tol, detail))

    grid = perturbation_grid(
        model, payoff, solution, delta, grid_cycles or min(n_cycles, 10_000), numerics.seed,
        dt=numerics.dt, workers=numerics.workers, max_time=numerics.max_time,
    )
    worst = max((c.report.j_hat - grid.centre.report.j_hat for c in grid.cells if c.report), default=0.0)  # type: ignore[union-attr]
    checks.append(CheckResult("perturbation", not grid.flagged, worst, 0.0, f"{len(grid.flagged)} improving neighbour(s)"))

    if supermartingale:
        checks.append(_supermartingale_check(model, payoff, solution, context, numerics))

    verdict = "passed" if all(c.passed for c in checks) else "failed"
    logger.info("verification %s: %s", verdict, ", ".join(f"{c.name}={'ok' if c.passed else 'FAIL'}" for c in checks))
    return VerificationReport(checks, report, grid)


def _supermartingale_check(
    model: LevyModel,
    payoff: PayoffSpec,
    solution: PolicySolution,
    context: SolverContext,
    numerics: Numerics,
    times: tuple[float, ...] = (0.5, 1.0, 2.0),
) -> CheckResult:
    """E_x[w(X_t) − ∫₀^t(h + ρ*)] nonincreasing in t for w = γ + G, G = Ξ_ρ* below S."""
    rho, S = solution.rho_star, solution.S
    starts = (solution.s, 0.5 * (solution.s + S), S)
    horizon = max(times)
    n_paths = numerics.mc_paths

    paths = [
        [simulate_path(model, x, horizon, numerics.dt, path_rng(numerics.seed, 1_000_000 * j + i)) for i in range(n_paths)]
        for j, x in enumerate(starts)
    ]
    low = min(float(np.min(p.states)) for group in paths for p in group)
    grid = np.linspace(min(low, solution.s) - 1e-9, S, 401)
    table = np.array([context.big_g.xi(rho, x, S) for x in grid])

    def relative_value(x: FloatArray) -> FloatArray:
        continuation = np.where(x < S, np.interp(x, grid, table), 0.0)
        return payoff.gamma(x) + continuation

    worst = -math.inf
    passed = True
    for group in paths:
        samples = np.empty((n_paths, len(times)))
        for i, path in enumerate(group):
            running = np.concatenate(([0.0], integrate.cumulative_trapezoid(payoff.h(path.states) + rho, path.times)))
            at = np.interp(times, path.times, path.states)
            samples[i] = relative_value(at) - np.interp(times, path.times, running)
        for k in range(len(times) - 1):
            diff = samples[:, k + 1] - samples[:, k]
            excess = float(np.mean(diff))
            margin = 3.0 * float(np.std(diff, ddof=1)) / math.sqrt(n_paths)
            worst = max(worst, excess - margin)
            passed = passed and excess <= margin
    return CheckResult("supermartingale", passed, worst, 0.0, f"starts {', '.join(f'{x:.4g}' for x in starts)}")
