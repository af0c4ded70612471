"""Optimal long-run average ρ* and the (s, S) thresholds.

𝔊(ρ) is the best one-cycle value at charge rate ρ: the largest Ξ_ρ(x) over
starting points between the two crossings of g = ρ, less K. It is
nonincreasing in ρ, and ρ* is where it changes sign.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any

import numpy as np
from scipy import optimize

import levy_impulse.ladder as ladder_ops
from levy_impulse import potential as potential_ops
from levy_impulse._context import record_evaluation
from levy_impulse.config import AuditLevel, Numerics
from levy_impulse.errors import (
    AboveMaximumError,
    NoThresholdError,
    NoUpperCrossingError,
    RestartAboveThresholdError,
    UnboundedError,
)
from levy_impulse.process import mean_rate
from levy_impulse.transform import GainRate, PayoffSpec, RestartMode, check_unimodal, gain_rate

if TYPE_CHECKING:
    from levy_impulse.ladder import LadderSystem, SpecialityReport
    from levy_impulse.potential import PotentialDensity
    from levy_impulse.process import LevyModel

logger = logging.getLogger(__name__)

_DESCENT_STEPS = 60
_SCAN_POINTS = 41
# brentq rejects anything below 4·eps
_ROOT_RTOL = 4.0 * float(np.finfo(float).eps)


class Degeneracy(str, Enum):
    NONE = "none"
    UNBOUNDED = "unbounded"
    NO_THRESHOLD = "no-threshold"
    INACTION_CANDIDATE = "inaction-candidate"


class _Infinite(str, Enum):
    """Why a 𝔊 evaluation came out +∞."""

    NO_UPPER = "no-upper-crossing"
    UNBOUNDED_GROWTH = "unbounded-growth"


@dataclass(frozen=True)
class Evaluation:
    """One evaluation of 𝔊 together with the thresholds it used."""

    rho: float
    value: float
    x_lower: float | None = None
    x_upper: float | None = None
    argmax: float | None = None
    shortcut: bool = False
    infinite: _Infinite | None = None


@dataclass
class SolverContext:
    """What ``verify_solution`` needs to re-evaluate Ξ without rebuilding everything."""

    ladder: LadderSystem
    g: GainRate
    big_g: GFunction


@dataclass(frozen=True)
class PolicySolution:
    rho_star: float
    s: float
    S: float
    x_lower: float | None
    cycle_residual: float
    used_special_shortcut: bool
    degeneracy: Degeneracy
    iterations: int
    bracket: tuple[float, float]
    g_max: float
    maximiser: float
    restart: RestartMode = RestartMode.FREE
    context: SolverContext | None = field(default=None, compare=False, repr=False)

    def to_dict(self) -> dict[str, Any]:
        return {
            "rho_star": self.rho_star,
            "s": self.s,
            "S": self.S,
            "x_lower": self.x_lower,
            "cycle_residual": self.cycle_residual,
            "used_special_shortcut": self.used_special_shortcut,
            "degeneracy": self.degeneracy.value,
            "iterations": self.iterations,
            "bracket": list(self.bracket),
            "g_max": self.g_max,
            "maximiser": self.maximiser,
            "restart": self.restart.value,
        }


# --- Thresholds ---


def _scalar(g: GainRate, x: float) -> float:
    return float(g(np.asarray([x]))[0])


def threshold_roots(g: GainRate, rho: float, *, working_bound: float = 1e3) -> tuple[float | None, float]:
    """Crossings of g = ρ left and right of the maximiser.

    The left crossing is ``None`` when g stays above ρ up to the working bound.
    """
    info = g.unimodal
    if info is None:
        raise ValueError("gain rate carries no unimodality certificate; run check_unimodal first")
    if rho >= info.g_max:
        raise AboveMaximumError(f"rho = {rho:.10g} is not below max g = {info.g_max:.10g}")
    a = info.a
    upper = _crossing(g, rho, a, +1.0, working_bound)
    if upper is None:
        raise NoUpperCrossingError(
            f"g stays above rho = {rho:.6g} on [{a:.4g}, {a + working_bound:.4g}]"
        )
    return _crossing(g, rho, a, -1.0, working_bound), upper


def _crossing(g: GainRate, rho: float, a: float, direction: float, bound: float) -> float | None:
    width = 1.0
    inner = a
    while True:
        width = min(width, bound)
        outer = a + direction * width
        if _scalar(g, outer) < rho:
            break
        if width >= bound:
            return None
        inner = outer
        width *= 2.0
    lo, hi = sorted((inner, outer))
    scale = max(1.0, abs(lo), abs(hi))
    return float(optimize.brentq(lambda x: _scalar(g, x) - rho, lo, hi, xtol=1e-10 * scale, rtol=_ROOT_RTOL))


# --- 𝔊 ---


class GFunction:
    """Memoised ρ ↦ 𝔊(ρ) for one ladder system, gain rate and payoff."""

    def __init__(
        self,
        ladder: LadderSystem,
        g: GainRate,
        payoff: PayoffSpec,
        numerics: Numerics,
        speciality: SpecialityReport | None = None,
    ) -> None:
        self.ladder = ladder
        self.g = g
        self.payoff = payoff
        self.numerics = numerics
        self._speciality = speciality
        self._potential: PotentialDensity | None = None
        self.evaluations: dict[float, Evaluation] = {}
        self._shortcut_warned = False

    @property
    def speciality(self) -> SpecialityReport:
        if self._speciality is None:
            self._speciality = ladder_ops.is_special(self.ladder)
        return self._speciality

    @property
    def shortcut_applies(self) -> bool:
        report = self.speciality
        return report.is_special and report.regular_upward and not self.ladder.model.is_compound_poisson

    def potential(self, length: float) -> PotentialDensity:
        """Potential density covering [0, length], recomputed on a longer grid when needed."""
        length = max(length, 1e-9)
        current = self._potential
        if current is None or current.z_max < length:
            z_max = 1.25 * length if current is None else max(1.25 * length, 2.0 * current.z_max)
            self._potential = potential_ops.potential_for(self.ladder, z_max, self.numerics)
        return self._potential

    def xi(self, rho: float, x: float, x_bar: float) -> float:
        if x >= x_bar:
            return 0.0
        u = self.potential(x_bar - x)
        return potential_ops.xi(u, self.g, rho, x, x_bar)

    def __call__(self, rho: float) -> float:
        return self.evaluate(rho).value

    def evaluate(self, rho: float) -> Evaluation:
        cached = self.evaluations.get(rho)
        if cached is not None:
            return cached
        result = self._evaluate(rho)
        self.evaluations[rho] = result
        record_evaluation(rho, result.value)
        logger.debug("G(%.12g) = %.6g", rho, result.value)
        return result

    def _evaluate(self, rho: float) -> Evaluation:
        K = self.payoff.K
        try:
            lower, upper = threshold_roots(self.g, rho, working_bound=self.numerics.working_bound)
        except AboveMaximumError:
            return Evaluation(rho, -K)
        except NoUpperCrossingError:
            return Evaluation(rho, math.inf, infinite=_Infinite.NO_UPPER)

        if lower is None:
            if self._grows_without_bound(rho, upper):
                return Evaluation(rho, math.inf, x_upper=upper, infinite=_Infinite.UNBOUNDED_GROWTH)
            lower = upper - self.numerics.working_bound

        fast = self.numerics.audit is AuditLevel.FAST
        if self.shortcut_applies and fast:
            at_lower = self.xi(rho, lower, upper)
            return Evaluation(rho, max(at_lower - K, -K), lower, upper, lower, shortcut=True)

        argmax, best = self._golden_section(rho, lower, upper)
        if self.shortcut_applies:
            at_lower = self.xi(rho, lower, upper)
            if self._agrees(argmax, best, lower, at_lower, upper - lower):
                return Evaluation(rho, max(at_lower - K, -K), lower, upper, lower, shortcut=True)
            self._shortcut_disagrees(rho, lower, argmax)
        return Evaluation(rho, max(best - K, -K), lower, upper, argmax)

    def _shortcut_disagrees(self, rho: float, lower: float, found: float) -> None:
        log = logger.debug if self._shortcut_warned else logger.warning
        self._shortcut_warned = True
        log(
            "restart shortcut disagrees with golden-section search at rho = %.8g "
            "(x_lower = %.8g, argmax = %.8g); using the search result",
            rho, lower, found,
        )

    def _golden_section(self, rho: float, lower: float, upper: float) -> tuple[float, float]:
        """Largest Ξ_ρ on [lower, upper]: coarse scan, then bounded refinement."""
        if upper <= lower:
            return lower, self.xi(rho, lower, upper)
        grid = np.linspace(lower, upper, _SCAN_POINTS)
        values = np.array([self.xi(rho, x, upper) for x in grid])
        i = int(np.argmax(values))
        left, right = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
        found = optimize.minimize_scalar(
            lambda x: -self.xi(rho, x, upper),
            bounds=(left, right),
            method="bounded",
            options={"xatol": 1e-10 * max(1.0, abs(upper - lower))},
        )
        if -found.fun >= values[i]:
            return float(found.x), float(-found.fun)
        return float(grid[i]), float(values[i])

    def _agrees(self, found: float, found_value: float, lower: float, best: float, length: float) -> bool:
        step = self.potential(length).step
        near = abs(found - lower) <= max(10.0 * step, 1e-4 * max(1.0, length))
        no_better = found_value <= best + self.numerics.tol_g * self.payoff.K
        return near or no_better

    def _grows_without_bound(self, rho: float, upper: float) -> bool:
        """Ξ at ever more distant starts keeps growing, which flags an infinite value."""
        bound = self.numerics.working_bound
        width = self.numerics.initial_width
        previous = -math.inf
        while width < bound:
            value = self.xi(rho, upper - width, upper)
            if value <= previous:
                return False
            previous = value
            width *= 2.0
        return previous > self.payoff.K

    def is_monotone(self) -> bool:
        """Certificate over every evaluation so far: nonincreasing in ρ."""
        points = sorted(self.evaluations.items())
        values = [e.value for _, e in points]
        tol = self.numerics.tol_g * self.payoff.K
        return all(later <= earlier + tol for earlier, later in zip(values, values[1:], strict=False))


def big_g(
    ladder: LadderSystem,
    g: GainRate,
    payoff: PayoffSpec,
    rho: float,
    numerics: Numerics | None = None,
) -> float:
    """max(sup_{x∈[x̲, x̄]} Ξ_ρ(x) − K, −K); +∞ when the one-cycle value is unbounded."""
    return GFunction(ladder, g, payoff, numerics or Numerics())(rho)


# --- Setup ---


def _prepare(
    model: LevyModel,
    payoff: PayoffSpec,
    numerics: Numerics,
    ladder: LadderSystem | None,
) -> tuple[LadderSystem, GainRate]:
    mean_rate(model)
    if ladder is None:
        ladder = ladder_ops.build_ladder_system(model, numerics, descending=not payoff.h.is_zero)
    g = _locate_maximum(gain_rate(ladder, payoff), numerics)
    info = g.unimodal
    assert info is not None
    payoff.check(info.lo, info.hi)
    g = g.tabulated(info.lo, info.hi).with_unimodal(info)
    return ladder, g


def context_for(
    model: LevyModel,
    payoff: PayoffSpec,
    numerics: Numerics | None = None,
    *,
    ladder: LadderSystem | None = None,
) -> SolverContext:
    """Ladder system, certified gain rate and a fresh 𝔊 for ``payoff`` on ``model``."""
    numerics = numerics or Numerics()
    ladder, g = _prepare(model, payoff, numerics, ladder)
    return SolverContext(ladder, g, GFunction(ladder, g, payoff, numerics))


def _locate_maximum(g: GainRate, numerics: Numerics) -> GainRate:
    """Certify unimodality on a window around the maximiser, widening until it is interior."""
    bound = numerics.working_bound
    centre, width = 0.0, numerics.initial_width
    while True:
        lo, hi = max(centre - width, -bound), min(centre + width, bound)
        info = check_unimodal(g, (lo, hi), (hi - lo) / (numerics.scan_points - 1))
        if info.flat:
            raise NoThresholdError(f"gain rate is constant ({info.g_max:.6g}) on [{lo:.4g}, {hi:.4g}]")
        if info.rising_at is None:
            return g.with_unimodal(info)
        edge = hi if info.rising_at == "right" else lo
        if abs(edge) >= bound:
            _classify_boundary(g, edge, width, info.g_max)
        centre = edge
        width *= 2.0


def _classify_boundary(g: GainRate, edge: float, width: float, g_max: float) -> None:
    back = edge - math.copysign(min(width, 1.0), edge)
    rise = _scalar(g, edge) - _scalar(g, back)
    if rise > 1e-6 * max(1.0, abs(g_max)):
        raise UnboundedError(f"gain rate still rising at the working bound x = {edge:.4g}")
    raise NoThresholdError(f"gain rate levels off without a maximum before the working bound x = {edge:.4g}")


# --- Bisection ---


@dataclass
class _Bisection:
    lo: float
    hi: float
    lo_eval: Evaluation
    hi_eval: Evaluation
    converged: Evaluation | None
    iterations: int


def _bisect(
    objective: Any,
    g_max: float,
    numerics: Numerics,
    K: float,
) -> _Bisection:
    hi = g_max
    hi_eval = objective(hi)
    lo = min(0.0, -abs(g_max), g_max) - 1.0
    lo_eval = objective(lo)
    steps = 0
    while not lo_eval.value > 0:
        steps += 1
        if steps > _DESCENT_STEPS:
            raise NoThresholdError(f"one-cycle value stays non-positive down to rho = {lo:.6g}")
        hi, hi_eval = lo, lo_eval
        lo = g_max - 2.0 * (g_max - lo)
        lo_eval = objective(lo)

    tol_rho = numerics.tol_rho * max(1.0, abs(g_max))
    tol_value = numerics.tol_g * K
    iterations = 0
    while iterations < numerics.max_bisections and hi - lo > tol_rho:
        iterations += 1
        mid = 0.5 * (lo + hi)
        mid_eval = objective(mid)
        if math.isfinite(mid_eval.value) and abs(mid_eval.value) <= tol_value:
            return _Bisection(lo, hi, lo_eval, hi_eval, mid_eval, iterations)
        if mid_eval.value > 0:
            lo, lo_eval = mid, mid_eval
        else:
            hi, hi_eval = mid, mid_eval
    return _Bisection(lo, hi, lo_eval, hi_eval, None, iterations)


def _degenerate(result: _Bisection) -> None:
    """Raise for a bracket that collapsed onto an infinite one-cycle value."""
    cause = result.lo_eval.infinite
    if cause is _Infinite.UNBOUNDED_GROWTH:
        raise UnboundedError(f"one-cycle value is infinite for rho below {result.hi:.8g}")
    if cause is _Infinite.NO_UPPER:
        raise NoThresholdError(f"no charge rate near {result.hi:.8g} yields an upper threshold")


def _final(result: _Bisection) -> Evaluation:
    if result.converged is not None:
        return result.converged
    if math.isfinite(result.lo_eval.value) and result.lo_eval.x_upper is not None:
        if abs(result.lo_eval.value) <= abs(result.hi_eval.value) or result.hi_eval.x_upper is None:
            return result.lo_eval
    return result.hi_eval


# --- Public operations ---


def solve(
    model: LevyModel,
    payoff: PayoffSpec,
    numerics: Numerics | None = None,
    *,
    ladder: LadderSystem | None = None,
) -> PolicySolution:
    """ρ* and the optimal band (s, S) for a free-restart problem.

    Fixed-restart payoffs are handed to :func:`solve_fixed_restart`.
    """
    numerics = numerics or Numerics()
    if payoff.restart.mode is RestartMode.FIXED:
        return solve_fixed_restart(model, payoff, numerics, ladder=ladder)

    ladder, g = _prepare(model, payoff, numerics, ladder)
    info = g.unimodal
    assert info is not None
    big = GFunction(ladder, g, payoff, numerics)
    result = _bisect(big.evaluate, info.g_max, numerics, payoff.K)

    inaction = payoff.h.is_zero and result.lo <= numerics.tol_rho * max(1.0, abs(info.g_max))
    if result.converged is None and not math.isfinite(result.lo_eval.value):
        if inaction:
            return _inaction(result, info.g_max, info.a, big, ladder, g)
        _degenerate(result)

    final = _final(result)
    if final.x_upper is None:
        raise NoThresholdError("bisection ended without a usable threshold pair")
    s = final.argmax if final.argmax is not None else final.x_lower
    assert s is not None
    residual = big.xi(final.rho, s, final.x_upper) - payoff.K
    degeneracy = Degeneracy.NONE
    if payoff.h.is_zero and final.rho <= 0 and abs(residual) > numerics.tol_g * payoff.K:
        degeneracy = Degeneracy.INACTION_CANDIDATE
    if not big.is_monotone():
        logger.warning("one-cycle value evaluations are not monotone in rho; results may be inaccurate")
    solution = PolicySolution(
        rho_star=final.rho,
        s=s,
        S=final.x_upper,
        x_lower=final.x_lower,
        cycle_residual=residual,
        used_special_shortcut=final.shortcut,
        degeneracy=degeneracy,
        iterations=result.iterations,
        bracket=(result.lo, result.hi),
        g_max=info.g_max,
        maximiser=info.a,
        context=SolverContext(ladder, g, big),
    )
    logger.info("solved: rho* = %.10g, s = %.8g, S = %.8g (%s)", solution.rho_star, s, solution.S, degeneracy.value)
    return solution


def _inaction(
    result: _Bisection,
    g_max: float,
    a: float,
    big: GFunction,
    ladder: LadderSystem,
    g: GainRate,
) -> PolicySolution:
    """h ≡ 0 and the value collapses at ρ ≤ 0: report the candidate without claiming optimality."""
    at = result.hi_eval
    S = at.x_upper if at.x_upper is not None else math.nan
    s = at.argmax if at.argmax is not None else math.nan
    residual = at.value if math.isfinite(at.value) else math.nan
    logger.info("no positive-value band: inaction candidate with rho* = %.6g", result.lo)
    return PolicySolution(
        rho_star=result.lo,
        s=s,
        S=S,
        x_lower=at.x_lower,
        cycle_residual=residual,
        used_special_shortcut=False,
        degeneracy=Degeneracy.INACTION_CANDIDATE,
        iterations=result.iterations,
        bracket=(result.lo, result.hi),
        g_max=g_max,
        maximiser=a,
        context=SolverContext(ladder, g, big),
    )


def solve_fixed_restart(
    model: LevyModel,
    payoff: PayoffSpec,
    numerics: Numerics | None = None,
    *,
    ladder: LadderSystem | None = None,
) -> PolicySolution:
    """ρ* when every intervention restarts at the fixed point y₀.

    Bisection on Ξ_ρ(y₀) − K with x̄_ρ the rightmost crossing of g = ρ.
    """
    numerics = numerics or Numerics()
    if payoff.restart.mode is not RestartMode.FIXED or payoff.restart.point is None:
        raise ValueError("solve_fixed_restart needs a payoff with a fixed restart point")
    y0 = payoff.restart.point
    ladder, g = _prepare(model, payoff, numerics, ladder)
    info = g.unimodal
    assert info is not None
    big = GFunction(ladder, g, payoff, numerics)
    K = payoff.K
    below_restart: list[bool] = []

    def objective(rho: float) -> Evaluation:
        try:
            lower, upper = threshold_roots(g, rho, working_bound=numerics.working_bound)
        except AboveMaximumError:
            return Evaluation(rho, -K)
        except NoUpperCrossingError:
            return Evaluation(rho, math.inf, infinite=_Infinite.NO_UPPER)
        below_restart.append(upper < y0)
        value = big.xi(rho, y0, upper) - K if upper > y0 else -K
        record_evaluation(rho, value)
        return Evaluation(rho, value, lower, upper, y0)

    try:
        result = _bisect(objective, info.g_max, numerics, K)
    except NoThresholdError:
        if below_restart and all(below_restart):
            raise RestartAboveThresholdError(
                f"restart point {y0:.6g} lies above every upper threshold tried"
            ) from None
        raise
    if below_restart and all(below_restart):
        raise RestartAboveThresholdError(f"restart point {y0:.6g} lies above every upper threshold tried")
    if result.converged is None and not math.isfinite(result.lo_eval.value):
        _degenerate(result)

    final = _final(result)
    if final.x_upper is None or final.x_upper < y0:
        raise RestartAboveThresholdError(f"restart point {y0:.6g} lies above the upper threshold")
    residual = big.xi(final.rho, y0, final.x_upper) - K
    solution = PolicySolution(
        rho_star=final.rho,
        s=y0,
        S=final.x_upper,
        x_lower=final.x_lower,
        cycle_residual=residual,
        used_special_shortcut=False,
        degeneracy=Degeneracy.NONE,
        iterations=result.iterations,
        bracket=(result.lo, result.hi),
        g_max=info.g_max,
        maximiser=info.a,
        restart=RestartMode.FIXED,
        context=SolverContext(ladder, g, big),
    )
    logger.info("solved with restart at %.6g: rho* = %.10g, S = %.8g", y0, solution.rho_star, solution.S)
    return solution
