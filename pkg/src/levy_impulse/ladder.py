"""Ascending and descending ladder characteristics under the E(H₁) = E(X₁) normalization.

Local time at the supremum is scaled so that expected ladder time equals
expected real time. With that choice the ascending ladder drift is whatever
remains of the mean rate after the jump part: ``δ_H = E(X₁) − ∫₀^∞ Π̄_H``.
The occupation kernel of the process below its running supremum has total
mass one.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from enum import Enum
from typing import TYPE_CHECKING, Any

import numpy as np
from scipy import integrate, optimize

from levy_impulse.config import Numerics
from levy_impulse.errors import (
    ExpMomentDivergesError,
    InsufficientRecordsError,
    LevyImpulseError,
    MissingDescendingRepError,
    NoDownwardMovementError,
    NormalizationMismatchError,
    RootNotBracketedError,
)
from levy_impulse.process import (
    FloatArray,
    JumpKind,
    LevyModel,
    SpectralClass,
    classify,
    laplace_exponent,
    laplace_strip_bound,
    mean_rate,
    path_rng,
    simulate_path,
)

if TYPE_CHECKING:
    from collections.abc import Callable

    from numpy.typing import ArrayLike

    from levy_impulse.potential import PotentialDensity

logger = logging.getLogger(__name__)

ANALYTIC_TOLERANCE = 1e-6
_TAIL_CUTOFF = 1e-12


class Provenance(str, Enum):
    CLOSED_FORM = "closed-form"
    QUADRATURE = "quadrature"
    EMPIRICAL = "empirical"
    VOLTERRA = "volterra"
    MC = "mc"


# --- Tail representations of Π̄_H ---


class LadderTail:
    """Tail ``Π̄_H(x) = Π_H((x, ∞))`` of the ascending ladder jump measure, x ≥ 0.

    Subclasses provide ``__call__``; the integrals default to adaptive quadrature.
    """

    kind = "generic"
    support_end = math.inf

    def __call__(self, x: ArrayLike) -> FloatArray:
        raise NotImplementedError

    @property
    def is_zero(self) -> bool:
        return False

    @property
    def has_density(self) -> bool:
        return True

    def density(self, x: ArrayLike) -> FloatArray:
        """Density of Π_H, i.e. −dΠ̄_H/dx."""
        raise NotImplementedError

    def total_rate(self) -> float:
        """Π̄_H(0+), the rate of ladder jumps per unit ladder time."""
        return float(self(0.0))

    def breakpoints(self) -> list[float]:
        return []

    def effective_end(self) -> float:
        """Point beyond which Π̄_H is negligible (or the support end)."""
        if math.isfinite(self.support_end):
            return self.support_end
        top = self.total_rate()
        x = 1.0
        while float(self(x)) > _TAIL_CUTOFF * top and x < 1e8:
            x *= 2.0
        return x

    def integrate(self, fn: Callable[[FloatArray], FloatArray]) -> float:
        """∫₀^∞ fn(y)·Π̄_H(y) dy."""
        end = self.effective_end()
        points = [p for p in self.breakpoints() if 0 < p < end][:100] or None
        value, _ = integrate.quad(lambda y: float(fn(y)) * float(self(y)), 0.0, end, points=points, limit=400)
        return float(value)

    def mass(self) -> float:
        return self.integrate(np.ones_like)

    def moment(self, r: int) -> float:
        """∫ y^r Π_H(dy) = r ∫ y^{r−1} Π̄_H(y) dy."""
        if r < 1:
            raise ValueError("moment order must be at least 1")
        return r * self.integrate(lambda y: y ** (r - 1))

    def exp_moment(self, rate: float) -> float:
        """∫ (e^{rate·y} − 1) Π_H(dy) = rate ∫ e^{rate·y} Π̄_H(y) dy."""
        return rate * self.integrate(lambda y: np.exp(rate * y))

    def sample(self, rng: np.random.Generator, size: int) -> FloatArray:
        """Ladder jump sizes, by inversion of 1 − Π̄_H/Π̄_H(0)."""
        end = self.effective_end()
        grid = np.linspace(0.0, end, 4001)
        cdf = 1.0 - self(grid) / self.total_rate()
        cdf[-1] = 1.0
        cdf = np.maximum.accumulate(cdf)
        return np.interp(rng.random(size), cdf, grid)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind}


class ZeroTail(LadderTail):
    kind = "zero"
    support_end = 0.0

    def __call__(self, x: ArrayLike) -> FloatArray:
        return np.zeros_like(np.asarray(x, dtype=float))

    @property
    def is_zero(self) -> bool:
        return True

    def density(self, x: ArrayLike) -> FloatArray:
        return self(x)

    def total_rate(self) -> float:
        return 0.0

    def mass(self) -> float:
        return 0.0

    def moment(self, r: int) -> float:
        return 0.0

    def exp_moment(self, rate: float) -> float:
        return 0.0


@dataclass(frozen=True)
class ExponentialTail(LadderTail):
    """Π̄_H(x) = scale·e^{−rate·x}."""

    scale: float
    rate: float
    kind = "exponential"

    def __call__(self, x: ArrayLike) -> FloatArray:
        return self.scale * np.exp(-self.rate * np.asarray(x, dtype=float))

    def density(self, x: ArrayLike) -> FloatArray:
        return self.rate * self(x)

    def total_rate(self) -> float:
        return self.scale

    def mass(self) -> float:
        return self.scale / self.rate

    def moment(self, r: int) -> float:
        if r < 1:
            raise ValueError("moment order must be at least 1")
        return self.scale * math.factorial(r) / self.rate**r

    def exp_moment(self, rate: float) -> float:
        if rate >= self.rate:
            raise ExpMomentDivergesError(
                f"ladder tail decays at rate {self.rate:g}; exponential moment at {rate:g} diverges", rate=rate
            )
        return rate * self.scale / (self.rate - rate)

    def sample(self, rng: np.random.Generator, size: int) -> FloatArray:
        return rng.exponential(1.0 / self.rate, size)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "scale": self.scale, "rate": self.rate}


@dataclass(frozen=True)
class AtomTail(LadderTail):
    """Jumps of one fixed size: Π̄_H(x) = rate·1{x < size}. No density."""

    rate: float
    size: float
    kind = "atom"

    @property
    def support_end(self) -> float:  # type: ignore[override]
        return self.size

    def __call__(self, x: ArrayLike) -> FloatArray:
        return np.where(np.asarray(x, dtype=float) < self.size, self.rate, 0.0)

    @property
    def has_density(self) -> bool:
        return False

    def total_rate(self) -> float:
        return self.rate

    def mass(self) -> float:
        return self.rate * self.size

    def moment(self, r: int) -> float:
        return self.rate * self.size**r

    def exp_moment(self, rate: float) -> float:
        return self.rate * math.expm1(rate * self.size)

    def sample(self, rng: np.random.Generator, size: int) -> FloatArray:
        return np.full(size, self.size)

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "rate": self.rate, "size": self.size}


@dataclass(frozen=True, eq=False)
class FunctionTail(LadderTail):
    """Tail given by closed-form callables with compact support."""

    tail_fn: Callable[[FloatArray], FloatArray]
    density_fn: Callable[[FloatArray], FloatArray]
    end: float
    kinks: tuple[float, ...] = ()
    kind = "function"

    @property
    def support_end(self) -> float:  # type: ignore[override]
        return self.end

    def __call__(self, x: ArrayLike) -> FloatArray:
        x = np.asarray(x, dtype=float)
        return np.where(x < self.end, self.tail_fn(np.minimum(x, self.end)), 0.0)

    def density(self, x: ArrayLike) -> FloatArray:
        x = np.asarray(x, dtype=float)
        return np.where(x < self.end, self.density_fn(np.minimum(x, self.end)), 0.0)

    def breakpoints(self) -> list[float]:
        return list(self.kinks)


@dataclass(frozen=True, eq=False)
class TabulatedTail(LadderTail):
    """Empirical tail on a grid, linear in between, exponential beyond the last point."""

    grid: FloatArray
    values: FloatArray
    se: FloatArray | None = None
    decay: float = field(init=False)
    kind = "tabulated"

    def __post_init__(self) -> None:
        values = np.minimum.accumulate(np.maximum(np.asarray(self.values, dtype=float), 0.0))
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "grid", np.asarray(self.grid, dtype=float))
        object.__setattr__(self, "decay", _fit_log_slope(self.grid, values))

    def __call__(self, x: ArrayLike) -> FloatArray:
        x = np.asarray(x, dtype=float)
        inside = np.interp(x, self.grid, self.values)
        last = self.grid[-1]
        if self.decay <= 0 or self.values[-1] <= 0:
            return np.where(x <= last, inside, 0.0)
        beyond = self.values[-1] * np.exp(-self.decay * np.maximum(x - last, 0.0))
        return np.where(x <= last, inside, beyond)

    def density(self, x: ArrayLike) -> FloatArray:
        x = np.asarray(x, dtype=float)
        slopes = -np.diff(self.values) / np.diff(self.grid)
        idx = np.clip(np.searchsorted(self.grid, x, side="right") - 1, 0, len(slopes) - 1)
        inside = slopes[idx]
        return np.where(x <= self.grid[-1], inside, self.decay * self(x))

    def integrate(self, fn: Callable[[FloatArray], FloatArray]) -> float:
        last = float(self.grid[-1])
        fine = np.union1d(self.grid, np.linspace(0.0, last, 20001))
        inside = float(integrate.trapezoid(fn(fine) * self(fine), fine))
        if self.decay <= 0 or self.values[-1] <= 0:
            return inside
        beyond, _ = integrate.quad(lambda y: float(fn(y)) * float(self(y)), last, np.inf, limit=200)
        return inside + float(beyond)

    def mass(self) -> float:
        inside = float(integrate.trapezoid(self.values, self.grid))
        tail = self.values[-1] / self.decay if self.decay > 0 else 0.0
        return inside + float(tail)

    def exp_moment(self, rate: float) -> float:
        if self.values[-1] > 0 and rate >= self.decay:
            raise ExpMomentDivergesError(
                f"empirical ladder tail decays at rate {self.decay:.4g}; exponential moment at {rate:g} diverges",
                rate=rate,
            )
        return rate * self.integrate(lambda y: np.exp(rate * y))

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "points": len(self.grid), "decay": self.decay}


def _fit_log_slope(grid: FloatArray, values: FloatArray) -> float:
    positive = values > 0
    if positive.sum() < 3:
        return 0.0
    xs, ys = grid[positive][-10:], np.log(values[positive][-10:])
    if np.ptp(xs) == 0:
        return 0.0
    slope = np.polyfit(xs, ys, 1)[0]
    return float(max(-slope, 0.0))


# --- Descending representations ---


@dataclass(frozen=True)
class KilledUnitDrift:
    """Occupation kernel q·e^{−qz}dz below the supremum."""

    q: float
    kind = "killed-unit-drift"

    def average(self, fn: Callable[[FloatArray], FloatArray], x: ArrayLike) -> FloatArray:
        """∫ fn(x − z) q e^{−qz} dz, by Gauss–Laguerre quadrature."""
        nodes, weights = np.polynomial.laguerre.laggauss(80)
        x = np.atleast_1d(np.asarray(x, dtype=float))
        shifted = fn(x[:, None] - nodes[None, :] / self.q)
        return shifted @ weights

    def total_mass(self) -> float:
        return 1.0

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "q": self.q}


@dataclass(frozen=True, eq=False)
class EmpiricalOccupation:
    """Histogram density ů↓ of (sup X − X) per unit time, with per-bin standard errors."""

    edges: FloatArray
    density: FloatArray
    se: FloatArray
    mass_se: float = 0.0
    kind = "empirical-occupation"

    @property
    def centres(self) -> FloatArray:
        return 0.5 * (self.edges[1:] + self.edges[:-1])

    @property
    def weights(self) -> FloatArray:
        return self.density * np.diff(self.edges)

    def average(self, fn: Callable[[FloatArray], FloatArray], x: ArrayLike) -> FloatArray:
        x = np.atleast_1d(np.asarray(x, dtype=float))
        return fn(x[:, None] - self.centres[None, :]) @ self.weights

    def total_mass(self) -> float:
        return float(self.weights.sum())

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind, "bins": len(self.density), "total_mass": self.total_mass()}


DescendingRep = KilledUnitDrift | EmpiricalOccupation


@dataclass(frozen=True)
class LadderSystem:
    model: LevyModel
    mean_rate: float
    delta_h: float
    tail: LadderTail
    jump_mass: float
    q: float | None
    descending: DescendingRep | None
    normalization_residual: float
    provenance: Provenance
    delta_h_se: float = 0.0

    @property
    def pi_bar_h(self) -> LadderTail:
        return self.tail

    @property
    def is_driftless(self) -> bool:
        return self.delta_h <= 0.0

    def to_dict(self) -> dict[str, Any]:
        return {
            "q": self.q,
            "delta_h": self.delta_h,
            "jump_mass": self.jump_mass,
            "mean_rate": self.mean_rate,
            "tail": self.tail.to_dict(),
            "descending": self.descending.to_dict() if self.descending is not None else None,
            "normalization_residual": self.normalization_residual,
            "provenance": self.provenance.value,
        }


# --- Operations ---


def kill_rate_q(model: LevyModel) -> float:
    """Positive root of ψ. ψ is convex with ψ′(0) = −E(X₁) < 0, so the root is unique."""
    if not model.has_downward_movement:
        raise NoDownwardMovementError("the model is a subordinator; the descending ladder does not exist")
    mean_rate(model)
    bound = laplace_strip_bound(model)

    def psi(lam: float) -> float:
        return laplace_exponent(model, lam)

    if math.isinf(bound):
        candidates = (2.0**k for k in range(60))
    else:
        candidates = (bound * (1.0 - 2.0 ** -(k + 1)) for k in range(52))
    hi = next((lam for lam in candidates if psi(lam) > 0), None)
    if hi is None:
        raise RootNotBracketedError(f"psi has no positive root below the strip bound {bound:g}", strip_bound=bound)
    lo = hi
    while psi(lo) >= 0:
        lo *= 0.5
        if lo < 1e-300:
            raise RootNotBracketedError("psi is nonnegative near zero", strip_bound=bound)
    return float(optimize.brentq(psi, lo, hi, xtol=1e-300, rtol=1e-12, maxiter=500))


def ascending_tail(
    model: LevyModel,
    q: float | None = None,
    descending: DescendingRep | None = None,
) -> LadderTail:
    """Π̄_H(x) = ∫ Π̄(x + z) U↓(dz).

    Killed-unit-drift kernel: ``q ∫₀^∞ e^{−qz} Π̄(x + z) dz`` in closed form per
    jump family; empirical kernel: sum over the occupation histogram.
    """
    if not model.has_upward_jumps:
        return ZeroTail()
    law = model.jump_law
    assert law is not None  # noqa: S101
    lam = model.jump_rate
    kind = classify(model)

    if kind is SpectralClass.SUBORDINATOR:
        return _subordinator_tail(model)
    if model.has_downward_jumps:
        if not isinstance(descending, EmpiricalOccupation):
            raise MissingDescendingRepError(
                "a model with jumps in both directions needs an empirical occupation density"
            )
        return _tail_from_occupation(model, descending)
    if q is None:
        q = kill_rate_q(model)

    if law.kind is JumpKind.EXPONENTIAL_UP or law.kind is JumpKind.TWO_SIDED_EXPONENTIAL:
        eta = law.params[0]
        weight = lam * (law.params[2] if law.kind is JumpKind.TWO_SIDED_EXPONENTIAL else 1.0)
        return ExponentialTail(scale=q * weight / (q + eta), rate=eta)

    base = model.up_tail

    if law.kind is JumpKind.DETERMINISTIC:
        a = law.params[0]

        def det_tail(x: FloatArray) -> FloatArray:
            return lam * -np.expm1(-q * (a - x))

        return FunctionTail(
            tail_fn=det_tail,
            density_fn=lambda x: q * (base(x) - det_tail(x)),
            end=a,
        )

    a, b = law.params
    width = b - a
    lo = max(a, 0.0)

    def on_ramp(x: FloatArray) -> FloatArray:
        c = b - x
        return lam / width * (c + np.expm1(-q * c) / q)

    at_lo = float(on_ramp(np.asarray(lo)))

    def uniform_tail(x: FloatArray) -> FloatArray:
        below = lam * -np.expm1(-q * (lo - x)) + np.exp(-q * (lo - x)) * at_lo
        return np.where(x >= lo, on_ramp(x), below)

    return FunctionTail(
        tail_fn=uniform_tail,
        density_fn=lambda x: q * (base(x) - uniform_tail(x)),
        end=b,
        kinks=(lo,) if lo > 0 else (),
    )


def _subordinator_tail(model: LevyModel) -> LadderTail:
    law = model.jump_law
    assert law is not None  # noqa: S101
    lam = model.jump_rate
    if law.kind is JumpKind.EXPONENTIAL_UP:
        return ExponentialTail(scale=lam, rate=law.params[0])
    if law.kind is JumpKind.TWO_SIDED_EXPONENTIAL:
        return ExponentialTail(scale=lam * law.params[2], rate=law.params[0])
    if law.kind is JumpKind.DETERMINISTIC:
        return AtomTail(rate=lam, size=law.params[0])
    a, b = law.params
    return FunctionTail(
        tail_fn=model.up_tail,
        density_fn=lambda x: np.where(x >= a, lam / (b - a), 0.0),
        end=b,
        kinks=(a,) if a > 0 else (),
    )


def _tail_from_occupation(model: LevyModel, occupation: EmpiricalOccupation) -> TabulatedTail:
    z, w = occupation.centres, occupation.weights
    reach = occupation.edges[-1] + (model.jump_law.up_support_end if model.jump_law else 0.0)
    if not math.isfinite(reach):
        reach = occupation.edges[-1] + 40.0 / max(model.jump_law.params[0], 1e-12)  # type: ignore[union-attr]
    grid = np.linspace(0.0, reach, 801)
    values = model.up_tail(grid[:, None] + z[None, :]) @ w
    return TabulatedTail(grid=grid, values=values)


def ascending_drift(model: LevyModel, jump_mass: float, tolerance: float = ANALYTIC_TOLERANCE) -> float:
    """δ_H := E(X₁) − jump_mass, clamped to 0 inside the tolerance band."""
    mean = mean_rate(model)
    delta = mean - jump_mass
    if delta < -tolerance * mean:
        raise NormalizationMismatchError(
            f"ladder jump mass {jump_mass:.6g} exceeds the mean rate {mean:.6g}"
        )
    if abs(delta) <= tolerance * mean:
        return 0.0
    return delta


def build_ladder_system(
    model: LevyModel,
    numerics: Numerics | None = None,
    *,
    descending: bool = True,
) -> LadderSystem:
    """Assemble q, δ_H, Π̄_H and the descending kernel for ``model``.

    ``descending=False`` skips the Monte Carlo occupation estimate when nothing
    downstream needs it (h ≡ 0 on a process without upward jumps).
    """
    numerics = numerics or Numerics()
    mean = mean_rate(model)
    kind = classify(model)
    q: float | None = None
    rep: DescendingRep | None = None
    provenance = Provenance.CLOSED_FORM
    tolerance = ANALYTIC_TOLERANCE

    if kind is SpectralClass.SUBORDINATOR:
        tail = ascending_tail(model)
    elif not model.has_downward_jumps:
        q = kill_rate_q(model)
        rep = KilledUnitDrift(q)
        tail = ascending_tail(model, q)
        if isinstance(tail, FunctionTail):
            provenance = Provenance.QUADRATURE
    else:
        if model.has_upward_jumps or descending:
            rep = mc_descending_occupation(
                model,
                n_paths=max(20, numerics.mc_paths // 20),
                horizon=numerics.ladder_horizon,
                dt=numerics.dt,
                seed=numerics.seed,
                min_records=numerics.min_records,
            )
            provenance = Provenance.EMPIRICAL
        tail = ascending_tail(model, None, rep)
        if rep is not None and model.has_upward_jumps:
            tolerance = max(ANALYTIC_TOLERANCE, 3.0 * rep.mass_se * tail.mass() / mean)

    jump_mass = tail.mass()
    delta = model.drift if kind is SpectralClass.SUBORDINATOR else ascending_drift(model, jump_mass, tolerance)
    residual = abs(delta + jump_mass - mean)
    logger.debug("ladder system for %s model: q=%s delta_h=%.6g mass=%.6g", kind.value, q, delta, jump_mass)
    return LadderSystem(
        model=model,
        mean_rate=mean,
        delta_h=delta,
        tail=tail,
        jump_mass=jump_mass,
        q=q,
        descending=rep,
        normalization_residual=residual,
        provenance=provenance,
    )


def mc_ladder_estimate(
    model: LevyModel,
    n_paths: int,
    horizon: float,
    seed: int,
    *,
    dt: float = 1e-3,
    min_records: int = 100,
    grid_points: int = 60,
) -> LadderSystem:
    """Estimate δ_H and Π̄_H from the new-supremum records of simulated paths.

    Record jumps give the tail, continuous supremum increase the drift; both are
    rescaled so that δ̂_H + ∫Π̄̂_H = E(X₁).
    """
    mean = mean_rate(model)
    sizes_per_path: list[FloatArray] = []
    drift_per_path = np.empty(n_paths)
    events = 0
    for i in range(n_paths):
        path = simulate_path(model, 0.0, horizon, dt, path_rng(seed, i))
        running = np.maximum.accumulate(path.states)
        before = np.concatenate(([path.states[0]], running[:-1]))
        rise = running - before
        is_jump = np.zeros(len(rise), dtype=bool)
        is_jump[path.jump_indices] = True
        record_sizes = rise[is_jump & (rise > 0)]
        sizes_per_path.append(record_sizes)
        drift_per_path[i] = rise[~is_jump].sum() / horizon
        events += int(np.count_nonzero(rise > 0))

    if events < min_records:
        raise InsufficientRecordsError(f"only {events} ladder events observed, need {min_records}")

    all_sizes = np.concatenate(sizes_per_path) if sizes_per_path else np.empty(0)
    if all_sizes.size:
        top = float(all_sizes.max())
        grid = np.concatenate(([0.0], np.geomspace(max(top * 1e-4, 1e-9), top, grid_points)))
        per_path = np.array([(s[None, :] > grid[:, None]).sum(axis=1) / horizon for s in sizes_per_path])
    else:
        grid = np.array([0.0, 1.0])
        per_path = np.zeros((n_paths, 2))

    raw_tail = per_path.mean(axis=0)
    tail_se = per_path.std(axis=0, ddof=1) / math.sqrt(n_paths) if n_paths > 1 else np.zeros_like(raw_tail)
    raw_delta = float(drift_per_path.mean())
    delta_se = float(drift_per_path.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else 0.0
    raw_mass = float(all_sizes.sum() / (horizon * n_paths))
    scale = mean / (raw_delta + raw_mass)

    tail: LadderTail
    if raw_mass > 0:
        tail = TabulatedTail(grid=grid, values=scale * raw_tail, se=scale * tail_se)
    else:
        tail = ZeroTail()
    delta = scale * raw_delta
    return LadderSystem(
        model=model,
        mean_rate=mean,
        delta_h=delta,
        tail=tail,
        jump_mass=scale * raw_mass,
        q=None,
        descending=None,
        normalization_residual=abs(delta + scale * raw_mass - mean),
        provenance=Provenance.EMPIRICAL,
        delta_h_se=scale * delta_se,
    )


def mc_descending_occupation(
    model: LevyModel,
    n_paths: int,
    horizon: float,
    seed: int,
    *,
    dt: float = 1e-3,
    bins: int = 200,
    min_records: int = 100,
    burn_in: float = 0.1,
) -> EmpiricalOccupation:
    """Long-run occupation density of (sup X − X), one histogram per path.

    The first ``burn_in`` fraction of each path is discarded. The density is per
    unit time, so its total mass is one up to the mass beyond the last bin.
    """
    if not model.has_downward_movement:
        raise NoDownwardMovementError("a subordinator never leaves its supremum")
    mean_rate(model)

    def excursion(i: int) -> tuple[FloatArray, FloatArray]:
        path = simulate_path(model, 0.0, horizon, dt, path_rng(seed, i))
        gap = np.maximum.accumulate(path.states) - path.states
        start = int(np.searchsorted(path.times, burn_in * horizon))
        return gap[start:-1], np.diff(path.times[start:])

    first_gap, first_weight = excursion(0)
    if np.count_nonzero(first_gap > 0) < min_records:
        raise InsufficientRecordsError("the process barely leaves its supremum on the pilot path")
    top = 2.0 * float(np.quantile(first_gap, 0.999, method="linear")) or 1.0
    edges = np.linspace(0.0, top, bins + 1)
    span = horizon * (1.0 - burn_in)
    widths = np.diff(edges)

    densities = np.empty((n_paths, bins))
    hist, _ = np.histogram(first_gap, bins=edges, weights=first_weight)
    densities[0] = hist / (span * widths)
    for i in range(1, n_paths):
        gap, weight = excursion(i)
        hist, _ = np.histogram(gap, bins=edges, weights=weight)
        densities[i] = hist / (span * widths)

    density = densities.mean(axis=0)
    se = densities.std(axis=0, ddof=1) / math.sqrt(n_paths) if n_paths > 1 else np.zeros(bins)
    masses = densities @ widths
    mass_se = float(masses.std(ddof=1) / math.sqrt(n_paths)) if n_paths > 1 else 0.0
    overflow = 1.0 - float(masses.mean())
    if overflow > 0.01:
        logger.warning("%.2f%% of the occupation lies beyond the histogram range %.4g", 100 * overflow, top)
    return EmpiricalOccupation(edges=edges, density=density, se=se, mass_se=mass_se)


# --- Speciality ---


class SpecialityCriterion(str, Enum):
    NO_JUMPS = "no-jumps"
    LOG_CONVEX_TAIL = "log-convex-tail"
    DECREASING_POTENTIAL_DENSITY = "decreasing-potential-density"
    NONE = "none"


@dataclass(frozen=True)
class SpecialityReport:
    is_special: bool
    criterion: SpecialityCriterion
    regular_upward: bool


def is_special(
    ladder: LadderSystem,
    potential: PotentialDensity | None = None,
    *,
    tolerance: float = 1e-9,
) -> SpecialityReport:
    """Decide whether the ascending ladder is a special subordinator.

    Criteria, in order: no ladder jumps, log-convex tail, nonincreasing potential density.
    """
    regular = ladder.model.sigma2 > 0 or ladder.delta_h > 0
    tail = ladder.tail
    if tail.is_zero:
        return SpecialityReport(True, SpecialityCriterion.NO_JUMPS, regular)

    end = tail.effective_end()
    grid = np.linspace(0.0, end, 2001)[:-1]
    values = tail(grid)
    if np.all(values > 0):
        second = np.diff(np.log(values), 2)
        if np.all(second >= -tolerance * max(1.0, float(np.abs(second).max()))):
            return SpecialityReport(True, SpecialityCriterion.LOG_CONVEX_TAIL, regular)

    try:
        if potential is None:
            from levy_impulse.potential import potential_density

            potential = potential_density(ladder, z_max=max(end, 1.0) * 4.0, step=max(end, 1.0) / 1000.0)
    except LevyImpulseError as exc:
        logger.warning("speciality check inconclusive: %s", exc)
        return SpecialityReport(False, SpecialityCriterion.NONE, regular)

    u = potential.values
    if np.all(np.diff(u) <= tolerance * max(1.0, float(u.max()))):
        return SpecialityReport(True, SpecialityCriterion.DECREASING_POTENTIAL_DENSITY, regular)
    return SpecialityReport(False, SpecialityCriterion.NONE, regular)
