"""Payoff families and the gain rate g = A_Hγ − ĥ.

g(x) is the expected net reward per unit time while the running supremum sits
at x: the ladder generator applied to the payoff, minus the running cost
averaged over the excursion below the supremum.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import TYPE_CHECKING, Any

import numpy as np
from numpy.polynomial import Polynomial
from scipy import integrate, interpolate, optimize

from levy_impulse.errors import (
    ExpMomentDivergesError,
    InvalidPayoffError,
    MissingDescendingRepError,
    NotUnimodalError,
)
from levy_impulse.ladder import EmpiricalOccupation, KilledUnitDrift, LadderSystem, Provenance

if TYPE_CHECKING:
    from collections.abc import Callable

    from numpy.typing import ArrayLike

    from levy_impulse.ladder import DescendingRep
    from levy_impulse.process import FloatArray


# --- Payoff γ ---


class GammaKind(str, Enum):
    LINEAR = "linear"
    POLYNOMIAL = "polynomial"
    LOGISTIC = "logistic"
    EXPONENTIAL = "exponential"


class CostKind(str, Enum):
    ZERO = "zero"
    POLYNOMIAL = "polynomial"
    EXPONENTIAL = "exponential"
    QUADRATIC_SHIFT = "quadratic-shift"


_GAMMA_PARAMS = {GammaKind.LINEAR: 1, GammaKind.LOGISTIC: 2, GammaKind.EXPONENTIAL: 1}
_COST_PARAMS = {CostKind.ZERO: 0, CostKind.EXPONENTIAL: 4, CostKind.QUADRATIC_SHIFT: 2}


@dataclass(frozen=True)
class Gamma:
    """Payoff γ. Parameters: linear ``(C,)``, polynomial ``(a₀, …, a_l)``,
    logistic ``(L, s)`` for L/(1 + e^{−x/s}), exponential ``(scale,)`` for scale·eˣ.
    """

    kind: GammaKind
    params: tuple[float, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", GammaKind(self.kind))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        expected = _GAMMA_PARAMS.get(self.kind)
        if expected is not None and len(self.params) != expected:
            raise InvalidPayoffError(f"{self.kind.value} gamma takes {expected} parameter(s)")
        if self.kind is GammaKind.POLYNOMIAL and not self.params:
            raise InvalidPayoffError("polynomial gamma needs at least one coefficient")
        if self.kind is GammaKind.LOGISTIC and (self.params[0] <= 0 or self.params[1] <= 0):
            raise InvalidPayoffError("logistic gamma needs L > 0 and s > 0")
        if self.kind is GammaKind.EXPONENTIAL and self.params[0] <= 0:
            raise InvalidPayoffError("exponential gamma needs a positive scale")

    @classmethod
    def linear(cls, c: float) -> Gamma:
        return cls(GammaKind.LINEAR, (c,))

    @classmethod
    def polynomial(cls, *coefficients: float) -> Gamma:
        return cls(GammaKind.POLYNOMIAL, coefficients)

    @classmethod
    def logistic(cls, height: float, width: float) -> Gamma:
        return cls(GammaKind.LOGISTIC, (height, width))

    @classmethod
    def exponential(cls, scale: float = 1.0) -> Gamma:
        return cls(GammaKind.EXPONENTIAL, (scale,))

    def as_polynomial(self) -> Polynomial | None:
        if self.kind is GammaKind.LINEAR:
            return Polynomial([0.0, self.params[0]])
        if self.kind is GammaKind.POLYNOMIAL:
            return Polynomial(self.params)
        return None

    def __call__(self, x: ArrayLike) -> FloatArray:
        x = np.asarray(x, dtype=float)
        poly = self.as_polynomial()
        if poly is not None:
            return poly(x)
        if self.kind is GammaKind.LOGISTIC:
            height, width = self.params
            return height * _expit(x / width)
        return self.params[0] * np.exp(x)

    def derivative(self, x: ArrayLike) -> FloatArray:
        x = np.asarray(x, dtype=float)
        poly = self.as_polynomial()
        if poly is not None:
            return poly.deriv()(x)
        if self.kind is GammaKind.LOGISTIC:
            height, width = self.params
            p = _expit(x / width)
            return height / width * p * (1.0 - p)
        return self.params[0] * np.exp(x)

    def scaled(self, factor: float) -> Gamma:
        if self.kind is GammaKind.LOGISTIC:
            return Gamma(self.kind, (self.params[0] * factor, self.params[1]))
        return Gamma(self.kind, tuple(p * factor for p in self.params))

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "params": list(self.params)}


def _expit(z: FloatArray) -> FloatArray:
    return 0.5 * (1.0 + np.tanh(0.5 * z))


@dataclass(frozen=True)
class Cost:
    """Running cost h ≥ 0. Parameters: zero ``()``, polynomial ``(c₀, …, c_k)``,
    exponential ``(a₁, a₂, b₁, b₂)`` for a₁e^{a₂x} + b₁e^{−b₂x},
    quadratic-shift ``(m, w)`` for w·(x − m)².
    """

    kind: CostKind
    params: tuple[float, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "kind", CostKind(self.kind))
        object.__setattr__(self, "params", tuple(float(p) for p in self.params))
        expected = _COST_PARAMS.get(self.kind)
        if expected is not None and len(self.params) != expected:
            raise InvalidPayoffError(f"{self.kind.value} cost takes {expected} parameter(s)")
        if self.kind is CostKind.POLYNOMIAL and not self.params:
            raise InvalidPayoffError("polynomial cost needs at least one coefficient")
        if self.kind is CostKind.EXPONENTIAL:
            a1, a2, b1, b2 = self.params
            if a1 < 0 or b1 < 0 or a2 < 0 or b2 < 0:
                raise InvalidPayoffError("exponential cost parameters must be nonnegative")
        if self.kind is CostKind.QUADRATIC_SHIFT and self.params[1] < 0:
            raise InvalidPayoffError("quadratic-shift weight must be nonnegative")

    @classmethod
    def zero(cls) -> Cost:
        return cls(CostKind.ZERO)

    @classmethod
    def polynomial(cls, *coefficients: float) -> Cost:
        return cls(CostKind.POLYNOMIAL, coefficients)

    @classmethod
    def exponential(cls, a1: float, a2: float, b1: float = 0.0, b2: float = 0.0) -> Cost:
        return cls(CostKind.EXPONENTIAL, (a1, a2, b1, b2))

    @classmethod
    def quadratic_shift(cls, m: float, w: float) -> Cost:
        return cls(CostKind.QUADRATIC_SHIFT, (m, w))

    @property
    def is_zero(self) -> bool:
        if self.kind is CostKind.ZERO:
            return True
        if self.kind is CostKind.EXPONENTIAL:
            return self.params[0] == 0 and self.params[2] == 0
        if self.kind is CostKind.QUADRATIC_SHIFT:
            return self.params[1] == 0
        return all(c == 0 for c in self.params)

    def as_polynomial(self) -> Polynomial | None:
        if self.kind is CostKind.ZERO:
            return Polynomial([0.0])
        if self.kind is CostKind.POLYNOMIAL:
            return Polynomial(self.params)
        if self.kind is CostKind.QUADRATIC_SHIFT:
            m, w = self.params
            return Polynomial([w * m * m, -2.0 * w * m, w])
        return None

    def __call__(self, x: ArrayLike) -> FloatArray:
        x = np.asarray(x, dtype=float)
        poly = self.as_polynomial()
        if poly is not None:
            return poly(x) + np.zeros_like(x)
        a1, a2, b1, b2 = self.params
        return a1 * np.exp(a2 * x) + b1 * np.exp(-b2 * x)

    def scaled(self, factor: float) -> Cost:
        if self.kind is CostKind.EXPONENTIAL:
            a1, a2, b1, b2 = self.params
            return Cost(self.kind, (a1 * factor, a2, b1 * factor, b2))
        if self.kind is CostKind.QUADRATIC_SHIFT:
            return Cost(self.kind, (self.params[0], self.params[1] * factor))
        return Cost(self.kind, tuple(p * factor for p in self.params))

    def to_dict(self) -> dict[str, Any]:
        return {"kind": self.kind.value, "params": list(self.params)}


class RestartMode(str, Enum):
    FREE = "free"
    FIXED = "fixed"


@dataclass(frozen=True)
class Restart:
    mode: RestartMode = RestartMode.FREE
    point: float | None = None

    def __post_init__(self) -> None:
        object.__setattr__(self, "mode", RestartMode(self.mode))
        if (self.mode is RestartMode.FIXED) != (self.point is not None):
            raise InvalidPayoffError("a restart point is given exactly when the restart mode is fixed")

    @classmethod
    def fixed(cls, point: float) -> Restart:
        return cls(RestartMode.FIXED, float(point))

    def to_dict(self) -> dict[str, Any]:
        data: dict[str, Any] = {"mode": self.mode.value}
        if self.point is not None:
            data["point"] = self.point
        return data


@dataclass(frozen=True)
class PayoffSpec:
    gamma: Gamma
    h: Cost
    K: float
    restart: Restart = field(default_factory=Restart)

    def __post_init__(self) -> None:
        if not (math.isfinite(self.K) and self.K > 0):
            raise InvalidPayoffError(f"fixed cost K must be positive, got {self.K!r}")

    def scaled(self, factor: float) -> PayoffSpec:
        return PayoffSpec(self.gamma.scaled(factor), self.h.scaled(factor), self.K * factor, self.restart)

    def check(self, lo: float, hi: float, points: int = 401) -> None:
        """γ nondecreasing and h ≥ 0 on [lo, hi], by sampling."""
        x = np.linspace(lo, hi, points)
        slope = self.gamma.derivative(x)
        scale = max(1.0, float(np.max(np.abs(slope))))
        if np.any(slope < -1e-9 * scale):
            raise InvalidPayoffError(f"gamma decreases somewhere on [{lo:.4g}, {hi:.4g}]")
        cost = self.h(x)
        if np.any(cost < -1e-9 * max(1.0, float(np.max(np.abs(cost))))):
            raise InvalidPayoffError(f"running cost h is negative somewhere on [{lo:.4g}, {hi:.4g}]")

    def to_dict(self) -> dict[str, Any]:
        return {"gamma": self.gamma.to_dict(), "h": self.h.to_dict(), "K": self.K}


# --- Curves ---


@dataclass(frozen=True, eq=False)
class Curve:
    """Vectorised real function with an optional polynomial form."""

    fn: Callable[[FloatArray], FloatArray]
    provenance: Provenance = Provenance.CLOSED_FORM
    polynomial: Polynomial | None = None

    def __call__(self, x: ArrayLike) -> FloatArray:
        x = np.asarray(x, dtype=float)
        return self.fn(x) + np.zeros_like(x)

    @classmethod
    def from_polynomial(cls, poly: Polynomial, provenance: Provenance = Provenance.CLOSED_FORM) -> Curve:
        return cls(fn=poly, provenance=provenance, polynomial=poly)


@dataclass(frozen=True)
class UnimodalInfo:
    a: float
    g_max: float
    lo: float
    hi: float
    flat: bool = False
    rising_at: str | None = None


@dataclass(frozen=True, eq=False)
class GainRate:
    fn: Callable[[FloatArray], FloatArray]
    generator: Curve
    hat_h: Curve
    provenance: Provenance
    polynomial: Polynomial | None = None
    unimodal: UnimodalInfo | None = None

    def __call__(self, x: ArrayLike) -> FloatArray:
        x = np.asarray(x, dtype=float)
        return self.fn(x) + np.zeros_like(x)

    def with_unimodal(self, info: UnimodalInfo) -> GainRate:
        return replace(self, unimodal=info)

    def tabulated(self, lo: float, hi: float, points: int = 4001) -> GainRate:
        """Cubic-spline cache on [lo, hi]; closed forms are returned unchanged."""
        if self.provenance is Provenance.CLOSED_FORM:
            return self
        grid = np.linspace(lo, hi, points)
        spline = interpolate.CubicSpline(grid, self.fn(grid))
        direct = self.fn

        def cached(x: FloatArray) -> FloatArray:
            inside = (x >= lo) & (x <= hi)
            if np.all(inside):
                return spline(x)
            out = np.asarray(direct(x), dtype=float) + np.zeros_like(x)
            out[inside] = spline(x[inside])
            return out

        return replace(self, fn=cached)


# --- ĥ ---


def _kernel_moments(rep: DescendingRep, order: int) -> list[float]:
    """E[Z^r], r = 0..order, for Z distributed as the occupation kernel."""
    if isinstance(rep, KilledUnitDrift):
        return [math.factorial(r) / rep.q**r for r in range(order + 1)]
    z, w = rep.centres, rep.weights
    return [float(np.sum(z**r * w)) for r in range(order + 1)]


def _kernel_exp(rep: DescendingRep, c: float) -> float:
    """E[e^{cZ}] for the occupation kernel."""
    if isinstance(rep, KilledUnitDrift):
        if c >= rep.q:
            raise ExpMomentDivergesError(
                f"running cost grows like exp(-{c:g} x) below the supremum; kernel rate q = {rep.q:g} is too small",
                rate=c,
            )
        return rep.q / (rep.q - c)
    return float(np.sum(np.exp(c * rep.centres) * rep.weights))


def hat_h(ladder: LadderSystem, h: Cost) -> Curve:
    """ĥ(x) = E[h(x − Z)], Z the occupation of the process below its supremum."""
    rep = ladder.descending
    if rep is None:
        if ladder.model.has_downward_movement and not h.is_zero:
            raise MissingDescendingRepError("the ladder system was built without a descending representation")
        return Curve(fn=h, polynomial=h.as_polynomial())
    provenance = Provenance.EMPIRICAL if isinstance(rep, EmpiricalOccupation) else Provenance.CLOSED_FORM

    poly = h.as_polynomial()
    if poly is not None:
        coeffs = poly.coef
        moments = _kernel_moments(rep, len(coeffs) - 1)
        out = np.zeros(len(coeffs))
        for m, c_m in enumerate(coeffs):
            for j in range(m + 1):
                out[j] += c_m * math.comb(m, j) * (-1.0) ** (m - j) * moments[m - j]
        return Curve.from_polynomial(Polynomial(out), provenance)

    a1, a2, b1, b2 = h.params
    up = a1 * _kernel_exp(rep, -a2) if a1 else 0.0
    down = b1 * _kernel_exp(rep, b2) if b1 else 0.0
    return Curve(fn=lambda x: up * np.exp(a2 * x) + down * np.exp(-b2 * x), provenance=provenance)


# --- A_Hγ ---


def generator_gamma(ladder: LadderSystem, gamma: Gamma) -> Curve:
    """A_Hγ(x) = δ_H γ′(x) + ∫₀^∞ γ′(x + y) Π̄_H(y) dy."""
    delta, tail = ladder.delta_h, ladder.tail

    if gamma.kind is GammaKind.LINEAR:
        value = gamma.params[0] * ladder.mean_rate
        return Curve.from_polynomial(Polynomial([value]))

    poly = gamma.as_polynomial()
    if poly is not None:
        a = poly.coef
        degree = len(a) - 1
        moments = [0.0] + [tail.moment(r) for r in range(1, degree + 1)]
        b = np.zeros(max(degree, 1))
        for i in range(degree):
            b[i] = delta * (i + 1) * a[i + 1]
            for j in range(i + 1, degree + 1):
                b[i] += a[j] * math.comb(j, i) * moments[j - i]
        return Curve.from_polynomial(Polynomial(b))

    if gamma.kind is GammaKind.EXPONENTIAL:
        factor = gamma.params[0] * (delta + tail.exp_moment(1.0))
        return Curve(fn=lambda x: factor * np.exp(x))

    if tail.is_zero:
        return Curve(fn=lambda x: delta * gamma.derivative(x))

    end = tail.effective_end()

    def logistic_generator(x: FloatArray) -> FloatArray:
        flat = np.atleast_1d(x).ravel()
        jumps, _ = integrate.quad_vec(lambda y: gamma.derivative(flat + y) * float(tail(y)), 0.0, end)
        return (delta * gamma.derivative(flat) + jumps).reshape(np.shape(x))

    return Curve(fn=logistic_generator, provenance=Provenance.QUADRATURE)


# --- g ---


def poly_gain_rate(ladder: LadderSystem, gamma: Gamma, h: Cost) -> GainRate:
    gen = generator_gamma(ladder, gamma)
    cost = hat_h(ladder, h)
    if gen.polynomial is None or cost.polynomial is None:
        raise ValueError("poly_gain_rate needs polynomial gamma and cost")
    g = gen.polynomial - cost.polynomial
    return GainRate(fn=g, generator=gen, hat_h=cost, provenance=cost.provenance, polynomial=g)


def exp_gain_rate(ladder: LadderSystem, gamma: Gamma, h: Cost) -> GainRate:
    if gamma.kind is not GammaKind.EXPONENTIAL:
        raise ValueError("exp_gain_rate needs exponential gamma")
    gen = generator_gamma(ladder, gamma)
    cost = hat_h(ladder, h)
    return GainRate(fn=lambda x: gen(x) - cost(x), generator=gen, hat_h=cost, provenance=cost.provenance)


def gain_rate(ladder: LadderSystem, payoff: PayoffSpec) -> GainRate:
    gamma, h = payoff.gamma, payoff.h
    if gamma.as_polynomial() is not None and h.as_polynomial() is not None:
        return poly_gain_rate(ladder, gamma, h)
    if gamma.kind is GammaKind.EXPONENTIAL and (h.kind is CostKind.EXPONENTIAL or h.is_zero):
        return exp_gain_rate(ladder, gamma, h)
    gen = generator_gamma(ladder, gamma)
    cost = hat_h(ladder, h)
    provenance = gen.provenance if gen.provenance is not Provenance.CLOSED_FORM else cost.provenance
    return GainRate(fn=lambda x: gen(x) - cost(x), generator=gen, hat_h=cost, provenance=provenance)


def check_unimodal(g: GainRate, interval: tuple[float, float], step: float) -> UnimodalInfo:
    """Grid scan plus bounded refinement of the maximiser.

    Raises NotUnimodalError when g falls and then rises again on the grid.
    """
    lo, hi = interval
    if not hi > lo:
        raise ValueError(f"empty interval {interval!r}")
    points = int(min(max(math.ceil((hi - lo) / step), 2), 200_000)) + 1
    x = np.linspace(lo, hi, points)
    v = g(x)
    scale = max(1.0, float(np.max(np.abs(v))))
    tol = 1e-9 * scale
    if float(np.ptp(v)) <= tol:
        return UnimodalInfo(a=0.5 * (lo + hi), g_max=float(v.max()), lo=lo, hi=hi, flat=True)

    dv = np.diff(v)
    signs = np.sign(np.where(np.abs(dv) <= tol, 0.0, dv))
    falling = np.flatnonzero(signs < 0)
    if falling.size and np.any(signs[falling[0] :] > 0):
        rise = falling[0] + int(np.argmax(signs[falling[0] :] > 0))
        raise NotUnimodalError(
            f"gain rate has an interior local minimum near x = {x[rise]:.6g} on [{lo:.4g}, {hi:.4g}]"
        )

    i = int(np.argmax(v))
    rising_at = None
    if i == points - 1 and signs[-1] > 0:
        rising_at = "right"
    elif i == 0 and signs[0] < 0:
        rising_at = "left"
    left, right = x[max(i - 1, 0)], x[min(i + 1, points - 1)]
    if right > left:
        found = optimize.minimize_scalar(
            lambda s: -float(g(np.asarray([s]))[0]), bounds=(left, right), method="bounded",
            options={"xatol": 1e-12 * max(1.0, abs(x[i]))},
        )
        a, g_max = float(found.x), -float(found.fun)
        if g_max < v[i]:
            a, g_max = float(x[i]), float(v[i])
    else:
        a, g_max = float(x[i]), float(v[i])
    return UnimodalInfo(a=a, g_max=g_max, lo=lo, hi=hi, rising_at=rising_at)
