"""Potential density u of the ascending ladder and the one-cycle functional built on it.

``U(dt) = atom·δ₀(dt) + u(t)dt`` is the expected ladder time spent at height t.
With drift δ_H > 0 it solves the renewal identity

    δ_H·u(x) + ∫₀^x Π̄_H(x − t)·u(t) dt = 1,

discretised with piecewise-linear u and solved by forward substitution.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass
from typing import TYPE_CHECKING

import numpy as np
from scipy import integrate

from levy_impulse.errors import DriftlessLadderUnsupportedError, VolterraStepTooCoarseError
from levy_impulse.ladder import AtomTail, ExponentialTail, LadderSystem, LadderTail, Provenance, ZeroTail
from levy_impulse.process import FloatArray, path_rng

if TYPE_CHECKING:
    from collections.abc import Callable

    from numpy.typing import ArrayLike

    from levy_impulse.config import Numerics

logger = logging.getLogger(__name__)

_SUBCELLS = 8


@dataclass(frozen=True, eq=False)
class PotentialDensity:
    """u on the grid ``iΔ``, i = 0..n, plus the point mass at zero.

    Beyond the last grid point u is continued with its last value.
    """

    step: float
    values: FloatArray
    atom: float
    provenance: Provenance
    residual: float = 0.0

    @property
    def z_max(self) -> float:
        return self.step * (len(self.values) - 1)

    @property
    def grid(self) -> FloatArray:
        return self.step * np.arange(len(self.values))

    def __call__(self, t: ArrayLike) -> FloatArray:
        t = np.asarray(t, dtype=float)
        inside = np.interp(t, self.grid, self.values)
        return np.where(t < 0, 0.0, inside)

    def cumulative(self, z: ArrayLike) -> FloatArray:
        """U([0, z]) = atom + ∫₀^z u."""
        z = np.asarray(z, dtype=float)
        u = self.values
        cells = 0.5 * self.step * (u[1:] + u[:-1])
        running = np.concatenate(([0.0], np.cumsum(cells)))
        clipped = np.clip(z, 0.0, self.z_max)
        i = np.minimum((clipped / self.step).astype(int), len(u) - 2)
        frac = clipped - i * self.step
        u_at = self(clipped)
        partial = 0.5 * frac * (u[i] + u_at)
        beyond = np.maximum(z - self.z_max, 0.0) * u[-1]
        total = self.atom + running[i] + partial + beyond
        return np.where(z < 0, 0.0, total)

    def is_nonincreasing(self, tolerance: float = 1e-9) -> bool:
        return bool(np.all(np.diff(self.values) <= tolerance * max(1.0, float(np.max(self.values)))))

    def extended(self, z_max: float) -> PotentialDensity:
        """Same density, grid continued to ``z_max`` with the last value."""
        if z_max <= self.z_max:
            return self
        extra = math.ceil((z_max - self.z_max) / self.step)
        values = np.concatenate((self.values, np.full(extra, self.values[-1])))
        return PotentialDensity(self.step, values, self.atom, self.provenance, self.residual)


# --- Construction ---


def potential_density(
    ladder: LadderSystem,
    z_max: float,
    step: float | None = None,
    *,
    tolerance: float = 1e-6,
    max_halvings: int = 4,
    allow_mc: bool = True,
    mc_paths: int = 2000,
    seed: int = 42,
) -> PotentialDensity:
    """Potential density of the ascending ladder on [0, z_max].

    Pure drift gives u ≡ 1/δ_H directly. Otherwise the step is halved until the residual
    of the discretised renewal identity is at most ``tolerance``.
    """
    if not z_max > 0:
        raise ValueError(f"z_max must be positive, got {z_max!r}")
    step = step if step is not None else z_max / 2000.0
    tail = ladder.tail
    delta = ladder.delta_h

    if tail.is_zero:
        n = max(2, math.ceil(z_max / step))
        return PotentialDensity(step, np.full(n + 1, 1.0 / delta), 0.0, Provenance.CLOSED_FORM)

    if delta > 0:
        return _refine(lambda h, n: _solve_volterra(tail, delta, h, n), z_max, step, tolerance, max_halvings, 0.0)

    rate = tail.total_rate()
    if tail.has_density:
        return _refine(lambda h, n: _solve_renewal(tail, h, n), z_max, step, tolerance, max_halvings, 1.0 / rate)
    if not allow_mc:
        raise DriftlessLadderUnsupportedError(
            "driftless ladder whose jump law has no density; enable Monte Carlo to estimate the potential"
        )
    return _mc_renewal_density(tail, z_max, step, mc_paths, seed)


def potential_for(ladder: LadderSystem, z_max: float, numerics: Numerics) -> PotentialDensity:
    return potential_density(
        ladder,
        z_max,
        numerics.step_for(z_max),
        tolerance=numerics.volterra_tol,
        max_halvings=numerics.max_halvings,
        mc_paths=numerics.mc_paths,
        seed=numerics.seed,
    )


def _refine(
    solve: Callable[[float, int], tuple[FloatArray, float]],
    z_max: float,
    step: float,
    tolerance: float,
    max_halvings: int,
    atom: float,
) -> PotentialDensity:
    n = max(2, math.ceil(z_max / step))
    step = z_max / n
    residual = math.inf
    for _ in range(max_halvings + 1):
        values, residual = solve(step, n)
        if residual <= tolerance:
            return PotentialDensity(step, values, atom, Provenance.VOLTERRA, residual)
        logger.debug("potential step %.3g: identity residual %.3g above tolerance, halving", step, residual)
        step /= 2.0
        n *= 2
    raise VolterraStepTooCoarseError(
        f"renewal identity residual {residual:.3g} above {tolerance:g} at step {2.0 * step:.3g}"
    )


def _cell_weights(tail: LadderTail, step: float, n: int) -> tuple[FloatArray, FloatArray]:
    """Product-integration weights of Π̄_H against the hat functions of each lag cell.

    ``alpha[k] = ∫ Π̄_H(s)((k+1)Δ − s)/Δ ds``, ``beta[k] = ∫ Π̄_H(s)(s − kΔ)/Δ ds``
    over s ∈ [kΔ, (k+1)Δ].
    """
    edges = step * np.arange(n + 1)
    i0, i1 = _cumulative_moments(tail, edges, step)
    d0 = np.diff(i0)
    d1 = np.diff(i1)
    k = np.arange(n)
    alpha = ((k + 1) * step * d0 - d1) / step
    beta = (d1 - k * step * d0) / step
    return alpha, beta


def _cumulative_moments(tail: LadderTail, edges: FloatArray, step: float) -> tuple[FloatArray, FloatArray]:
    """∫₀^s Π̄_H and ∫₀^s σ·Π̄_H(σ)dσ at the grid edges."""
    if isinstance(tail, ExponentialTail):
        c, r = tail.scale, tail.rate
        decay = np.exp(-r * edges)
        return c / r * (1.0 - decay), c * (1.0 - decay * (1.0 + r * edges)) / r**2
    if isinstance(tail, AtomTail):
        clipped = np.minimum(edges, tail.size)
        return tail.rate * clipped, 0.5 * tail.rate * clipped**2
    if isinstance(tail, ZeroTail):
        return np.zeros_like(edges), np.zeros_like(edges)
    sub = np.linspace(0.0, edges[-1], _SUBCELLS * (len(edges) - 1) + 1)
    values = tail(sub)
    h = step / _SUBCELLS
    # cumulative trapezoid on a finer sub-grid, sampled at the cell edges
    i0 = np.concatenate(([0.0], integrate.cumulative_trapezoid(values, dx=h)))
    i1 = np.concatenate(([0.0], integrate.cumulative_trapezoid(values * sub, dx=h)))
    return i0[::_SUBCELLS], i1[::_SUBCELLS]


def _volterra_weights(tail: LadderTail, step: float, n: int) -> tuple[FloatArray, FloatArray]:
    """Lag weights ``w`` and start weights ``beta`` of the discretised identity.

    The equation for node i ≥ 1 reads δ_H·u_i + Σ_{m=1}^{i} w[i − m]·u_m + beta[i − 1]·u_0 = 1.
    """
    alpha, beta = _cell_weights(tail, step, n)
    w = np.zeros(n + 1)
    w[0] = alpha[0]
    w[1:n] = alpha[1:n] + beta[: n - 1]
    return w, beta


def _solve_volterra(tail: LadderTail, delta: float, step: float, n: int) -> tuple[FloatArray, float]:
    w, beta = _volterra_weights(tail, step, n)
    u = np.empty(n + 1)
    u[0] = 1.0 / delta
    pivot = delta + w[0]
    for i in range(1, n + 1):
        history = float(np.dot(w[i - 1 : 0 : -1], u[1:i])) if i > 1 else 0.0
        u[i] = (1.0 - history - beta[i - 1] * u[0]) / pivot
    return u, _volterra_residual(u, w, beta, delta)


def _volterra_residual(u: FloatArray, w: FloatArray, beta: FloatArray, delta: float) -> float:
    """max over the grid of |δ_H·u + Π̄_H∗u − 1| with the product-trapezoid convolution."""
    tail_part = np.convolve(w, np.concatenate(([0.0], u[1:])))[: len(u)]
    lhs = delta * u
    lhs[1:] += tail_part[1:] + beta * u[0]
    return float(np.max(np.abs(lhs - 1.0)))


def _solve_renewal(tail: LadderTail, step: float, n: int) -> tuple[FloatArray, float]:
    """Driftless ladder: u = r/Λ_H with r = f + f∗r, f the ladder jump density."""
    rate = tail.total_rate()
    f = tail.density(step * np.arange(n + 1)) / rate
    r = np.empty(n + 1)
    r[0] = f[0]
    pivot = 1.0 - 0.5 * step * f[0]
    for i in range(1, n + 1):
        history = float(np.dot(f[i - 1 : 0 : -1], r[1:i])) if i > 1 else 0.0
        r[i] = (f[i] + step * (0.5 * f[i] * r[0] + history)) / pivot
    return r / rate, _renewal_residual(r, f, step)


def _renewal_residual(r: FloatArray, f: FloatArray, step: float) -> float:
    """max over the grid of |r − f − f∗r| with the trapezoid convolution, relative to max r."""
    full = np.convolve(f, r)[: len(r)]
    trapezoid = step * (full - 0.5 * f * r[0] - 0.5 * f[0] * r)
    trapezoid[0] = 0.0
    scale = max(1.0, float(np.max(np.abs(r))))
    return float(np.max(np.abs(r - f - trapezoid))) / scale


def _mc_renewal_density(tail: LadderTail, z_max: float, step: float, n_paths: int, seed: int) -> PotentialDensity:
    """Histogram estimate of the renewal density of the ladder jump chain."""
    rate = tail.total_rate()
    n = max(2, math.ceil(z_max / step))
    edges = np.concatenate(([0.0], step * (np.arange(n + 1) + 0.5)))
    mean_jump = tail.mass() / rate
    batch = max(16, math.ceil(1.5 * z_max / mean_jump) + 8)
    counts = np.zeros(n + 1)
    for i in range(n_paths):
        rng = path_rng(seed, i)
        positions = np.cumsum(tail.sample(rng, batch))
        while positions[-1] <= edges[-1]:
            positions = np.concatenate((positions, positions[-1] + np.cumsum(tail.sample(rng, batch))))
        hist, _ = np.histogram(positions, bins=edges)
        counts += hist
    values = counts / (n_paths * rate * np.diff(edges))
    logger.info("potential density estimated from %d simulated ladder renewal sequences", n_paths)
    return PotentialDensity(step, values, 1.0 / rate, Provenance.MC)


# --- Functionals ---


def occupation_functional(
    potential: PotentialDensity,
    phi: Callable[[FloatArray], FloatArray],
    x: float,
    y: float,
) -> float:
    """∫_{[0, y−x)} φ(x + t) U(dt): expected ∫₀^{τ_y} φ(sup X) dt from x."""
    if y < x:
        raise ValueError(f"need x <= y, got x={x!r}, y={y!r}")
    length = y - x
    point = potential.atom * float(phi(np.asarray([x]))[0]) if potential.atom else 0.0
    if length == 0:
        return point
    intervals = max(2, 2 * math.ceil(length / (2.0 * potential.step)))
    t = np.linspace(0.0, length, intervals + 1)
    return point + float(integrate.simpson(phi(x + t) * potential(t), x=t))


def xi(
    potential: PotentialDensity,
    g: Callable[[FloatArray], FloatArray],
    rho: float,
    x: float,
    x_bar: float,
) -> float:
    """Ξ_ρ(x) = ∫_x^{x̄} (g(y) − ρ) u(y − x) dy + atom·(g(x) − ρ)."""
    return occupation_functional(potential, lambda y: g(y) - rho, x, x_bar)


def expected_passage_time(potential: PotentialDensity, x: float, y: float) -> float:
    """E_x τ_y = U([0, y − x])."""
    if y < x:
        raise ValueError(f"need x <= y, got x={x!r}, y={y!r}")
    if y == x:
        return potential.atom
    return float(potential.cumulative(y - x))
