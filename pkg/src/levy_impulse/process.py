"""Driving Lévy process: parameterisation, analytic characteristics, path simulation.

The process is ``X_t = d·t + σ·W_t + Σ J_i`` with finitely many jumps per unit
time (compound Poisson at rate Λ with a law from :class:`JumpLaw`).
"""

from __future__ import annotations

import math
from collections.abc import Callable
from dataclasses import dataclass, field
from enum import Enum
from typing import Union

import numpy as np
from numpy.typing import ArrayLike, NDArray
from scipy import integrate

from levy_impulse.errors import (
    ExpMomentDivergesError,
    HorizonExceededError,
    InvalidModelError,
    NonPositiveMeanError,
)

FloatArray = NDArray[np.float64]
SegmentCallback = Callable[[FloatArray, FloatArray], None]
SeedLike = Union[int, np.random.SeedSequence, np.random.Generator]

_FIRST_CHUNK = 1024
_MAX_CHUNK = 65536


class JumpKind(str, Enum):
    EXPONENTIAL_UP = "exponential-up"
    EXPONENTIAL_DOWN = "exponential-down"
    DETERMINISTIC = "deterministic"
    UNIFORM = "uniform"
    TWO_SIDED_EXPONENTIAL = "two-sided-exponential"


_PARAM_COUNT = {
    JumpKind.EXPONENTIAL_UP: 1,
    JumpKind.EXPONENTIAL_DOWN: 1,
    JumpKind.DETERMINISTIC: 1,
    JumpKind.UNIFORM: 2,
    JumpKind.TWO_SIDED_EXPONENTIAL: 3,
}


class SpectralClass(str, Enum):
    SUBORDINATOR = "subordinator"
    SPECTRALLY_NEGATIVE = "spectrally-negative"
    SPECTRALLY_POSITIVE = "spectrally-positive"
    TWO_SIDED = "two-sided"


class TerminalCause(str, Enum):
    PASSAGE = "passage"
    HORIZON = "horizon"


@dataclass(frozen=True)
class JumpLaw:
    """Law of a single jump.

    Parameters by kind: exponential-up/down ``(η,)``, deterministic ``(a,)``,
    uniform ``(a, b)``, two-sided-exponential ``(η₊, η₋, p_up)``.
    """

    kind: JumpKind
    params: tuple[float, ...]

    def __post_init__(self) -> None:
        kind = JumpKind(self.kind)
        object.__setattr__(self, "kind", kind)
        params = tuple(float(p) for p in self.params)
        object.__setattr__(self, "params", params)
        if len(params) != _PARAM_COUNT[kind]:
            raise InvalidModelError(f"{kind.value} jumps take {_PARAM_COUNT[kind]} parameter(s), got {len(params)}")
        if not all(math.isfinite(p) for p in params):
            raise InvalidModelError(f"{kind.value} jump parameters must be finite")
        if kind in (JumpKind.EXPONENTIAL_UP, JumpKind.EXPONENTIAL_DOWN) and params[0] <= 0:
            raise InvalidModelError("exponential jump rate must be positive")
        if kind is JumpKind.DETERMINISTIC and params[0] == 0:
            raise InvalidModelError("deterministic jump size must be nonzero")
        if kind is JumpKind.UNIFORM and not params[0] < params[1]:
            raise InvalidModelError("uniform jumps need a < b")
        if kind is JumpKind.TWO_SIDED_EXPONENTIAL:
            eta_up, eta_down, p_up = params
            if eta_up <= 0 or eta_down <= 0:
                raise InvalidModelError("two-sided exponential rates must be positive")
            if not 0.0 <= p_up <= 1.0:
                raise InvalidModelError("p_up must lie in [0, 1]")

    # --- constructors ---

    @classmethod
    def exponential_up(cls, eta: float) -> JumpLaw:
        return cls(JumpKind.EXPONENTIAL_UP, (eta,))

    @classmethod
    def exponential_down(cls, eta: float) -> JumpLaw:
        return cls(JumpKind.EXPONENTIAL_DOWN, (eta,))

    @classmethod
    def deterministic(cls, a: float) -> JumpLaw:
        return cls(JumpKind.DETERMINISTIC, (a,))

    @classmethod
    def uniform(cls, a: float, b: float) -> JumpLaw:
        return cls(JumpKind.UNIFORM, (a, b))

    @classmethod
    def two_sided_exponential(cls, eta_up: float, eta_down: float, p_up: float) -> JumpLaw:
        return cls(JumpKind.TWO_SIDED_EXPONENTIAL, (eta_up, eta_down, p_up))

    # --- support ---

    @property
    def has_up(self) -> bool:
        k, p = self.kind, self.params
        if k is JumpKind.EXPONENTIAL_UP:
            return True
        if k is JumpKind.EXPONENTIAL_DOWN:
            return False
        if k is JumpKind.DETERMINISTIC:
            return p[0] > 0
        if k is JumpKind.UNIFORM:
            return p[1] > 0
        return p[2] > 0

    @property
    def has_down(self) -> bool:
        k, p = self.kind, self.params
        if k is JumpKind.EXPONENTIAL_UP:
            return False
        if k is JumpKind.EXPONENTIAL_DOWN:
            return True
        if k is JumpKind.DETERMINISTIC:
            return p[0] < 0
        if k is JumpKind.UNIFORM:
            return p[0] < 0
        return p[2] < 1

    @property
    def up_support_end(self) -> float:
        """Supremum of the support of the positive part (∞ for exponential tails)."""
        k, p = self.kind, self.params
        if k is JumpKind.DETERMINISTIC:
            return max(p[0], 0.0)
        if k is JumpKind.UNIFORM:
            return max(p[1], 0.0)
        if k is JumpKind.EXPONENTIAL_DOWN:
            return 0.0
        return math.inf

    # --- moments and tails ---

    def mean(self) -> float:
        k, p = self.kind, self.params
        if k is JumpKind.EXPONENTIAL_UP:
            return 1.0 / p[0]
        if k is JumpKind.EXPONENTIAL_DOWN:
            return -1.0 / p[0]
        if k is JumpKind.DETERMINISTIC:
            return p[0]
        if k is JumpKind.UNIFORM:
            return 0.5 * (p[0] + p[1])
        eta_up, eta_down, p_up = p
        return p_up / eta_up - (1.0 - p_up) / eta_down

    def strip_bound(self) -> float:
        """Supremum of the λ > 0 for which E[e^{−λJ}] is finite."""
        k, p = self.kind, self.params
        if k is JumpKind.EXPONENTIAL_DOWN:
            return p[0]
        if k is JumpKind.TWO_SIDED_EXPONENTIAL and p[2] < 1:
            return p[1]
        return math.inf

    def laplace(self, lam: float) -> float:
        """E[e^{−λJ}]."""
        if lam >= self.strip_bound():
            raise ExpMomentDivergesError(
                f"E[exp(-{lam:g} J)] diverges for {self.kind.value} jumps (strip bound {self.strip_bound():g})",
                rate=lam,
            )
        k, p = self.kind, self.params
        if k is JumpKind.EXPONENTIAL_UP:
            return p[0] / (p[0] + lam)
        if k is JumpKind.EXPONENTIAL_DOWN:
            return p[0] / (p[0] - lam)
        if k is JumpKind.DETERMINISTIC:
            return math.exp(-lam * p[0])
        if k is JumpKind.UNIFORM:
            a, b = p
            return (math.exp(-lam * a) - math.exp(-lam * b)) / (lam * (b - a))
        eta_up, eta_down, p_up = p
        down = (1.0 - p_up) * eta_down / (eta_down - lam) if p_up < 1 else 0.0
        return p_up * eta_up / (eta_up + lam) + down

    def up_tail(self, y: ArrayLike) -> FloatArray:
        """P(J > y) for y ≥ 0."""
        y = np.asarray(y, dtype=float)
        k, p = self.kind, self.params
        if k is JumpKind.EXPONENTIAL_UP:
            return np.exp(-p[0] * y)
        if k is JumpKind.EXPONENTIAL_DOWN:
            return np.zeros_like(y)
        if k is JumpKind.DETERMINISTIC:
            return np.where(y < p[0], 1.0, 0.0)
        if k is JumpKind.UNIFORM:
            a, b = p
            return np.clip((b - y) / (b - a), 0.0, 1.0)
        return p[2] * np.exp(-p[0] * y)

    def down_tail(self, y: ArrayLike) -> FloatArray:
        """P(J < −y) for y ≥ 0."""
        y = np.asarray(y, dtype=float)
        k, p = self.kind, self.params
        if k is JumpKind.EXPONENTIAL_UP:
            return np.zeros_like(y)
        if k is JumpKind.EXPONENTIAL_DOWN:
            return np.exp(-p[0] * y)
        if k is JumpKind.DETERMINISTIC:
            return np.where(-y > p[0], 1.0, 0.0)
        if k is JumpKind.UNIFORM:
            a, b = p
            return np.clip((-y - a) / (b - a), 0.0, 1.0)
        return (1.0 - p[2]) * np.exp(-p[1] * y)

    def sample(self, rng: np.random.Generator) -> float:
        k, p = self.kind, self.params
        if k is JumpKind.EXPONENTIAL_UP:
            return float(rng.exponential(1.0 / p[0]))
        if k is JumpKind.EXPONENTIAL_DOWN:
            return -float(rng.exponential(1.0 / p[0]))
        if k is JumpKind.DETERMINISTIC:
            return p[0]
        if k is JumpKind.UNIFORM:
            return float(rng.uniform(p[0], p[1]))
        eta_up, eta_down, p_up = p
        if rng.random() < p_up:
            return float(rng.exponential(1.0 / eta_up))
        return -float(rng.exponential(1.0 / eta_down))

    def to_dict(self) -> dict[str, object]:
        return {"kind": self.kind.value, "params": list(self.params)}


@dataclass(frozen=True)
class LevyModel:
    """Lévy triplet (d, σ², Λ·jump_law) of a finite-activity process."""

    drift: float
    sigma2: float = 0.0
    jump_rate: float = 0.0
    jump_law: JumpLaw | None = None

    def __post_init__(self) -> None:
        for name in ("drift", "sigma2", "jump_rate"):
            if not math.isfinite(getattr(self, name)):
                raise InvalidModelError(f"{name} must be finite")
        if self.sigma2 < 0:
            raise InvalidModelError("sigma2 must be nonnegative")
        if self.jump_rate < 0:
            raise InvalidModelError("jump_rate must be nonnegative")
        if self.jump_rate > 0 and self.jump_law is None:
            raise InvalidModelError("a positive jump_rate needs a jump_law")

    @property
    def has_jumps(self) -> bool:
        return self.jump_rate > 0 and self.jump_law is not None

    @property
    def has_upward_jumps(self) -> bool:
        return self.has_jumps and self.jump_law is not None and self.jump_law.has_up

    @property
    def has_downward_jumps(self) -> bool:
        return self.has_jumps and self.jump_law is not None and self.jump_law.has_down

    @property
    def has_downward_movement(self) -> bool:
        return self.sigma2 > 0 or self.drift < 0 or self.has_downward_jumps

    @property
    def is_compound_poisson(self) -> bool:
        return self.sigma2 == 0 and self.drift == 0

    def up_tail(self, y: ArrayLike) -> FloatArray:
        """Π̄(y) = Λ·P(J > y) for y ≥ 0."""
        y = np.asarray(y, dtype=float)
        if not self.has_upward_jumps or self.jump_law is None:
            return np.zeros_like(y)
        return self.jump_rate * self.jump_law.up_tail(y)

    def down_tail(self, y: ArrayLike) -> FloatArray:
        """Π(−∞, −y) = Λ·P(J < −y) for y ≥ 0."""
        y = np.asarray(y, dtype=float)
        if not self.has_downward_jumps or self.jump_law is None:
            return np.zeros_like(y)
        return self.jump_rate * self.jump_law.down_tail(y)

    def to_dict(self) -> dict[str, object]:
        return {
            "drift": self.drift,
            "sigma2": self.sigma2,
            "jump_rate": self.jump_rate,
            "jump_law": self.jump_law.to_dict() if self.jump_law is not None else None,
        }


# --- Analytic characteristics ---


def mean_rate(model: LevyModel) -> float:
    """E(X₁) = d + Λ·E[J]; raises NonPositiveMeanError when it is not positive."""
    mean = model.drift
    if model.has_jumps and model.jump_law is not None:
        mean += model.jump_rate * model.jump_law.mean()
    if not mean > 0:
        raise NonPositiveMeanError(mean)
    return mean


def laplace_exponent(model: LevyModel, lam: float) -> float:
    """ψ(λ) = log E[e^{−λX₁}] = −dλ + σ²λ²/2 + Λ(E[e^{−λJ}] − 1)."""
    if not lam > 0:
        raise ValueError(f"lambda must be positive, got {lam!r}")
    value = -model.drift * lam + 0.5 * model.sigma2 * lam * lam
    if model.has_jumps and model.jump_law is not None:
        value += model.jump_rate * (model.jump_law.laplace(lam) - 1.0)
    return value


def laplace_strip_bound(model: LevyModel) -> float:
    if model.has_jumps and model.jump_law is not None:
        return model.jump_law.strip_bound()
    return math.inf


def classify(model: LevyModel) -> SpectralClass:
    down_jumps = model.has_downward_jumps
    up_jumps = model.has_upward_jumps
    if model.sigma2 == 0 and model.drift >= 0 and not down_jumps:
        return SpectralClass.SUBORDINATOR
    if not up_jumps and not down_jumps:
        # Gaussian (or negative-drift) motion goes both ways
        return SpectralClass.TWO_SIDED
    if not down_jumps:
        return SpectralClass.SPECTRALLY_POSITIVE
    if not up_jumps:
        return SpectralClass.SPECTRALLY_NEGATIVE
    return SpectralClass.TWO_SIDED


# --- Randomness ---


def path_rng(seed: int, index: int) -> np.random.Generator:
    """Generator for path ``index`` of a run seeded with ``seed``.

    Substreams depend only on (seed, index), never on scheduling.
    """
    return np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(index,)))


def as_generator(seed: SeedLike) -> np.random.Generator:
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.default_rng(seed)


# --- Path simulation ---


@dataclass(frozen=True)
class Passage:
    """First grid/jump time with state ≥ level."""

    time: float
    state: float
    by_jump: bool


@dataclass(frozen=True)
class PathSample:
    """Simulated path on the Euler grid.

    At a jump time the stored state is the post-jump value; the pre-jump value
    is ``states[jump_indices] − jump_sizes``.
    """

    dt: float
    times: FloatArray
    states: FloatArray
    jump_times: FloatArray
    jump_sizes: FloatArray
    jump_indices: NDArray[np.int64]
    cause: TerminalCause


@dataclass
class _Recorder:
    times: list[FloatArray] = field(default_factory=list)
    states: list[FloatArray] = field(default_factory=list)
    jump_times: list[float] = field(default_factory=list)
    jump_sizes: list[float] = field(default_factory=list)
    jump_indices: list[int] = field(default_factory=list)
    length: int = 0

    def add(self, times: FloatArray, states: FloatArray) -> None:
        self.times.append(times)
        self.states.append(states)
        self.length += len(times)

    def jump(self, time: float, size: float, post_state: float) -> None:
        # the last recorded point is the pre-jump end of the segment, at the jump time
        self.states[-1][-1] = post_state
        self.jump_times.append(time)
        self.jump_sizes.append(size)
        self.jump_indices.append(self.length - 1)


class _Engine:
    """Exact jump times, Euler steps of size ≤ dt in between."""

    def __init__(
        self,
        model: LevyModel,
        dt: float,
        rng: np.random.Generator,
        level: float | None,
        on_segment: SegmentCallback | None,
        recorder: _Recorder | None,
    ) -> None:
        if not dt > 0:
            raise ValueError(f"dt must be positive, got {dt!r}")
        self.model = model
        self.dt = dt
        self.rng = rng
        self.level = level
        self.on_segment = on_segment
        self.recorder = recorder
        self.sigma = math.sqrt(model.sigma2)
        self.needs_grid = self.sigma > 0 or on_segment is not None or recorder is not None

    def continuous(self, t: float, x: float, t_stop: float) -> tuple[float, float, bool]:
        """Move from (t, x) to t_stop without jumps; returns (t, x, hit)."""
        if not self.needs_grid:
            return self._linear(t, x, t_stop)
        chunk = _FIRST_CHUNK
        d, dt, sigma, level = self.model.drift, self.dt, self.sigma, self.level
        while t < t_stop:
            remaining = t_stop - t
            n = min(chunk, max(1, math.ceil(remaining / dt - 1e-9)))
            steps = np.full(n, dt)
            final = n * dt >= remaining - 1e-12
            if final:
                steps[-1] = remaining - (n - 1) * dt
            increments = d * steps
            if sigma > 0:
                increments = increments + sigma * np.sqrt(steps) * self.rng.standard_normal(n)
            xs = x + np.cumsum(increments)
            ts = t + np.cumsum(steps)
            if final:
                ts[-1] = t_stop
            if level is not None:
                above = np.flatnonzero(xs >= level)
                if above.size:
                    k = int(above[0])
                    x_prev = x if k == 0 else float(xs[k - 1])
                    t_prev = t if k == 0 else float(ts[k - 1])
                    frac = (level - x_prev) / (float(xs[k]) - x_prev)
                    t_hit = t_prev + frac * float(steps[k])
                    seg_t = np.concatenate(([t], ts[:k], [t_hit]))
                    seg_x = np.concatenate(([x], xs[:k], [level]))
                    self._emit(seg_t, seg_x)
                    return t_hit, level, True
            self._emit(np.concatenate(([t], ts)), np.concatenate(([x], xs)))
            t, x = float(ts[-1]), float(xs[-1])
            chunk = min(2 * chunk, _MAX_CHUNK)
        return t, x, False

    def _linear(self, t: float, x: float, t_stop: float) -> tuple[float, float, bool]:
        d, level = self.model.drift, self.level
        x_stop = x + d * (t_stop - t)
        if level is not None and d > 0 and x_stop >= level:
            return t + (level - x) / d, level, True
        return t_stop, x_stop, False

    def _emit(self, seg_t: FloatArray, seg_x: FloatArray) -> None:
        if self.on_segment is not None:
            self.on_segment(seg_t, seg_x)
        if self.recorder is not None:
            # the segment's first point duplicates the previous segment's last one
            first = 1 if self.recorder.length else 0
            self.recorder.add(seg_t[first:].copy(), seg_x[first:].copy())

    def run(self, x0: float, horizon: float) -> tuple[float, float, bool, bool]:
        """Returns (time, state, hit, by_jump)."""
        model, rng = self.model, self.rng
        t, x = 0.0, x0
        rate = model.jump_rate if model.has_jumps else 0.0
        law = model.jump_law
        next_jump = rng.exponential(1.0 / rate) if rate > 0 else math.inf
        if self.recorder is not None:
            self.recorder.add(np.array([0.0]), np.array([x0]))
        while True:
            t_stop = min(next_jump, horizon)
            t, x, hit = self.continuous(t, x, t_stop)
            if hit:
                return t, x, True, False
            if next_jump > horizon:
                return t, x, False, False
            assert law is not None  # noqa: S101
            size = law.sample(rng)
            x = x + size
            if self.recorder is not None:
                self.recorder.jump(t, size, x)
            if self.level is not None and x >= self.level:
                return t, x, True, True
            next_jump = t + rng.exponential(1.0 / rate)


def simulate_first_passage(
    model: LevyModel,
    x0: float,
    level: float,
    dt: float,
    seed: SeedLike,
    *,
    on_segment: SegmentCallback | None = None,
    max_time: float = 1e4,
) -> Passage:
    """Simulate until the first time X ≥ level.

    ``on_segment(times, states)`` is called for every continuous stretch of the
    Euler grid (jumps separate stretches), which lets callers accumulate
    ∫φ(X_s)ds with the trapezoid rule on the same grid.
    """
    if not x0 < level:
        raise ValueError(f"start {x0!r} must lie below the level {level!r}")
    mean_rate(model)
    engine = _Engine(model, dt, as_generator(seed), level, on_segment, None)
    time, state, hit, by_jump = engine.run(x0, max_time)
    if not hit:
        raise HorizonExceededError(
            f"no passage above {level:g} within simulated time {max_time:g}; check the model's mean rate"
        )
    return Passage(time=time, state=state, by_jump=by_jump)


def simulate_path(
    model: LevyModel,
    x0: float,
    horizon: float,
    dt: float,
    seed: SeedLike,
    *,
    level: float | None = None,
    on_segment: SegmentCallback | None = None,
) -> PathSample:
    """Simulate on [0, horizon] (stopping early at ``level`` when given) and keep the grid."""
    if not horizon > 0:
        raise ValueError(f"horizon must be positive, got {horizon!r}")
    recorder = _Recorder()
    engine = _Engine(model, dt, as_generator(seed), level, on_segment, recorder)
    _, _, hit, _ = engine.run(x0, horizon)
    return PathSample(
        dt=dt,
        times=np.concatenate(recorder.times),
        states=np.concatenate(recorder.states),
        jump_times=np.asarray(recorder.jump_times, dtype=float),
        jump_sizes=np.asarray(recorder.jump_sizes, dtype=float),
        jump_indices=np.asarray(recorder.jump_indices, dtype=np.int64),
        cause=TerminalCause.PASSAGE if hit else TerminalCause.HORIZON,
    )


class PathIntegral:
    """Trapezoid accumulator of ∫φ(X_s)ds, or of ∫φ(sup_{r≤s} X_r)ds with ``running_max``.

    Pass an instance as ``on_segment``.
    """

    def __init__(self, integrand: Callable[[FloatArray], FloatArray], running_max: bool = False) -> None:
        self.integrand = integrand
        self.running_max = running_max
        self.total = 0.0
        self._sup = -math.inf

    def __call__(self, times: FloatArray, states: FloatArray) -> None:
        values = states
        if self.running_max:
            values = np.maximum.accumulate(np.maximum(states, self._sup))
            self._sup = float(values[-1])
        self.total += float(integrate.trapezoid(self.integrand(values), times))
