"""Ready-made problems: the Brownian quadratic benchmark, inventory control and harvesting."""

from __future__ import annotations

from collections.abc import Callable

from levy_impulse.config import Numerics
from levy_impulse.problem import ProblemSpec
from levy_impulse.process import JumpLaw, LevyModel
from levy_impulse.transform import Cost, Gamma, PayoffSpec, Restart


def brownian_quadratic(K: float = 4.0 / 3.0) -> ProblemSpec:
    """X_t = t + √2·W_t, γ(x) = x, h(x) = x²: optimum known in closed form."""
    return ProblemSpec(
        LevyModel(drift=1.0, sigma2=2.0),
        PayoffSpec(Gamma.linear(1.0), Cost.polynomial(0.0, 0.0, 1.0), K),
    )


def inventory(
    *,
    demand_rate: float = 1.0,
    delivery_rate: float = 4.0,
    mean_delivery: float = 1.0,
    price: float = 1.0,
    holding: float = 1.0,
    target: float = 0.0,
    K: float = 1.0,
) -> ProblemSpec:
    """Spectrally positive stock process: continuous depletion, exponential upward batches.

    Reward is linear in the level at the intervention, the holding cost quadratic around ``target``.
    """
    model = LevyModel(
        drift=-demand_rate,
        jump_rate=delivery_rate,
        jump_law=JumpLaw.exponential_up(1.0 / mean_delivery),
    )
    return ProblemSpec(model, PayoffSpec(Gamma.linear(price), Cost.quadratic_shift(target, holding), K))


def harvesting(
    *,
    growth: float = 1.0,
    shock_rate: float = 0.0,
    mean_shock: float = 1.0,
    height: float = 2.0,
    width: float = 1.0,
    K: float = 0.2,
    restart: float | None = 0.0,
) -> ProblemSpec:
    """Logistic harvest value on a growing population with optional downward shocks.

    ``restart=None`` lets the harvester choose the post-harvest level.
    """
    law = JumpLaw.exponential_down(1.0 / mean_shock) if shock_rate > 0 else None
    model = LevyModel(drift=growth, jump_rate=shock_rate, jump_law=law)
    mode = Restart() if restart is None else Restart.fixed(restart)
    return ProblemSpec(model, PayoffSpec(Gamma.logistic(height, width), Cost.zero(), K, mode), Numerics())


PRESETS: dict[str, Callable[[], ProblemSpec]] = {
    "brownian-quadratic": brownian_quadratic,
    "inventory": inventory,
    "harvesting-fixed": harvesting,
    "harvesting-free": lambda: harvesting(restart=None),
    "harvesting-shocks": lambda: harvesting(growth=2.0, shock_rate=1.0, restart=0.0),
}


def get_preset(name: str) -> ProblemSpec:
    try:
        return PRESETS[name]()
    except KeyError:
        raise KeyError(f"unknown preset {name!r}; choose from {', '.join(sorted(PRESETS))}") from None
