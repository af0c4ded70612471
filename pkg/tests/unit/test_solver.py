"""Tests for 𝔊, the threshold crossings and the ρ* solvers."""

from __future__ import annotations

import logging
import math

import numpy as np
import pytest
from scipy import optimize

from levy_impulse import presets
from levy_impulse.config import AuditLevel, Numerics
from levy_impulse.errors import (
    AboveMaximumError,
    ExpMomentDivergesError,
    NonPositiveMeanError,
    NoThresholdError,
    NoUpperCrossingError,
    UnboundedError,
)
from levy_impulse.ladder import Provenance, build_ladder_system
from levy_impulse.process import JumpLaw, LevyModel
from levy_impulse.solver import (
    Degeneracy,
    GFunction,
    big_g,
    context_for,
    solve,
    solve_fixed_restart,
    threshold_roots,
)
from levy_impulse.transform import (
    Cost,
    Curve,
    GainRate,
    Gamma,
    PayoffSpec,
    Restart,
    RestartMode,
    UnimodalInfo,
    gain_rate,
)


def _ramp_down() -> GainRate:
    """g = 0 left of the origin, −x right of it."""

    def fn(x):
        return np.where(x < 0, 0.0, -x)

    return GainRate(
        fn=fn,
        generator=Curve(fn=fn),
        hat_h=Curve(fn=np.zeros_like),
        provenance=Provenance.CLOSED_FORM,
        unimodal=UnimodalInfo(a=0.0, g_max=0.0, lo=-8.0, hi=8.0),
    )


def _harvest_fixed_rho(K: float) -> float:
    """ρ with 2p − 1 − ρ·logit(p) = K, p = (1 + √(1 − 2ρ))/2: logistic harvest restarting at 0."""

    def excess(rho: float) -> float:
        p = 0.5 * (1.0 + math.sqrt(1.0 - 2.0 * rho))
        S = math.log(p / (1.0 - p))
        return 2.0 * p - 1.0 - rho * S - K

    return optimize.brentq(excess, 1e-12, 0.5 - 1e-12, xtol=1e-14)


def _drifting_subordinator() -> LevyModel:
    """Unit drift plus exponential(1) jumps at rate 1: u(t) = ½ + ½e^{−2t}, g = 2 − x² under γ = x, h = x²."""
    return LevyModel(drift=1.0, jump_rate=1.0, jump_law=JumpLaw.exponential_up(1.0))


class TestThresholdRoots:
    def test_brownian_quadratic(self, brownian, quadratic_payoff):
        g = context_for(brownian, quadratic_payoff).g
        lower, upper = threshold_roots(g, -1.0)
        assert lower == pytest.approx(0.0, abs=1e-8)
        assert upper == pytest.approx(2.0, abs=1e-8)

    def test_above_maximum(self, brownian, quadratic_payoff):
        g = context_for(brownian, quadratic_payoff).g
        with pytest.raises(AboveMaximumError):
            threshold_roots(g, 0.1)

    def test_no_upper_crossing_inside_bound(self, brownian, quadratic_payoff):
        g = context_for(brownian, quadratic_payoff).g
        with pytest.raises(NoUpperCrossingError):
            threshold_roots(g, -1e6, working_bound=10.0)

    def test_missing_lower_crossing(self):
        lower, upper = threshold_roots(_ramp_down(), -1.0, working_bound=100.0)
        assert lower is None
        assert upper == pytest.approx(1.0)

    def test_needs_certificate(self, brownian, quadratic_payoff):
        g = gain_rate(build_ladder_system(brownian), quadratic_payoff)
        with pytest.raises(ValueError, match="unimodality"):
            threshold_roots(g, -1.0)


class TestBigG:
    def test_closed_form_values(self, brownian, quadratic_payoff):
        ctx = context_for(brownian, quadratic_payoff)
        # band 1 ± r with r² = −ρ: Ξ = 4r³/3
        for rho in (-0.25, -1.0, -4.0):
            r = math.sqrt(-rho)
            assert ctx.big_g(rho) == pytest.approx(4.0 * r**3 / 3.0 - 4.0 / 3.0, abs=1e-9)

    def test_above_maximum_is_minus_K(self, brownian, quadratic_payoff):
        ladder = build_ladder_system(brownian)
        g = context_for(brownian, quadratic_payoff, ladder=ladder).g
        assert big_g(ladder, g, quadratic_payoff, 0.5) == pytest.approx(-4.0 / 3.0)

    def test_nonincreasing(self, brownian, quadratic_payoff):
        big = context_for(brownian, quadratic_payoff).big_g
        values = [big(rho) for rho in np.linspace(-3.0, 0.5, 15)]
        assert all(b <= a + 1e-12 for a, b in zip(values, values[1:]))
        assert big.is_monotone()

    def test_memoised(self, brownian, quadratic_payoff):
        big = context_for(brownian, quadratic_payoff).big_g
        assert big.evaluate(-1.5) is big.evaluate(-1.5)

    def test_shortcut_used_for_regular_special_ladder(self, brownian, quadratic_payoff):
        big = context_for(brownian, quadratic_payoff).big_g
        evaluation = big.evaluate(-1.0)
        assert evaluation.shortcut
        assert evaluation.argmax == pytest.approx(evaluation.x_lower)

    def test_unbounded_growth(self, brownian, quadratic_payoff):
        big = GFunction(build_ladder_system(brownian), _ramp_down(), quadratic_payoff, Numerics(working_bound=100.0))
        evaluation = big.evaluate(-1.0)
        assert math.isinf(evaluation.value)
        assert evaluation.x_upper == pytest.approx(1.0)


class TestSolve:
    def test_brownian_quadratic(self, brownian, quadratic_payoff):
        solution = solve(brownian, quadratic_payoff)
        assert solution.rho_star == pytest.approx(-1.0, abs=1e-6)
        assert solution.s == pytest.approx(0.0, abs=1e-6)
        assert solution.S == pytest.approx(2.0, abs=1e-6)
        assert solution.degeneracy is Degeneracy.NONE
        assert solution.used_special_shortcut
        assert abs(solution.cycle_residual) <= 1e-6
        assert solution.g_max == pytest.approx(0.0, abs=1e-12)
        assert solution.maximiser == pytest.approx(1.0, abs=1e-6)

    @pytest.mark.parametrize("K", [0.5, 1.0, 2.0])
    def test_brownian_closed_form(self, brownian, K):
        payoff = PayoffSpec(Gamma.linear(1.0), Cost.polynomial(0.0, 0.0, 1.0), K)
        r = (0.75 * K) ** (1.0 / 3.0)
        solution = solve(brownian, payoff)
        assert solution.rho_star == pytest.approx(-(r**2), abs=1e-6)
        assert solution.s == pytest.approx(1.0 - r, abs=1e-6)
        assert solution.S == pytest.approx(1.0 + r, abs=1e-6)

    def test_pure_drift(self, pure_drift):
        # g = 1 − x², band ±r with 4r³/3 = K
        payoff = PayoffSpec(Gamma.linear(1.0), Cost.polynomial(0.0, 0.0, 1.0), 0.5)
        r = 0.375 ** (1.0 / 3.0)
        solution = solve(pure_drift, payoff)
        assert solution.rho_star == pytest.approx(1.0 - r**2, abs=1e-6)
        assert solution.S == pytest.approx(r, abs=1e-6)

    @pytest.mark.parametrize("c", [0.5, 3.0])
    def test_scale_covariance(self, brownian, quadratic_payoff, c):
        base = solve(brownian, quadratic_payoff)
        scaled = solve(brownian, quadratic_payoff.scaled(c))
        assert scaled.rho_star == pytest.approx(c * base.rho_star, rel=1e-6)
        assert scaled.s == pytest.approx(base.s, abs=1e-6)
        assert scaled.S == pytest.approx(base.S, abs=1e-6)

    def test_driftless_ladder_without_shortcut(self, fast_numerics):
        spec = presets.inventory()
        solution = solve(spec.model, spec.payoff, fast_numerics)
        assert not solution.used_special_shortcut
        assert solution.s < solution.maximiser < solution.S
        g = solution.context.g
        assert float(g(np.array([solution.S]))[0]) == pytest.approx(solution.rho_star, abs=1e-7)
        assert abs(solution.cycle_residual) <= 1e-5

    def test_reuses_supplied_ladder(self, brownian, quadratic_payoff):
        ladder = build_ladder_system(brownian)
        solution = solve(brownian, quadratic_payoff, ladder=ladder)
        assert solution.context.ladder is ladder

    def test_to_dict(self, brownian, quadratic_payoff):
        data = solve(brownian, quadratic_payoff).to_dict()
        assert data["degeneracy"] == "none"
        assert data["restart"] == "free"
        assert set(data) >= {"rho_star", "s", "S", "cycle_residual", "bracket", "iterations"}


class TestDegeneracies:
    def test_constant_gain_rate_has_no_threshold(self, brownian):
        payoff = PayoffSpec(Gamma.linear(1.0), Cost.zero(), 1.0)
        with pytest.raises(NoThresholdError):
            solve(brownian, payoff)

    def test_gain_rate_rising_to_the_bound_is_unbounded(self, brownian):
        payoff = PayoffSpec(Gamma.polynomial(0.0, 0.0, 1.0), Cost.zero(), 1.0)
        with pytest.raises(UnboundedError):
            solve(brownian, payoff, Numerics(working_bound=100.0))

    def test_exponential_cost_at_kill_rate_diverges(self, brownian):
        payoff = PayoffSpec(Gamma.exponential(), Cost.exponential(0.0, 0.0, 1.0, 1.0), 1.0)
        with pytest.raises(ExpMomentDivergesError):
            solve(brownian, payoff)

    def test_costly_harvest_is_inaction_candidate(self):
        spec = presets.harvesting(K=3.0, restart=None)
        solution = solve(spec.model, spec.payoff)
        assert solution.degeneracy is Degeneracy.INACTION_CANDIDATE
        assert solution.rho_star <= 1e-8

    def test_non_positive_mean(self, quadratic_payoff):
        with pytest.raises(NonPositiveMeanError):
            solve(LevyModel(drift=-1.0, sigma2=1.0), quadratic_payoff)


class TestFixedRestart:
    def test_harvest_matches_closed_form(self):
        spec = presets.harvesting(K=0.2, restart=0.0)
        solution = solve(spec.model, spec.payoff)
        assert solution.restart is RestartMode.FIXED
        assert solution.s == 0.0
        assert solution.rho_star == pytest.approx(_harvest_fixed_rho(0.2), abs=1e-7)

    def test_free_restart_does_at_least_as_well(self):
        fixed = solve(*_model_payoff(presets.harvesting(restart=0.0)))
        free = solve(*_model_payoff(presets.harvesting(restart=None)))
        assert free.rho_star >= fixed.rho_star - 1e-8
        assert free.s < 0.0

    def test_requires_fixed_restart(self, brownian, quadratic_payoff):
        with pytest.raises(ValueError, match="fixed restart"):
            solve_fixed_restart(brownian, quadratic_payoff)

    def test_restart_above_band(self, brownian):
        payoff = PayoffSpec(Gamma.linear(1.0), Cost.polynomial(0.0, 0.0, 1.0), 4.0 / 3.0, Restart.fixed(3.0))
        solution = solve_fixed_restart(brownian, payoff)
        assert solution.S > 3.0
        assert abs(solution.cycle_residual) <= 1e-6
        # restarting away from the free optimum costs something
        assert solution.rho_star < -1.0


def _model_payoff(spec):
    return spec.model, spec.payoff


class TestPresetSolve:
    def test_brownian_quadratic_preset(self):
        spec = presets.brownian_quadratic()
        solution = solve(spec.model, spec.payoff, spec.numerics)
        assert solution.rho_star == pytest.approx(-1.0, abs=1e-6)
        assert solution.s == pytest.approx(0.0, abs=1e-6)
        assert solution.S == pytest.approx(2.0, abs=1e-6)
        assert solution.degeneracy is Degeneracy.NONE


class TestRestartAudit:
    @pytest.fixture()
    def payoff(self) -> PayoffSpec:
        return PayoffSpec(Gamma.linear(1.0), Cost.polynomial(0.0, 0.0, 1.0), 1.0)

    def test_golden_section_overrides_lower_crossing(self, payoff, caplog):
        with caplog.at_level(logging.WARNING, logger="levy_impulse.solver"):
            solution = solve(_drifting_subordinator(), payoff)

        assert solution.degeneracy is Degeneracy.NONE
        assert not solution.used_special_shortcut
        assert solution.rho_star == pytest.approx(0.8503631, abs=1e-4)
        assert solution.S == pytest.approx(math.sqrt(2.0 - solution.rho_star), abs=1e-7)
        assert solution.s == pytest.approx(-0.86638, abs=1e-3)
        assert solution.s > solution.x_lower + 0.1
        assert abs(solution.cycle_residual) <= Numerics().tol_g * payoff.K

        big = solution.context.big_g
        assert big.xi(solution.rho_star, solution.s, solution.S) > big.xi(
            solution.rho_star, solution.x_lower, solution.S
        )
        disagreements = [r for r in caplog.records if "shortcut disagrees" in r.getMessage()]
        assert len(disagreements) == 1

    def test_fast_audit_restarts_at_lower_crossing(self, payoff):
        solution = solve(_drifting_subordinator(), payoff, Numerics(audit=AuditLevel.FAST))
        assert solution.used_special_shortcut
        assert solution.s == solution.x_lower

    def test_agreeing_shortcut_is_reported(self, brownian, quadratic_payoff, caplog):
        with caplog.at_level(logging.WARNING, logger="levy_impulse.solver"):
            solution = solve(brownian, quadratic_payoff)
        assert solution.used_special_shortcut
        assert solution.s == solution.x_lower
        assert not [r for r in caplog.records if "shortcut disagrees" in r.getMessage()]


class TestBoundedJumps:
    def test_unit_jumps_solve(self, unit_jumps):
        payoff = PayoffSpec(Gamma.linear(1.0), Cost.quadratic_shift(0.0, 1.0), 1.0)
        solution = solve(unit_jumps, payoff)
        assert solution.degeneracy is Degeneracy.NONE
        assert not solution.used_special_shortcut
        assert solution.s < solution.maximiser < solution.S
        g = solution.context.g
        assert float(g(np.array([solution.S]))[0]) == pytest.approx(solution.rho_star, abs=1e-7)


class TestCycleResidual:
    @pytest.mark.parametrize("model_name", ["brownian", "pure_drift", "unit_jumps", "subordinator"])
    def test_residual_within_tolerance_when_non_degenerate(self, request, model_name):
        model = _drifting_subordinator() if model_name == "subordinator" else request.getfixturevalue(model_name)
        payoff = PayoffSpec(Gamma.linear(1.0), Cost.polynomial(0.0, 0.0, 1.0), 0.75)
        numerics = Numerics()
        solution = solve(model, payoff, numerics)
        assert solution.degeneracy is Degeneracy.NONE
        assert abs(solution.cycle_residual) <= numerics.tol_g * payoff.K
