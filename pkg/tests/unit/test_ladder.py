"""Tests for ladder characteristics: q, δ_H, Π̄_H, descending kernels and speciality."""

from __future__ import annotations

import math

import numpy as np
import pytest
from scipy import integrate

from levy_impulse.errors import (
    ExpMomentDivergesError,
    MissingDescendingRepError,
    NoDownwardMovementError,
    NormalizationMismatchError,
)
from levy_impulse.ladder import (
    AtomTail,
    EmpiricalOccupation,
    ExponentialTail,
    FunctionTail,
    KilledUnitDrift,
    Provenance,
    SpecialityCriterion,
    ZeroTail,
    ascending_drift,
    ascending_tail,
    build_ladder_system,
    is_special,
    kill_rate_q,
    mc_descending_occupation,
)
from levy_impulse.process import JumpLaw, LevyModel


@pytest.fixture()
def brownian_with_up_jumps() -> LevyModel:
    """d = 1, σ² = 2, exponential(1) jumps at rate 1: q = √2 and δ_H = √2."""
    return LevyModel(drift=1.0, sigma2=2.0, jump_rate=1.0, jump_law=JumpLaw.exponential_up(1.0))


class TestKillRate:
    def test_brownian(self, brownian):
        assert kill_rate_q(brownian) == pytest.approx(1.0, rel=1e-10)

    def test_spectrally_positive(self, spectrally_positive):
        assert kill_rate_q(spectrally_positive) == pytest.approx(3.0, rel=1e-10)

    def test_mixed(self, brownian_with_up_jumps):
        assert kill_rate_q(brownian_with_up_jumps) == pytest.approx(math.sqrt(2.0), rel=1e-10)

    def test_inside_strip_for_downward_jumps(self, spectrally_negative):
        # ψ(λ) = −2λ + (1/(1−λ) − 1): root at λ = 1/2
        assert kill_rate_q(spectrally_negative) == pytest.approx(0.5, rel=1e-9)

    def test_subordinator_has_no_root(self, pure_drift):
        with pytest.raises(NoDownwardMovementError):
            kill_rate_q(pure_drift)


class TestTails:
    def test_zero_tail(self):
        tail = ZeroTail()
        assert tail.is_zero
        assert tail.mass() == 0.0
        np.testing.assert_array_equal(tail([0.0, 1.0]), [0.0, 0.0])

    def test_exponential_tail_moments(self):
        tail = ExponentialTail(scale=3.0, rate=1.0)
        assert tail.total_rate() == 3.0
        assert tail.mass() == pytest.approx(3.0)
        assert tail.moment(2) == pytest.approx(6.0)
        assert tail.exp_moment(0.5) == pytest.approx(3.0)

    def test_exponential_tail_moment_diverges(self):
        with pytest.raises(ExpMomentDivergesError):
            ExponentialTail(scale=1.0, rate=1.0).exp_moment(1.0)

    def test_atom_tail(self):
        tail = AtomTail(rate=2.0, size=0.5)
        assert not tail.has_density
        assert tail.mass() == pytest.approx(1.0)
        np.testing.assert_array_equal(tail([0.2, 0.7]), [2.0, 0.0])
        np.testing.assert_array_equal(tail.sample(np.random.default_rng(0), 3), [0.5, 0.5, 0.5])

    def test_generic_integrate_matches_closed_form(self):
        closed = ExponentialTail(scale=2.0, rate=3.0)
        generic = FunctionTail(tail_fn=closed, density_fn=closed.density, end=math.inf)
        assert generic.mass() == pytest.approx(closed.mass(), rel=1e-8)
        assert generic.moment(2) == pytest.approx(closed.moment(2), rel=1e-8)

    def test_sampling_by_inversion(self):
        tail = ExponentialTail(scale=1.0, rate=2.0)
        generic = FunctionTail(tail_fn=tail, density_fn=tail.density, end=math.inf)
        draws = generic.sample(np.random.default_rng(3), 20_000)
        assert draws.mean() == pytest.approx(0.5, abs=0.02)


class TestAscendingTail:
    def test_no_upward_jumps(self, brownian):
        assert ascending_tail(brownian).is_zero

    def test_exponential_jumps_closed_form(self, spectrally_positive):
        tail = ascending_tail(spectrally_positive)
        assert isinstance(tail, ExponentialTail)
        assert tail.scale == pytest.approx(3.0)
        assert tail.rate == pytest.approx(1.0)

    def test_uniform_jumps_match_quadrature(self):
        model = LevyModel(drift=1.0, sigma2=2.0, jump_rate=1.0, jump_law=JumpLaw.uniform(0.5, 1.5))
        q = kill_rate_q(model)
        tail = ascending_tail(model, q)
        for x in (0.0, 0.3, 0.8, 1.2):
            expected, _ = integrate.quad(lambda z, x=x: q * math.exp(-q * z) * float(model.up_tail(x + z)), 0, 10)
            assert float(tail(x)) == pytest.approx(expected, rel=1e-6, abs=1e-10)

    def test_deterministic_density_is_derivative(self):
        model = LevyModel(drift=1.0, sigma2=1.0, jump_rate=2.0, jump_law=JumpLaw.deterministic(1.0))
        tail = ascending_tail(model)
        x = np.linspace(0.1, 0.9, 9)
        h = 1e-6
        numeric = -(tail(x + h) - tail(x - h)) / (2 * h)
        np.testing.assert_allclose(tail.density(x), numeric, rtol=1e-5)

    def test_two_sided_needs_empirical_occupation(self):
        model = LevyModel(drift=1.0, jump_rate=1.0, jump_law=JumpLaw.uniform(-1.0, 1.0))
        with pytest.raises(MissingDescendingRepError):
            ascending_tail(model, descending=KilledUnitDrift(1.0))


class TestAscendingDrift:
    def test_remainder_of_mean(self, brownian):
        assert ascending_drift(brownian, 0.25) == pytest.approx(0.75)

    def test_clamped_to_zero_inside_tolerance(self, brownian):
        assert ascending_drift(brownian, 1.0 + 1e-9) == 0.0

    def test_excess_mass_rejected(self, brownian):
        with pytest.raises(NormalizationMismatchError):
            ascending_drift(brownian, 1.5)


class TestBuildLadderSystem:
    def test_brownian(self, brownian):
        ladder = build_ladder_system(brownian)
        assert ladder.q == pytest.approx(1.0)
        assert ladder.delta_h == pytest.approx(1.0)
        assert ladder.tail.is_zero
        assert isinstance(ladder.descending, KilledUnitDrift)
        assert ladder.provenance is Provenance.CLOSED_FORM

    def test_driftless_spectrally_positive(self, spectrally_positive):
        ladder = build_ladder_system(spectrally_positive)
        assert ladder.is_driftless
        assert ladder.jump_mass == pytest.approx(3.0)

    def test_mixed_normalization(self, brownian_with_up_jumps):
        ladder = build_ladder_system(brownian_with_up_jumps)
        assert ladder.delta_h == pytest.approx(math.sqrt(2.0), rel=1e-9)
        assert ladder.delta_h + ladder.jump_mass == pytest.approx(ladder.mean_rate, rel=1e-10)
        assert ladder.normalization_residual < 1e-10

    def test_subordinator(self):
        model = LevyModel(drift=1.0, jump_rate=1.0, jump_law=JumpLaw.deterministic(1.0))
        ladder = build_ladder_system(model)
        assert ladder.q is None
        assert ladder.descending is None
        assert isinstance(ladder.tail, AtomTail)
        assert ladder.delta_h == pytest.approx(1.0)
        assert ladder.normalization_residual == pytest.approx(0.0)

    def test_downward_jumps_without_descending(self, spectrally_negative):
        ladder = build_ladder_system(spectrally_negative, descending=False)
        assert ladder.descending is None
        assert ladder.tail.is_zero
        assert ladder.delta_h == pytest.approx(1.0)

    def test_to_dict(self, brownian):
        data = build_ladder_system(brownian).to_dict()
        assert data["tail"] == {"kind": "zero"}
        assert data["descending"] == {"kind": "killed-unit-drift", "q": pytest.approx(1.0)}
        assert data["provenance"] == "closed-form"


class TestDescendingKernels:
    def test_killed_unit_drift_average(self):
        rep = KilledUnitDrift(2.0)
        # E[x − Z] and E[(x − Z)²] for Z ~ Exp(2)
        np.testing.assert_allclose(rep.average(lambda y: y, [0.0, 1.0]), [-0.5, 0.5])
        np.testing.assert_allclose(rep.average(lambda y: y**2, [0.0]), [0.5])

    def test_empirical_average(self):
        rep = EmpiricalOccupation(
            edges=np.array([0.0, 1.0, 2.0]), density=np.array([0.5, 0.5]), se=np.zeros(2)
        )
        assert rep.total_mass() == pytest.approx(1.0)
        np.testing.assert_allclose(rep.average(lambda y: y, [2.0]), [1.0])

    def test_mc_occupation_has_unit_mass(self, spectrally_negative):
        rep = mc_descending_occupation(spectrally_negative, n_paths=20, horizon=50.0, seed=1, dt=1e-2)
        assert rep.total_mass() == pytest.approx(1.0, abs=0.1)
        assert np.all(rep.density >= 0)

    def test_mc_occupation_needs_downward_movement(self, pure_drift):
        with pytest.raises(NoDownwardMovementError):
            mc_descending_occupation(pure_drift, n_paths=2, horizon=1.0, seed=0)


class TestSpeciality:
    def test_no_ladder_jumps(self, brownian):
        report = is_special(build_ladder_system(brownian))
        assert report.is_special
        assert report.criterion is SpecialityCriterion.NO_JUMPS
        assert report.regular_upward

    def test_log_convex_tail(self, spectrally_positive):
        report = is_special(build_ladder_system(spectrally_positive))
        assert report.is_special
        assert report.criterion is SpecialityCriterion.LOG_CONVEX_TAIL
        assert not report.regular_upward
