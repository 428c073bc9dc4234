"""Tests for the FDR bound engine.

The closed-form Clayton ``gamma_min`` and the sharper-bound correction
``b`` are validated against values computed by an independent route —
direct numerical integration of the mixture representation (adaptive
log-segmented Gauss-Legendre quadrature over the mixing density, carried
to six significant digits and frozen below).  Crossover points are
pinned by hand algebra, exact-in-floating-point sign guarantees are
asserted literally (``b >= 0``, ``gamma_min <= 1``), and the report
invariants are exercised across families, dimensions, and dependence
strengths including regimes where the mixing variable underflows double
precision.
"""

import math
import warnings

import numpy as np
import pytest
from numpy.testing import assert_allclose

from copfdr import (
    BoundReport,
    CopulaModel,
    RngStream,
    calibrate_q,
    gamma_floor,
    gamma_min_clayton,
    gamma_min_mc,
    lower_bound,
    sharper_upper_bound,
    z_star,
    z_star_floor,
    z_star_k,
)
from copfdr.bounds import _bound_terms, _gamma_terms
from copfdr.copula import sample_log_mixing

INDEP = CopulaModel("independence")

# Frozen oracle values, (m=20, q=0.05) unless stated: gamma_min for
# Clayton from the closed form independently re-derived via regularised
# incomplete gamma integrals; b from direct quadrature of the
# per-level integrands at m0=16.
GAMMA_CLAYTON_ORACLE = {
    1e-3: 0.962224,
    0.25: 0.464926,
    0.5: 0.316445,
    1.0: 0.188575,
    1.7: 0.125030,
    2.0: 0.111783,
    4.0: 0.077609,
    8.0: 0.062952,
    1e3: 0.050097,
}
B_ORACLE = {1.7: 0.009607, 2.0: 0.009764, 8.0: 0.006450}
SD_PER_DRAW_ORACLE_ETA2 = 0.04714


# -----------------------------------------------------------------------------
# crossover points
# -----------------------------------------------------------------------------


class TestCrossovers:
    def test_hand_values(self):
        # Clayton eta=1: psi_inv(u) = 1/u - 1, so
        # z* = ln 20 / (400 - 20) and z*_1 = ln 2 / (400 - 200)
        assert z_star(CopulaModel("clayton", 1.0), 20, 0.05) == pytest.approx(
            math.log(20.0) / 380.0, rel=1e-12
        )
        assert z_star_k(CopulaModel("clayton", 1.0), 20, 0.05, 1) == pytest.approx(
            math.log(2.0) / 200.0, rel=1e-12
        )
        # Gumbel eta=2: psi_inv(u) = (ln 1/u)^2
        want = math.log(20.0) / (math.log(400.0) ** 2 - math.log(20.0) ** 2)
        assert z_star(CopulaModel("gumbel", 2.0), 20, 0.05) == pytest.approx(
            want, rel=1e-12
        )

    def test_independence_unity(self):
        assert z_star(INDEP, 20, 0.05) == 1.0
        assert z_star(CopulaModel("gumbel", 1.0), 20, 0.05) == 1.0
        for k in (1, 7, 19):
            assert z_star_k(INDEP, 20, 0.05, k) == 1.0

    def test_floor_point_above_z_star(self):
        for model in (CopulaModel("clayton", 0.5), CopulaModel("clayton", 3.0),
                      CopulaModel("gumbel", 2.0), CopulaModel("gumbel", 8.0)):
            assert z_star_floor(model, 20, 0.05) > z_star(model, 20, 0.05)

    def test_extreme_eta_underflows_to_zero(self):
        # the linear value is below the double floor; the engine keeps logs
        assert z_star(CopulaModel("clayton", 1e3), 20, 0.05) == 0.0

    def test_validation(self):
        with pytest.raises(ValueError):
            z_star(INDEP, 1, 0.05)
        with pytest.raises(ValueError):
            z_star(INDEP, 20, 0.0)
        with pytest.raises(ValueError):
            z_star_k(INDEP, 20, 0.05, 0)
        with pytest.raises(ValueError):
            z_star_k(INDEP, 20, 0.05, 20)


# -----------------------------------------------------------------------------
# gamma_min
# -----------------------------------------------------------------------------


class TestGammaMin:
    @pytest.mark.parametrize("eta,want", sorted(GAMMA_CLAYTON_ORACLE.items()))
    def test_clayton_closed_form_oracle(self, eta, want):
        assert gamma_min_clayton(eta, 20, 0.05) == pytest.approx(want, abs=5e-6)

    def test_clayton_q_free(self):
        assert gamma_min_clayton(2.0, 20, 0.05) == gamma_min_clayton(2.0, 20, 0.3)

    def test_clayton_monotone_decreasing_in_eta(self):
        etas = [0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0, 100.0]
        values = [gamma_min_clayton(e, 20, 0.05) for e in etas]
        assert all(a > b for a, b in zip(values, values[1:]))

    def test_clayton_limits(self):
        # convergence to the independence value 1 is sqrt(eta)-slow
        assert gamma_min_clayton(1e-6, 20, 0.05) > 0.998
        # strong-dependence limit approaches 1/m
        assert gamma_min_clayton(1e6, 20, 0.05) == pytest.approx(0.05, abs=1e-3)

    def test_validation(self):
        with pytest.raises(ValueError):
            gamma_min_clayton(0.0, 20, 0.05)
        with pytest.raises(ValueError):
            gamma_min_clayton(2.0, 1, 0.05)

    def test_independence_mc_is_exactly_one(self):
        assert gamma_min_mc(INDEP, 20, 0.05, 10, RngStream(0)) == 1.0
        assert gamma_min_mc(CopulaModel("gumbel", 1.0), 20, 0.05, 10, RngStream(0)) == 1.0

    def test_mc_matches_closed_form(self):
        model = CopulaModel("clayton", 2.0)
        stream = RngStream(41, (0,))
        draws = 100_000
        value = gamma_min_mc(model, 20, 0.05, draws, stream)
        terms = _gamma_terms(model, 20, 0.05, sample_log_mixing(model, draws, stream))
        se = terms.std(ddof=1) / math.sqrt(draws)
        assert abs(value - gamma_min_clayton(2.0, 20, 0.05)) < 4.0 * se

    def test_mc_never_exceeds_one(self):
        # the integrand is evaluated through expm1 of the same quantity
        # that defines its indicator, so the per-draw terms are >= 0 in
        # floating point and the estimate cannot exceed 1
        for eta, seed in ((1.01, 1), (2.0, 2), (10.0, 3)):
            model = CopulaModel("gumbel", eta)
            value = gamma_min_mc(model, 20, 0.05, 20_000, RngStream(seed))
            assert value <= 1.0
            assert value > 0.0

    def test_gamma_terms_nonnegative_exactly(self):
        for model in (CopulaModel("clayton", 0.3), CopulaModel("clayton", 5.0),
                      CopulaModel("gumbel", 1.2), CopulaModel("gumbel", 7.0)):
            log_z = sample_log_mixing(model, 50_000, RngStream(77))
            terms = _gamma_terms(model, 20, 0.05, log_z)
            assert np.all(terms >= 0.0)
            assert np.all(np.isfinite(terms))


class TestGammaFloor:
    def test_independence_unity(self):
        assert gamma_floor(INDEP, 20, 0.05, 10) == 1.0

    def test_clayton_extreme_hand_value(self):
        # at eta = 1e3 the two floor arguments are 19/q * F and the
        # survivor term; the minimum gives 1 - 0.9515... ~ 0.0485
        value = gamma_floor(CopulaModel("clayton", 1e3), 20, 0.05, 10)
        assert value == pytest.approx(0.0485, abs=5e-4)

    @pytest.mark.parametrize("eta", [0.25, 1.0, 2.0, 8.0, 100.0])
    def test_floor_below_gamma_clayton(self, eta):
        floor = gamma_floor(CopulaModel("clayton", eta), 20, 0.05, 10)
        assert floor <= gamma_min_clayton(eta, 20, 0.05) + 1e-9

    @pytest.mark.parametrize("eta", [1.5, 3.0, 8.0])
    def test_floor_below_gamma_gumbel(self, eta):
        model = CopulaModel("gumbel", eta)
        stream = RngStream(9, (1,))
        floor = gamma_floor(model, 20, 0.05, 20_000, stream)
        gamma = gamma_min_mc(model, 20, 0.05, 20_000, stream)
        assert floor <= gamma + 1e-9

    def test_floor_can_be_negative(self):
        # moderate dependence gives a large first argument: the floor is
        # a real number, not clamped at zero
        value = gamma_floor(CopulaModel("clayton", 1.7), 20, 0.05, 10)
        assert value < 0.0

    def test_gumbel_needs_stream(self):
        with pytest.raises(ValueError):
            gamma_floor(CopulaModel("gumbel", 2.0), 20, 0.05, 100)


class TestLowerBound:
    def test_independence_is_classical(self):
        assert lower_bound(INDEP, 20, 16, 0.05, 10) == pytest.approx(0.04, abs=1e-15)

    def test_clayton_closed_form(self):
        want = 16 * 0.05 / 20 * gamma_min_clayton(1.7, 20, 0.05)
        assert lower_bound(CopulaModel("clayton", 1.7), 20, 16, 0.05, 10) == pytest.approx(
            want, rel=1e-12
        )

    def test_gumbel_requires_stream(self):
        with pytest.raises(ValueError):
            lower_bound(CopulaModel("gumbel", 2.0), 20, 16, 0.05, 100)

    def test_gumbel_mc(self):
        value = lower_bound(
            CopulaModel("gumbel", 3.0), 20, 16, 0.05, 50_000, RngStream(13)
        )
        assert 0.0 < value < 0.04


# -----------------------------------------------------------------------------
# sharper upper bound
# -----------------------------------------------------------------------------


class TestSharperUpperBound:
    def test_independence_short_circuit(self):
        report = sharper_upper_bound(INDEP, 20, 16, 0.05, 100, RngStream(0))
        assert report.classical_upper == 0.04
        assert report.sharper_upper == 0.04
        assert report.b == 0.0
        assert report.lower == 0.04
        assert report.gamma_min == 1.0
        assert report.gamma_floor == 1.0
        assert report.z_star == 1.0
        assert report.fz_at_zstar == 1.0
        assert report.bound_sd_per_draw == 0.0

    @pytest.mark.parametrize("eta,want_b", sorted(B_ORACLE.items()))
    def test_b_against_quadrature_oracle(self, eta, want_b):
        report = sharper_upper_bound(
            CopulaModel("clayton", eta), 20, 16, 0.05, 100_000, RngStream(7, (101, 0))
        )
        se = report.bound_sd_per_draw / math.sqrt(report.mc_draws)
        assert abs(report.b - want_b) < 4.0 * se

    def test_sd_per_draw_against_oracle(self):
        # exact per-draw standard deviation at eta=2 from quadrature of
        # the second moment: 0.04714
        report = sharper_upper_bound(
            CopulaModel("clayton", 2.0), 20, 16, 0.05, 100_000, RngStream(7, (101, 0))
        )
        assert report.bound_sd_per_draw == pytest.approx(SD_PER_DRAW_ORACLE_ETA2, abs=3e-3)

    @pytest.mark.parametrize(
        "family,eta,m,m0",
        [
            ("clayton", 0.3, 5, 5),
            ("clayton", 1.0, 20, 16),
            ("clayton", 3.0, 20, 20),
            ("clayton", 50.0, 10, 8),
            ("gumbel", 1.2, 5, 3),
            ("gumbel", 2.0, 20, 16),
            ("gumbel", 5.0, 20, 20),
            ("gumbel", 15.0, 10, 10),
        ],
    )
    def test_report_invariants(self, family, eta, m, m0):
        report = sharper_upper_bound(
            CopulaModel(family, eta), m, m0, 0.05, 4000, RngStream(3, (2,))
        )
        classical = m0 * 0.05 / m
        assert report.classical_upper == pytest.approx(classical, rel=1e-15)
        assert report.b >= 0.0  # exact, not approximate
        assert report.sharper_upper == classical - report.b
        assert report.lower <= report.sharper_upper + 1e-9
        assert report.gamma_floor <= report.gamma_min + 1e-9
        assert report.gamma_min <= 1.0
        assert 0.0 <= report.fz_at_zstar <= 1.0
        assert report.bound_sd_per_draw >= 0.0

    def test_small_m0_gives_zero_b(self):
        for m0 in (0, 1):
            report = sharper_upper_bound(
                CopulaModel("clayton", 2.0), 10, m0, 0.05, 500, RngStream(1)
            )
            assert report.b == 0.0
            assert report.sharper_upper == report.classical_upper

    def test_extreme_eta_log_space(self):
        # Z itself underflows double precision at eta = 1e3; every report
        # field must still come out finite with the right structure
        report = sharper_upper_bound(
            CopulaModel("clayton", 1e3), 20, 16, 0.05, 100_000, RngStream(7, (101, 0))
        )
        assert report.b > 0.0
        assert report.sharper_upper == pytest.approx(0.04, abs=5e-4)
        assert report.lower == pytest.approx(0.04 * 0.050097, rel=1e-4)
        assert report.gamma_floor <= report.gamma_min
        assert report.fz_at_zstar == pytest.approx(0.0025, abs=2e-4)
        assert report.z_star == 0.0  # underflow, documented

    def test_near_independence_limit(self):
        report = sharper_upper_bound(
            CopulaModel("clayton", 1e-3), 20, 16, 0.05, 100_000, RngStream(7, (101, 0))
        )
        assert report.sharper_upper == pytest.approx(0.04, abs=1e-4)
        assert report.lower == pytest.approx(0.04, abs=2e-3)

    def test_crn_same_stream_same_report(self):
        model = CopulaModel("gumbel", 4.0)
        first = sharper_upper_bound(model, 20, 16, 0.05, 2000, RngStream(5, (8,)))
        second = sharper_upper_bound(model, 20, 16, 0.05, 2000, RngStream(5, (8,)))
        assert first == second

    def test_bound_terms_nonnegative_exactly(self):
        for model in (CopulaModel("clayton", 1.7), CopulaModel("gumbel", 3.0)):
            log_z = sample_log_mixing(model, 30_000, RngStream(15))
            terms = _bound_terms(model, 20, 16, 0.05, log_z)
            assert np.all(terms >= 0.0)
            assert np.all(np.isfinite(terms))

    def test_validation(self):
        with pytest.raises(ValueError):
            sharper_upper_bound(INDEP, 1, 1, 0.05, 10, RngStream(0))
        with pytest.raises(ValueError):
            sharper_upper_bound(INDEP, 10, 11, 0.05, 10, RngStream(0))
        with pytest.raises(ValueError):
            sharper_upper_bound(INDEP, 10, 5, 0.05, 0, RngStream(0))

    def test_report_dataclass_validation(self):
        with pytest.raises(ValueError):
            BoundReport(
                classical_upper=0.04, sharper_upper=0.05, b=-0.01, lower=0.02,
                gamma_min=0.5, gamma_floor=0.1, z_star=0.1, fz_at_zstar=0.5,
                bound_sd_per_draw=0.01, mc_draws=10,
            )
        with pytest.raises(ValueError):
            BoundReport(
                classical_upper=0.04, sharper_upper=0.03, b=0.01, lower=0.05,
                gamma_min=1.25, gamma_floor=0.1, z_star=0.1, fz_at_zstar=0.5,
                bound_sd_per_draw=0.01, mc_draws=10,
            )


# -----------------------------------------------------------------------------
# calibration
# -----------------------------------------------------------------------------


class TestCalibrateQ:
    def test_independence_identity(self):
        assert calibrate_q(INDEP, 20, 16, 0.05, 10, RngStream(0)) == 0.05

    def test_clayton_enlarges_level(self):
        model = CopulaModel("clayton", 1.7)
        stream = RngStream(19, (0,))
        q_prime = calibrate_q(model, 20, 16, 0.05, 5000, stream, tol=1e-4)
        assert q_prime >= 0.05
        # the satisfying side is returned: re-evaluating with the same
        # stream (common random numbers) must respect the cap exactly
        report = sharper_upper_bound(model, 20, 16, q_prime, 5000, stream)
        assert report.sharper_upper <= 16 / 20 * 0.05 + 1e-12

    def test_deterministic(self):
        model = CopulaModel("gumbel", 2.5)
        a = calibrate_q(model, 10, 8, 0.1, 2000, RngStream(4, (1,)))
        b = calibrate_q(model, 10, 8, 0.1, 2000, RngStream(4, (1,)))
        assert a == b

    def test_tolerance_controls_bracket(self):
        model = CopulaModel("clayton", 1.0)
        stream = RngStream(6, (0,))
        coarse = calibrate_q(model, 10, 10, 0.05, 3000, stream, tol=1e-2)
        fine = calibrate_q(model, 10, 10, 0.05, 3000, stream, tol=1e-4)
        assert abs(coarse - fine) < 1e-2 + 1e-9

    def test_no_true_nulls_assumed_runs_to_limit(self):
        # with m0_assumed = 0 the constraint is vacuous (0 <= 0): the
        # largest admissible level is returned
        q_prime = calibrate_q(CopulaModel("clayton", 1.0), 5, 0, 0.1, 100, RngStream(2))
        assert q_prime > 0.99

    def test_validation(self):
        with pytest.raises(ValueError):
            calibrate_q(INDEP, 20, 21, 0.05, 10, RngStream(0))
        with pytest.raises(ValueError):
            calibrate_q(INDEP, 20, 16, 0.05, 10, RngStream(0), tol=0.0)
