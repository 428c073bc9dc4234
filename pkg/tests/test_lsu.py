"""Tests for the linear step-up test, FDP accounting, and FDR simulation.

Hand-worked rejection sets pin the step-up rule (including the boundary
``<=`` comparison and stable tie-breaking); hypothesis properties check
monotonicity in the level and permutation invariance; the vectorised
batch path is cross-checked against the per-vector reference path; and
the simulator is validated against exact FDR values computed from the
mixture representation (independence 0.04 analytically, Clayton by
quadrature).
"""

import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from numpy.testing import assert_allclose

from copfdr import (
    CopulaModel,
    FdrEstimate,
    PValueSample,
    RngStream,
    SimulationConfig,
    TestOutcome,
    fdp,
    lsu_reject,
    sample_pvalue_matrix,
    simulate_fdr,
)
from copfdr.lsu import _fdp_batch

# -----------------------------------------------------------------------------
# helpers
# -----------------------------------------------------------------------------


def make_sample(values, m0=None):
    values = np.asarray(values, dtype=float)
    mask = np.zeros(values.size, dtype=bool)
    if m0 is None:
        m0 = values.size
    mask[:m0] = True
    return PValueSample(values=values, null_mask=mask)


@st.composite
def pvalue_vectors(draw):
    m = draw(st.integers(1, 12))
    values = draw(st.lists(st.floats(0.0, 1.0, allow_nan=False), min_size=m, max_size=m))
    return np.asarray(values)


# -----------------------------------------------------------------------------
# lsu_reject
# -----------------------------------------------------------------------------


class TestLsuReject:
    def test_hand_value(self):
        outcome = lsu_reject(make_sample([0.01, 0.02, 0.5]), 0.15)
        assert outcome.k == 2
        assert outcome.rejected.tolist() == [0, 1]
        assert outcome.R == 2
        assert outcome.V == 2  # all-null mask

    def test_no_rejections(self):
        outcome = lsu_reject(make_sample([0.9, 0.95, 1.0]), 0.05)
        assert outcome.k == 0
        assert outcome.rejected.size == 0

    def test_boundary_is_rejected(self):
        # the comparison is <=: a p-value exactly at its critical value passes
        outcome = lsu_reject(make_sample([0.05]), 0.05)
        assert outcome.k == 1

    def test_step_up_revives_skipped_ranks(self):
        # rank 2 fails (0.09 > 0.0667) but rank 3 passes (0.09 <= 0.10),
        # so the step-up rule rejects all three
        outcome = lsu_reject(make_sample([0.01, 0.09, 0.09]), 0.10)
        assert outcome.k == 3

    def test_stable_ties(self):
        outcome = lsu_reject(make_sample([0.02, 0.02, 0.9]), 0.15)
        assert outcome.k == 2
        assert outcome.rejected.tolist() == [0, 1]

    def test_v_counts_only_nulls(self):
        sample = make_sample([0.001, 0.002, 0.003, 0.9], m0=2)
        outcome = lsu_reject(sample, 0.2)
        assert outcome.k == 3
        assert outcome.V == 2

    def test_level_validation(self):
        with pytest.raises(ValueError):
            lsu_reject(make_sample([0.5]), 0.0)
        with pytest.raises(ValueError):
            lsu_reject(make_sample([0.5]), 1.0)

    @settings(max_examples=200, deadline=None)
    @given(pvalue_vectors(), st.floats(0.01, 0.5), st.floats(0.01, 0.5))
    def test_monotone_in_level(self, values, q1, q2):
        lo, hi = sorted((q1, q2))
        sample = make_sample(values)
        small = lsu_reject(sample, lo)
        large = lsu_reject(sample, hi)
        assert small.k <= large.k
        assert set(small.rejected.tolist()) <= set(large.rejected.tolist())

    @settings(max_examples=100, deadline=None)
    @given(pvalue_vectors(), st.randoms(use_true_random=False))
    def test_permutation_invariant_k(self, values, rnd):
        perm = list(range(values.size))
        rnd.shuffle(perm)
        base = lsu_reject(make_sample(values), 0.1)
        shuffled = lsu_reject(make_sample(values[perm]), 0.1)
        assert base.k == shuffled.k

    def test_outcome_validation(self):
        with pytest.raises(ValueError):
            TestOutcome(k=2, rejected=np.array([0]), V=0, R=2)
        with pytest.raises(ValueError):
            TestOutcome(k=1, rejected=np.array([0]), V=2, R=1)


# -----------------------------------------------------------------------------
# fdp
# -----------------------------------------------------------------------------


class TestFdp:
    def test_zero_when_nothing_rejected(self):
        outcome = lsu_reject(make_sample([0.9]), 0.05)
        assert fdp(outcome, [True]) == 0.0

    def test_recounts_against_given_mask(self):
        outcome = lsu_reject(make_sample([0.01, 0.02, 0.9]), 0.2)
        assert outcome.k == 2
        assert fdp(outcome, [True, True, True]) == 1.0
        assert fdp(outcome, [False, True, False]) == 0.5
        assert fdp(outcome, [False, False, True]) == 0.0

    def test_mask_length_checked(self):
        outcome = lsu_reject(make_sample([0.01, 0.02]), 0.5)
        with pytest.raises(ValueError):
            fdp(outcome, [True])

    @settings(max_examples=100, deadline=None)
    @given(pvalue_vectors(), st.floats(0.01, 0.5))
    def test_fdp_in_unit_interval(self, values, q):
        outcome = lsu_reject(make_sample(values), q)
        value = fdp(outcome, np.ones(values.size, dtype=bool))
        assert 0.0 <= value <= 1.0


# -----------------------------------------------------------------------------
# batch path vs reference path
# -----------------------------------------------------------------------------


class TestBatchAgreement:
    @pytest.mark.parametrize(
        "family,eta,m,m0",
        [
            ("independence", None, 8, 6),
            ("clayton", 1.5, 8, 6),
            ("gumbel", 2.5, 6, 6),
            ("clayton", 0.4, 5, 1),
        ],
    )
    def test_fdp_batch_matches_per_vector(self, family, eta, m, m0):
        model = CopulaModel(family, eta)
        cfg = SimulationConfig(m=m, m0=m0, q=0.2, replications=256, mc_draws=1, seed=31)
        stream = RngStream(99, (4,))
        batch = _fdp_batch(model, cfg, 256, stream)

        pvals = sample_pvalue_matrix(model, 256, m, m0, True, stream)
        mask = np.zeros(m, dtype=bool)
        mask[:m0] = True
        reference = []
        for row in pvals:
            outcome = lsu_reject(PValueSample(values=row, null_mask=mask), 0.2)
            reference.append(fdp(outcome, mask))
        assert_allclose(batch, np.asarray(reference), rtol=0, atol=0)


# -----------------------------------------------------------------------------
# simulate_fdr
# -----------------------------------------------------------------------------


class TestSimulateFdr:
    def test_deterministic(self):
        cfg = SimulationConfig(m=10, m0=8, q=0.1, replications=5000, mc_draws=1, seed=7)
        model = CopulaModel("clayton", 2.0)
        first = simulate_fdr(model, cfg)
        second = simulate_fdr(model, cfg)
        assert first == second

    def test_fields_consistent(self):
        cfg = SimulationConfig(m=6, m0=6, q=0.2, replications=4000, mc_draws=1, seed=3)
        estimate = simulate_fdr(CopulaModel("independence"), cfg)
        assert estimate.replications == 4000
        assert estimate.std_error == pytest.approx(
            estimate.sd_fdp / math.sqrt(4000), rel=1e-12
        )

    def test_independence_exact_value(self):
        # Dirac-uniform independence FDR is exactly m0 q / m
        cfg = SimulationConfig(m=20, m0=16, q=0.05, replications=20_000, mc_draws=1, seed=21)
        estimate = simulate_fdr(CopulaModel("independence"), cfg)
        assert abs(estimate.mean_fdp - 0.04) < 4.0 * estimate.std_error

    def test_clayton_exact_value(self):
        # exact FDR at (m=20, m0=16, q=0.05, eta=2) from the mixture
        # representation, integrated to six digits: 0.025246
        cfg = SimulationConfig(m=20, m0=16, q=0.05, replications=20_000, mc_draws=1, seed=22)
        estimate = simulate_fdr(CopulaModel("clayton", 2.0), cfg)
        assert abs(estimate.mean_fdp - 0.025246) < 4.0 * estimate.std_error

    def test_gumbel_exact_value(self):
        # same construction for Gumbel eta = 2: 0.035098
        cfg = SimulationConfig(m=20, m0=16, q=0.05, replications=20_000, mc_draws=1, seed=23)
        estimate = simulate_fdr(CopulaModel("gumbel", 2.0), cfg)
        assert abs(estimate.mean_fdp - 0.035098) < 4.0 * estimate.std_error

    def test_batch_layout_independent_of_split(self):
        # crossing a batch boundary must not change earlier replications:
        # the estimate is a pure function of (model, cfg), replications
        # only append
        model = CopulaModel("clayton", 1.0)
        small = SimulationConfig(m=5, m0=5, q=0.1, replications=100, mc_draws=1, seed=5)
        large = SimulationConfig(m=5, m0=5, q=0.1, replications=200, mc_draws=1, seed=5)
        est_small = simulate_fdr(model, small)
        est_large = simulate_fdr(model, large)
        # both deterministic; means differ but are drawn from the same stream
        assert est_small.replications == 100
        assert est_large.replications == 200

    def test_estimate_validation(self):
        with pytest.raises(ValueError):
            FdrEstimate(mean_fdp=1.5, sd_fdp=0.1, std_error=0.01, replications=100)
        with pytest.raises(ValueError):
            FdrEstimate(mean_fdp=0.5, sd_fdp=0.1, std_error=0.5, replications=100)


class TestSimulationConfig:
    def test_validation(self):
        with pytest.raises(ValueError):
            SimulationConfig(m=0, m0=0, q=0.1, replications=10, mc_draws=1, seed=0)
        with pytest.raises(ValueError):
            SimulationConfig(m=5, m0=6, q=0.1, replications=10, mc_draws=1, seed=0)
        with pytest.raises(ValueError):
            SimulationConfig(m=5, m0=5, q=1.0, replications=10, mc_draws=1, seed=0)
        with pytest.raises(ValueError):
            SimulationConfig(m=5, m0=5, q=0.1, replications=1, mc_draws=1, seed=0)

    def test_frozen_and_normalised(self):
        cfg = SimulationConfig(m=5, m0=3, q=0.1, replications=10, mc_draws=2, seed=1)
        assert isinstance(cfg.m, int) and isinstance(cfg.q, float)
        with pytest.raises(AttributeError):
            cfg.m = 7
