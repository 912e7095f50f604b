"""Tests for the cohort-hashed bit-vector mechanism.

Covers the flip parameter, the nonnegative lasso solver, exact decoding on
clean reports, report privacy via an independent enumeration, the
singular-fit guard, and the regularized aggregate.
"""
import math
import warnings

import numpy as np
import pytest

import ldp_enum
from zoneldp.errors import ParamMismatch, SingularFitWarning
from zoneldp.oracles.rappor import (
    Rappor,
    RapporBatch,
    flip_parameter,
    nonneg_lasso,
    probabilities,
)


class TestFlipParameter:
    def test_frozen_value_at_eps_two(self):
        # hand-computed from the definition: f = 2/(e^{eps/2} + 1)
        assert flip_parameter(2.0) == pytest.approx(0.5378828427399902, rel=1e-15)

    def test_decreases_with_budget(self):
        grid = [0.25, 0.5, 1.0, 2.0, 4.0, 8.0]
        values = [flip_parameter(e) for e in grid]
        assert all(a > b for a, b in zip(values, values[1:]))
        assert all(0.0 < f < 1.0 for f in values)

    def test_per_bit_pair_derives_from_f(self):
        for epsilon in (0.5, 1.0, 2.0):
            f = flip_parameter(epsilon)
            probs = probabilities(epsilon)
            assert probs.p == pytest.approx(1.0 - f / 2.0, rel=1e-15)
            assert probs.q == pytest.approx(f / 2.0, rel=1e-15)

    def test_rejects_nonpositive_epsilon(self):
        with pytest.raises(ValueError):
            flip_parameter(0.0)


class TestNonnegLasso:
    def test_identity_gram_soft_thresholds(self):
        # separable problem: each coordinate is max(0, l_v - penalty)
        gram = np.eye(2)
        linear = np.array([3.0, -1.0])
        np.testing.assert_allclose(nonneg_lasso(gram, linear, 0.0), [3.0, 0.0])
        np.testing.assert_allclose(nonneg_lasso(gram, linear, 1.0), [2.0, 0.0])

    def test_penalty_at_max_zeroes_everything(self):
        beta = nonneg_lasso(np.eye(2), np.array([3.0, -1.0]), 3.0)
        np.testing.assert_allclose(beta, [0.0, 0.0])

    def test_collinear_design_resolved_by_cycle_order(self):
        # both coordinates explain the same signal; the first one visited
        # absorbs it and the second sees an exactly zero residual
        gram = np.array([[1.0, 1.0], [1.0, 1.0]])
        linear = np.array([2.0, 2.0])
        np.testing.assert_allclose(nonneg_lasso(gram, linear, 0.0), [2.0, 0.0])

    def test_zero_curvature_coordinate_stays_zero(self):
        gram = np.diag([1.0, 0.0])
        linear = np.array([1.0, 5.0])
        np.testing.assert_allclose(nonneg_lasso(gram, linear, 0.0), [1.0, 0.0])

    def test_matches_exact_solve_on_interior_problems(self):
        # when the unconstrained optimum is strictly positive the
        # constraint is slack and the solver must agree with a plain solve
        rng = np.random.default_rng(8)
        for _ in range(20):
            half = rng.normal(size=(6, 4))
            gram = half.T @ half + 0.5 * np.eye(4)
            target = rng.uniform(1.0, 3.0, size=4)
            linear = gram @ target
            np.testing.assert_allclose(
                nonneg_lasso(gram, linear, 0.0), target, atol=1e-8
            )


class TestConstruction:
    def test_rejects_bad_sizes_and_decoder(self):
        with pytest.raises(ValueError):
            Rappor(l_zones=4, epsilon=1.0, k=0)
        with pytest.raises(ValueError):
            Rappor(l_zones=4, epsilon=1.0, m=0)
        with pytest.raises(ValueError):
            Rappor(l_zones=4, epsilon=1.0, decoder="ridge")

    def test_target_table_shape_and_range(self):
        mech = Rappor(l_zones=6, epsilon=1.0, k=16, m=8)
        assert mech.targets.shape == (8, 6)
        assert mech.targets.min() >= 0
        assert mech.targets.max() < 16

    def test_family_seed_changes_the_table(self):
        a = Rappor(l_zones=8, epsilon=1.0, k=32, m=8, hash_seed=0)
        b = Rappor(l_zones=8, epsilon=1.0, k=32, m=8, hash_seed=1)
        assert not np.array_equal(a.targets, b.targets)


class TestPerturb:
    def test_report_shape(self):
        mech = Rappor(l_zones=4, epsilon=1.0, k=16, m=8)
        report = mech.perturb(2, np.random.default_rng(3))
        assert 0 <= report.cohort < 8
        assert len(report.bits) == 16
        assert set(report.bits) <= {0, 1}

    def test_rejects_zone_out_of_range(self):
        mech = Rappor(l_zones=4, epsilon=1.0, k=16, m=8)
        rng = np.random.default_rng(3)
        with pytest.raises(ValueError):
            mech.perturb(4, rng)
        with pytest.raises(ValueError):
            mech.perturb_batch([0, -1], rng)

    def test_deterministic_under_seeded_generator(self):
        mech = Rappor(l_zones=4, epsilon=1.0, k=16, m=8)
        assert mech.perturb(1, np.random.default_rng(9)) == mech.perturb(
            1, np.random.default_rng(9)
        )
        zones = np.tile(np.arange(4), 5)
        first = mech.perturb_batch(zones, np.random.default_rng(9))
        second = mech.perturb_batch(zones, np.random.default_rng(9))
        assert np.array_equal(first.cohorts, second.cohorts)
        assert np.array_equal(first.bits, second.bits)

    def test_batch_bit_rates_match_the_pair(self):
        # the bit the cohort hash points at stays set with probability p,
        # every other bit fires with probability q; 3 sigma bands
        mech = Rappor(l_zones=4, epsilon=2.0, k=16, m=4, hash_seed=1)
        n = 20_000
        batch = mech.perturb_batch(np.full(n, 1), np.random.default_rng(23))
        own = mech.targets[batch.cohorts, 1]
        target_hits = int(batch.bits[np.arange(n), own].sum())
        probs = mech.probabilities()
        sigma = math.sqrt(probs.p * (1 - probs.p) * n)
        assert abs(target_hits - probs.p * n) < 3 * sigma
        other_hits = int(batch.bits.sum()) - target_hits
        cells = n * (mech.k - 1)
        sigma = math.sqrt(probs.q * (1 - probs.q) * cells)
        assert abs(other_hits - probs.q * cells) < 3 * sigma

    def test_cohorts_roughly_uniform(self):
        mech = Rappor(l_zones=4, epsilon=1.0, k=16, m=8)
        n = 40_000
        batch = mech.perturb_batch(
            np.zeros(n, dtype=np.int64), np.random.default_rng(5)
        )
        counts = np.bincount(batch.cohorts, minlength=8)
        sigma = math.sqrt(n * (1 / 8) * (7 / 8))
        assert np.all(np.abs(counts - n / 8) < 5 * sigma)


class TestExactRecovery:
    """With a huge budget the bits are clean, and whenever the realized
    cohort mix is consistent with the fitted model the decoder must return
    the exact histogram, for both solver choices.

    A multi-zone population with randomly drawn cohorts is NOT exactly
    recoverable even with clean bits: the fit models each zone as splitting
    across cohorts proportionally to cohort size, and random assignment
    leaves a fluctuation around that. The two cases below are the ones
    where the system is exactly consistent.
    """

    @pytest.mark.parametrize("decoder", ["lasso", "lstsq"])
    def test_single_zone_population_end_to_end(self, decoder):
        mech = Rappor(l_zones=8, epsilon=50.0, k=64, m=4, hash_seed=0, decoder=decoder)
        est = mech.aggregate(
            mech.perturb_batch(np.full(200, 3), np.random.default_rng(7))
        )
        expected = np.zeros(8)
        expected[3] = 200.0
        np.testing.assert_allclose(est.raw, expected, atol=1e-6)
        assert est.rounded().tolist() == [0, 0, 0, 200, 0, 0, 0, 0]

    @pytest.mark.parametrize("decoder", ["lasso", "lstsq"])
    def test_balanced_cohorts_recover_mixed_population(self, decoder):
        # each zone's users are spread evenly over the cohorts, so the
        # clean-bit system is exactly consistent; two cohorts of this
        # family have colliding zone pairs, which the fit resolves through
        # the non-colliding cohorts
        truth = np.array([48, 12, 0, 40, 24, 24, 32, 20])
        mech = Rappor(l_zones=8, epsilon=50.0, k=64, m=4, hash_seed=0, decoder=decoder)
        cohorts, rows = [], []
        for zone, count in enumerate(truth):
            for cohort in range(mech.m):
                for _ in range(count // mech.m):
                    cohorts.append(cohort)
                    row = np.zeros(mech.k, dtype=np.uint8)
                    row[mech.targets[cohort, zone]] = 1
                    rows.append(row)
        batch = RapporBatch(
            cohorts=np.array(cohorts, dtype=np.int64),
            bits=np.array(rows, dtype=np.uint8),
        )
        est = mech.aggregate(batch)
        np.testing.assert_allclose(est.raw, truth, atol=1e-6)
        assert est.rounded().tolist() == truth.tolist()


class TestSingularFitGuard:
    """Zones with zero curvature in the normal equations cannot be
    estimated. The decoder pins them to zero and warns. This cannot arise
    through aggregate (every populated cohort gives every zone curvature),
    so the solver is exercised directly on a crafted system.
    """

    @pytest.mark.parametrize("decoder", ["lasso", "lstsq"])
    def test_dead_coordinate_warns_and_pins_to_zero(self, decoder):
        mech = Rappor(l_zones=4, epsilon=1.0, k=16, m=4, decoder=decoder)
        gram = np.diag([1.0, 2.0, 0.0, 4.0])
        linear = np.array([3.0, 2.0, 5.0, 2.0])
        with pytest.warns(SingularFitWarning, match="1 zone"):
            raw = mech._decode(gram, linear)
        np.testing.assert_allclose(raw, [3.0, 1.0, 0.0, 0.5])

    def test_clean_aggregate_does_not_warn(self):
        mech = Rappor(l_zones=4, epsilon=1.0, k=16, m=4)
        batch = mech.perturb_batch(
            np.tile(np.arange(4), 25), np.random.default_rng(3)
        )
        with warnings.catch_warnings():
            warnings.simplefilter("error", SingularFitWarning)
            mech.aggregate(batch)


class TestPrivacy:
    """The whole report (cohort plus all k bits) must satisfy the
    likelihood-ratio bound e^eps between any two zones.

    The report distribution is enumerated from the definition,
    independently of the implementation; only the public hash table is
    shared.
    """

    def test_ratio_bound_holds_and_is_sharp(self):
        mech = Rappor(l_zones=4, epsilon=1.0, k=4, m=2, hash_seed=3)
        targets = mech.targets.tolist()
        assert targets == [[3, 1, 2, 0], [2, 0, 1, 0]]
        for epsilon in (0.5, 1.0, 2.0):
            bound = math.exp(epsilon)
            dists = [
                ldp_enum.rappor_dist(zone, epsilon, targets, 4) for zone in range(4)
            ]
            for dist in dists:
                ldp_enum.check_total(dist)
            worst = 0.0
            for a in range(4):
                for b in range(4):
                    if a == b:
                        continue
                    ratio = ldp_enum.max_ratio(dists[a], dists[b])
                    assert ratio <= bound * (1 + 1e-9)
                    worst = max(worst, ratio)
            assert worst == pytest.approx(bound, rel=1e-9)

    def test_perturb_matches_enumerated_distribution(self):
        mech = Rappor(l_zones=4, epsilon=1.0, k=4, m=2, hash_seed=3)
        dist = ldp_enum.rappor_dist(0, 1.0, mech.targets.tolist(), 4)
        n = 200_000
        batch = mech.perturb_batch(
            np.zeros(n, dtype=np.int64), np.random.default_rng(29)
        )
        codes = batch.cohorts * 16 + batch.bits @ (1 << np.arange(4))
        observed = np.bincount(codes, minlength=32) / n
        for key, prob in dist.items():
            code = key[0] * 16 + sum(bit << i for i, bit in enumerate(key[1:]))
            sigma = math.sqrt(prob * (1 - prob) / n)
            assert abs(observed[code] - prob) < 4 * sigma + 1e-12


class TestAggregate:
    @pytest.mark.parametrize("decoder", ["lasso", "lstsq"])
    def test_unbiased_over_fresh_hash_families(self, decoder):
        # redraw the cohort hash family each trial; the trial mean must sit
        # within 3 standard errors of the truth in every zone
        truth = np.array([5000, 3000, 6000, 2000, 4000])
        zones = np.repeat(np.arange(5), truth)
        raws = []
        for trial in range(20):
            mech = Rappor(
                l_zones=5,
                epsilon=1.0,
                k=16,
                m=64,
                hash_seed=100 + trial,
                decoder=decoder,
            )
            rng = np.random.default_rng(10_100 + trial)
            raws.append(mech.aggregate(mech.perturb_batch(zones, rng)).raw)
        raws = np.array(raws)
        stderr = raws.std(axis=0, ddof=1) / math.sqrt(len(raws))
        assert np.all(stderr > 0)
        assert np.all(np.abs(raws.mean(axis=0) - truth) < 3 * stderr)

    def test_order_independent(self):
        mech = Rappor(l_zones=5, epsilon=1.0, k=16, m=8, hash_seed=2)
        rng = np.random.default_rng(31)
        batch = mech.perturb_batch(rng.integers(0, 5, size=500), rng)
        perm = rng.permutation(500)
        shuffled = RapporBatch(cohorts=batch.cohorts[perm], bits=batch.bits[perm])
        assert np.array_equal(mech.aggregate(batch).raw, mech.aggregate(shuffled).raw)

    def test_report_sequence_matches_batch(self):
        mech = Rappor(l_zones=4, epsilon=1.0, k=16, m=8, hash_seed=2)
        rng = np.random.default_rng(13)
        reports = [mech.perturb(int(zone), rng) for zone in rng.integers(0, 4, size=60)]
        batch = RapporBatch(
            cohorts=np.array([r.cohort for r in reports], dtype=np.int64),
            bits=np.array([r.bits for r in reports], dtype=np.uint8),
        )
        assert np.array_equal(mech.aggregate(reports).raw, mech.aggregate(batch).raw)

    def test_empty_reports_give_zero_estimate(self):
        mech = Rappor(l_zones=4, epsilon=1.0, k=16, m=8)
        est = mech.aggregate([])
        assert est.n_reports == 0
        assert np.array_equal(est.raw, np.zeros(4))

    def test_rejects_wrong_bit_width(self):
        mech = Rappor(l_zones=4, epsilon=1.0, k=16, m=8)
        bad = RapporBatch(
            cohorts=np.zeros(2, dtype=np.int64),
            bits=np.zeros((2, 17), dtype=np.uint8),
        )
        with pytest.raises(ParamMismatch):
            mech.aggregate(bad)

    def test_rejects_cohort_out_of_range(self):
        mech = Rappor(l_zones=4, epsilon=1.0, k=16, m=8)
        bad = RapporBatch(
            cohorts=np.array([0, 8], dtype=np.int64),
            bits=np.zeros((2, 16), dtype=np.uint8),
        )
        with pytest.raises(ParamMismatch):
            mech.aggregate(bad)
