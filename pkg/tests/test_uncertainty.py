"""Subjective-logic quantities and the evaluation metrics."""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from evcore.errors import DomainError
from evcore.head import dirichlet_params
from evcore.rng import SplitMix64
from evcore.uncertainty import (
    PredictionRecord,
    accuracy_vacuity_curve,
    auroc,
    beliefs,
    dissonance,
    ece,
    expected_probs,
    report,
    topk_confident_accuracy,
    vacuity,
)


def rec(confidence=0.5, correct=True, vac=0.5, score=0.5):
    return PredictionRecord(confidence=confidence, correct=correct,
                            vacuity=vac, uncertainty_score=score)


class TestVacuity:
    def test_zero_evidence_is_one(self):
        for k in (2, 5, 10):
            assert vacuity(dirichlet_params(np.zeros(k))) == 1.0

    def test_half(self):
        e = np.ones(10)  # total evidence 10, S = 20
        assert vacuity(dirichlet_params(e)) == 0.5

    def test_large_evidence(self):
        p = dirichlet_params(np.array([1e6, 0.0]))
        assert vacuity(p) == pytest.approx(2e-6, rel=1e-3)


class TestBeliefs:
    def test_zero_evidence(self):
        e = np.zeros(4)
        np.testing.assert_array_equal(beliefs(e, dirichlet_params(e)), np.zeros(4))

    def test_direct(self):
        e = np.array([2.0, 0.0])
        np.testing.assert_allclose(beliefs(e, dirichlet_params(e)), [0.5, 0.0])

    def test_belief_vacuity_partition(self):
        e = np.array([3.0, 1.0, 0.0])
        p = dirichlet_params(e)
        b = beliefs(e, p)
        np.testing.assert_allclose(b, [3 / 7, 1 / 7, 0.0])
        assert b.sum() + vacuity(p) == pytest.approx(1.0, abs=1e-12)

    @given(st.lists(st.floats(0.0, 1e6), min_size=2, max_size=12))
    @settings(max_examples=300, deadline=None)
    def test_partition_property(self, values):
        e = np.array(values)
        p = dirichlet_params(e)
        assert beliefs(e, p).sum() + vacuity(p) == pytest.approx(1.0, abs=1e-9)


class TestExpectedProbs:
    def test_uniform(self):
        np.testing.assert_allclose(
            expected_probs(dirichlet_params(np.zeros(4))), np.full(4, 0.25)
        )

    def test_direct(self):
        p = dirichlet_params(np.array([4.0, 1.0, 0.0]))
        np.testing.assert_allclose(expected_probs(p), [0.625, 0.25, 0.125])

    def test_one_hot_limit(self):
        p = dirichlet_params(np.array([1e6 - 1.0, 0.0]))
        probs = expected_probs(p)
        assert probs[0] == pytest.approx(1.0, abs=1e-5)
        assert probs[1] == pytest.approx(0.0, abs=1e-5)

    @given(st.lists(st.floats(0.0, 1e6), min_size=2, max_size=12))
    @settings(max_examples=300, deadline=None)
    def test_simplex_property(self, values):
        probs = expected_probs(dirichlet_params(np.array(values)))
        assert probs.sum() == pytest.approx(1.0, abs=1e-9)
        assert np.all(probs >= 0)


class TestDissonance:
    def test_one_hot_and_vacuous(self):
        assert dissonance(np.array([1.0, 0.0, 0.0])) == 0.0
        assert dissonance(np.zeros(3)) == 0.0

    def test_balanced_conflict(self):
        assert dissonance(np.array([0.5, 0.5])) == pytest.approx(1.0, abs=1e-12)

    def test_single_nonzero_always_zero(self):
        rng = SplitMix64(3)
        for _ in range(200):
            k = 2 + rng.integer(6)
            b = np.zeros(k)
            b[rng.integer(k)] = rng.uniform_in(0.0, 1.0)
            assert dissonance(b) == 0.0

    def test_in_unit_interval(self):
        rng = SplitMix64(9)
        for _ in range(1000):
            k = 2 + rng.integer(6)
            raw = np.array([rng.uniform_in(0.0, 1.0) for _ in range(k)])
            b = raw / raw.sum() * rng.uniform_in(0.0, 1.0)
            assert 0.0 <= dissonance(b) <= 1.0 + 1e-12


class TestReport:
    def test_fields_cohere(self):
        r = report(np.array([4.0, 1.0, 0.0]))
        assert r.predicted_class == 0
        assert r.beliefs.sum() + r.vacuity == pytest.approx(1.0, abs=1e-12)
        assert r.expected_probs.sum() == pytest.approx(1.0, abs=1e-12)

    def test_tie_breaks_to_lowest_index(self):
        r = report(np.array([2.0, 2.0, 1.0]))
        assert r.predicted_class == 0


class TestEce:
    def test_perfectly_calibrated(self):
        records = [rec(confidence=1.0, correct=True)] * 5
        assert ece(records, 10) == 0.0

    def test_single_bin_hand_case(self):
        records = [rec(confidence=0.9, correct=True), rec(confidence=0.9, correct=False)]
        assert ece(records, 10) == pytest.approx(0.4, abs=1e-12)

    def test_two_bin_weighted_sum(self):
        records = [
            rec(confidence=0.6, correct=True),
            rec(confidence=0.6, correct=False),   # bin gap 0.1
            rec(confidence=0.8, correct=True),
            rec(confidence=0.8, correct=False),   # bin gap 0.3
        ]
        assert ece(records, 10) == pytest.approx(0.2, abs=1e-12)

    def test_last_bin_closed(self):
        # confidence 1.0 falls in the final bin, not out of range
        records = [rec(confidence=1.0, correct=False)]
        assert ece(records, 4) == pytest.approx(1.0, abs=1e-12)

    def test_order_invariance(self):
        rng = SplitMix64(15)
        records = [
            rec(confidence=rng.uniform_in(0, 1), correct=rng.integer(2) == 1)
            for _ in range(50)
        ]
        forward = ece(records, 7)
        assert ece(list(reversed(records)), 7) == pytest.approx(forward, abs=1e-12)

    def test_one_bin_equals_global_gap(self):
        rng = SplitMix64(21)
        records = [
            rec(confidence=rng.uniform_in(0, 1), correct=rng.integer(2) == 1)
            for _ in range(40)
        ]
        conf = np.mean([r.confidence for r in records])
        acc = np.mean([float(r.correct) for r in records])
        assert ece(records, 1) == pytest.approx(abs(acc - conf), abs=1e-12)

    def test_empty_records(self):
        with pytest.raises(DomainError):
            ece([], 10)


def brute_force_auroc(id_scores, ood_scores):
    wins = 0.0
    for b in ood_scores:
        for a in id_scores:
            if b > a:
                wins += 1.0
            elif b == a:
                wins += 0.5
    return wins / (len(id_scores) * len(ood_scores))


class TestAuroc:
    def test_perfect_separation(self):
        assert auroc([0.1, 0.2], [0.8, 0.9]) == 1.0

    def test_all_ties(self):
        assert auroc([0.5, 0.5, 0.5], [0.5, 0.5]) == 0.5

    def test_hand_case(self):
        assert auroc([0.1, 0.5], [0.4, 0.9]) == 0.75

    def test_empty_raises(self):
        with pytest.raises(DomainError):
            auroc([], [0.1])
        with pytest.raises(DomainError):
            auroc([0.1], [])

    @given(
        st.lists(st.integers(0, 9), min_size=1, max_size=50),
        st.lists(st.integers(0, 9), min_size=1, max_size=50),
    )
    @settings(max_examples=300, deadline=None)
    def test_matches_exhaustive_oracle(self, id_raw, ood_raw):
        # coarse integer scores force plenty of ties
        id_scores = [v / 10.0 for v in id_raw]
        ood_scores = [v / 10.0 for v in ood_raw]
        assert auroc(id_scores, ood_scores) == pytest.approx(
            brute_force_auroc(id_scores, ood_scores), abs=1e-12
        )


class TestAccuracyVacuityCurve:
    def test_full_threshold_is_overall(self):
        records = [rec(vac=0.2, correct=True), rec(vac=0.7, correct=False)]
        rows = accuracy_vacuity_curve(records, [1.0])
        assert rows[0][1] == 0.5 and rows[0][2] == 1.0

    def test_empty_retention_is_nan(self):
        records = [rec(vac=0.5)] * 3
        rows = accuracy_vacuity_curve(records, [0.4])
        assert np.isnan(rows[0][1]) and rows[0][2] == 0.0

    def test_hand_enumeration(self):
        records = [
            rec(vac=0.1, correct=True),
            rec(vac=0.2, correct=True),
            rec(vac=0.9, correct=False),
        ]
        rows = accuracy_vacuity_curve(records, [0.5])
        assert rows[0][1] == 1.0
        assert rows[0][2] == pytest.approx(2 / 3)

    def test_coverage_nondecreasing(self):
        rng = SplitMix64(33)
        records = [
            rec(vac=rng.uniform_in(0, 1), correct=rng.integer(2) == 1) for _ in range(100)
        ]
        rows = accuracy_vacuity_curve(records, [i / 20 for i in range(21)])
        coverages = [r[2] for r in rows]
        assert all(c2 >= c1 for c1, c2 in zip(coverages, coverages[1:]))

    def test_unsorted_thresholds_rejected(self):
        with pytest.raises(DomainError):
            accuracy_vacuity_curve([rec()], [0.5, 0.2])


class TestTopkConfidentAccuracy:
    def test_full_fraction_is_overall(self):
        records = [rec(vac=0.1, correct=True), rec(vac=0.9, correct=False)]
        assert topk_confident_accuracy(records, [1.0])[0][1] == 0.5

    def test_half_fraction(self):
        records = [rec(vac=0.1, correct=True), rec(vac=0.9, correct=False)]
        assert topk_confident_accuracy(records, [0.5])[0][1] == 1.0

    def test_stable_tie_order(self):
        records = [rec(vac=0.5, correct=True), rec(vac=0.5, correct=False)]
        assert topk_confident_accuracy(records, [0.5])[0][1] == 1.0

    def test_fraction_domain(self):
        with pytest.raises(DomainError):
            topk_confident_accuracy([rec()], [0.0])
        with pytest.raises(DomainError):
            topk_confident_accuracy([], [0.5])
