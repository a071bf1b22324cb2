import math

import numpy as np
import pytest

from melstill.errors import DegenerateInputError, InvalidInputError
from melstill.metrics import (
    ScoredExamples,
    StatTestResult,
    accuracy,
    average_d_prime,
    d_prime,
    equal_error_rate,
    kendall_tau,
    macro_ovr_auc,
    normal_cdf,
    normal_quantile,
    paired_t_test,
    roc_auc,
)

from oracles import auc_pairs, eer_threshold_sweep, kendall_tau_b_pairs, normal_quantile_bisect


def random_binary_instance(rng, n_max=200):
    n = int(rng.integers(4, n_max + 1))
    # quantized scores so ties actually occur
    scores = np.round(rng.standard_normal(n) * 2, 1)
    labels = np.zeros(n, dtype=int)
    labels[rng.permutation(n)[: int(rng.integers(1, n))] ] = 1
    if labels.all() or not labels.any():
        labels[0] = 1 - labels[0]
    return scores, labels


class TestRocAuc:
    def test_perfect_separation(self):
        assert roc_auc([1, 2, 3, 4], [0, 0, 1, 1]) == 1.0

    def test_worked_example(self):
        # 3 of 4 (pos, neg) pairs correctly ordered
        assert roc_auc([0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]) == 0.75

    def test_all_ties(self):
        assert roc_auc([1.0, 1.0, 1.0, 1.0], [0, 1, 0, 1]) == 0.5

    def test_single_class_rejected(self):
        with pytest.raises(DegenerateInputError):
            roc_auc([1.0, 2.0], [1, 1])

    def test_matches_pair_oracle_exactly(self):
        rng = np.random.default_rng(7)
        for _ in range(300):
            scores, labels = random_binary_instance(rng)
            assert roc_auc(scores, labels) == auc_pairs(list(scores), list(labels))


class TestDPrime:
    def test_half_is_zero(self):
        assert d_prime(0.5) == 0.0

    def test_known_point(self):
        # Phi(1/sqrt(2)) = 0.7602499...; d_prime there is exactly 1
        assert d_prime(0.7602499) == pytest.approx(1.0, abs=1e-5)

    def test_antisymmetry(self):
        rng = np.random.default_rng(0)
        for a in rng.uniform(0.01, 0.99, 200):
            assert d_prime(a) == pytest.approx(-d_prime(1.0 - a), abs=1e-9)

    def test_monotone(self):
        grid = np.linspace(0.001, 0.999, 500)
        vals = [d_prime(a) for a in grid]
        assert all(x < y for x, y in zip(vals, vals[1:]))

    def test_degenerate_sentinels(self):
        assert d_prime(1.0) == math.inf
        assert d_prime(0.0) == -math.inf
        with pytest.raises(InvalidInputError):
            d_prime(1.5)

    def test_quantile_accuracy_against_bisection(self):
        # range where float64 can pin the root of the erf CDF to below 1e-9
        rng = np.random.default_rng(3)
        ps = np.concatenate([rng.uniform(1e-6, 1 - 1e-6, 400), [1e-6, 0.5, 1 - 1e-6]])
        for p in ps:
            assert abs(normal_quantile(p) - normal_quantile_bisect(p)) <= 1e-9

    def test_quantile_roundtrip(self):
        for p in (1e-8, 0.01, 0.3, 0.5, 0.9, 1 - 1e-8):
            assert normal_cdf(normal_quantile(p)) == pytest.approx(p, abs=1e-12)


class TestEqualErrorRate:
    def test_perfectly_separated(self):
        assert equal_error_rate([1, 2, 3, 4], [0, 0, 1, 1]) == 0.0

    def test_total_inversion(self):
        assert equal_error_rate([4, 3, 2, 1], [0, 0, 1, 1]) == 1.0

    def test_worked_example_matches_threshold_sweep(self):
        # the brute-force sweep puts the FPR/FNR crossing at 0.5 here
        scores, labels = [0.1, 0.4, 0.35, 0.8], [0, 0, 1, 1]
        expected = eer_threshold_sweep(scores, labels)
        assert expected == 0.5
        assert equal_error_rate(scores, labels) == expected

    def test_matches_sweep_oracle_exactly(self):
        rng = np.random.default_rng(11)
        for _ in range(300):
            scores, labels = random_binary_instance(rng)
            assert equal_error_rate(scores, labels) == eer_threshold_sweep(
                list(scores), list(labels)
            )

    def test_invariant_under_monotone_transform(self):
        rng = np.random.default_rng(5)
        for _ in range(50):
            scores, labels = random_binary_instance(rng)
            base = equal_error_rate(scores, labels)
            assert equal_error_rate(np.exp(scores), labels) == pytest.approx(base, abs=1e-12)
            assert equal_error_rate(3 * scores + 7, labels) == pytest.approx(base, abs=1e-12)


class TestKendallTau:
    def test_identical_orderings(self):
        assert kendall_tau([1, 2, 3, 4], [10, 20, 30, 40]) == 1.0

    def test_reversed_orderings(self):
        assert kendall_tau([1, 2, 3, 4], [4, 3, 2, 1]) == -1.0

    def test_worked_example(self):
        assert kendall_tau([1, 2, 3, 4], [1, 3, 2, 4]) == pytest.approx(2 / 3, abs=1e-12)

    def test_all_tied_rejected(self):
        with pytest.raises(DegenerateInputError):
            kendall_tau([1.0, 1.0, 1.0], [1, 2, 3])

    def test_matches_pair_oracle_exactly(self):
        rng = np.random.default_rng(13)
        for _ in range(300):
            n = int(rng.integers(2, 40))
            a = np.round(rng.standard_normal(n), 1)
            b = np.round(rng.standard_normal(n), 1)
            if np.all(a == a[0]) or np.all(b == b[0]):
                continue
            assert kendall_tau(a, b) == kendall_tau_b_pairs(list(a), list(b))


class TestPairedTTest:
    def test_identical_samples(self):
        res = paired_t_test([1.0, 2.0, 3.0], [1.0, 2.0, 3.0])
        assert res == StatTestResult(0.0, 1.0, 3, note="no-effect: all differences zero")

    def test_worked_example(self):
        a = np.array([1.0, -1.0, 2.0, 0.0])
        res = paired_t_test(a, np.zeros(4))
        assert res.t_statistic == pytest.approx(0.7745966692, abs=1e-6)
        assert res.p_value == pytest.approx(0.4950253460, abs=1e-6)
        assert res.n == 4

    def test_p_against_quadrature_oracle(self):
        from oracles import t_sf_quadrature

        res = paired_t_test([1.0, -1.0, 2.0, 0.0], [0.0, 0.0, 0.0, 0.0])
        p_oracle = 2 * t_sf_quadrature(abs(res.t_statistic), 3)
        assert res.p_value == pytest.approx(p_oracle, abs=1e-6)

    def test_scale_invariance(self):
        rng = np.random.default_rng(2)
        a = rng.standard_normal(12)
        b = rng.standard_normal(12)
        r1 = paired_t_test(a, b)
        r2 = paired_t_test(2 * a, 2 * b)  # doubles every difference
        assert r2.t_statistic == pytest.approx(r1.t_statistic, rel=1e-12)
        assert r2.p_value == pytest.approx(r1.p_value, rel=1e-12)

    def test_swap_antisymmetry(self):
        rng = np.random.default_rng(4)
        a = rng.standard_normal(9)
        b = rng.standard_normal(9)
        r_ab = paired_t_test(a, b)
        r_ba = paired_t_test(b, a)
        assert r_ba.t_statistic == pytest.approx(-r_ab.t_statistic, rel=1e-12)
        assert r_ba.p_value == pytest.approx(r_ab.p_value, rel=1e-12)

    def test_zero_variance_nonzero_mean(self):
        res = paired_t_test([2.0, 2.0, 2.0], [1.0, 1.0, 1.0])
        assert res.t_statistic == math.inf
        assert res.p_value == 0.0
        assert "zero-variance" in res.note

    def test_too_short(self):
        with pytest.raises(InvalidInputError):
            paired_t_test([1.0], [2.0])


class TestAverageDPrime:
    def test_chance_tasks(self):
        assert average_d_prime([0.5, 0.5, 0.5]) == 0.0

    def test_two_task_composition(self):
        expected = (d_prime(0.75) + d_prime(0.7602499)) / 2
        assert average_d_prime([0.75, 0.7602499]) == pytest.approx(expected, abs=1e-12)
        assert expected == pytest.approx(0.9770, abs=1e-3)

    def test_single_task(self):
        assert average_d_prime([0.83]) == d_prime(0.83)

    def test_sentinel_propagates(self):
        assert average_d_prime([0.9, 1.0]) == math.inf

    def test_ordering_invariant_under_shared_task(self):
        # appending a task where every model has the same AUC adds a constant
        model_aucs = {"a": [0.9, 0.7], "b": [0.8, 0.65]}
        before = {m: average_d_prime(v) for m, v in model_aucs.items()}
        after = {m: average_d_prime(v + [0.77]) for m, v in model_aucs.items()}
        assert (before["a"] > before["b"]) == (after["a"] > after["b"])
        shift_a = after["a"] - 2 / 3 * before["a"]
        shift_b = after["b"] - 2 / 3 * before["b"]
        assert shift_a == pytest.approx(shift_b, abs=1e-12)


class TestMacroAuc:
    def test_binary_vector_passthrough(self):
        s = [0.1, 0.4, 0.35, 0.8]
        y = [0, 0, 1, 1]
        assert macro_ovr_auc(s, y) == roc_auc(s, y)

    def test_macro_average_over_classes(self):
        rng = np.random.default_rng(9)
        scores = rng.random((30, 3))
        labels = rng.integers(0, 3, 30)
        expected = np.mean([
            roc_auc(scores[:, k], (labels == k).astype(int)) for k in range(3)
        ])
        assert macro_ovr_auc(scores, labels) == pytest.approx(expected, rel=1e-12)


def test_accuracy():
    assert accuracy([1, 0, 1], [1, 1, 1]) == pytest.approx(2 / 3)


def test_scored_examples_validation():
    with pytest.raises(InvalidInputError):
        ScoredExamples(np.array([1.0]), np.array([0, 1]))
