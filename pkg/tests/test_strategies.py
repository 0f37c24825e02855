import math

import numpy as np
import pytest

from adversarial_ht.core import EmpiricalType, h_statistic, kl_rows, h_rows, type_count_matrix
from adversarial_ht.strategies import (
    ACCEPT,
    REJECT,
    GameConfig,
    attack_version_a,
    brute_force_attack,
    defender_decide_ks,
    defender_decide_tr,
    optimal_attack_tr,
    quantize_training_estimate,
    threshold,
)
from adversarial_ht.transport import DistortionSpec


def cfg(n=8, c=1.0, lam=0.1, D=0.0, k=2, mode="finite_n", d_ratio=None, cost=None):
    dist = DistortionSpec(cost, D) if cost is not None else DistortionSpec.hamming(k, D)
    return GameConfig(k, n, lam, dist, c=c, d_ratio=d_ratio, threshold_mode=mode)


def seq_of(counts):
    return np.repeat(np.arange(len(counts)), counts)


class TestGameConfig:
    def test_lengths(self):
        g = cfg(n=10, c=2.5, d_ratio=0.5)
        assert (g.N, g.K) == (25, 5)

    def test_non_integer_lengths_rejected(self):
        with pytest.raises(ValueError):
            cfg(n=10, c=0.25)

    def test_positive_lambda(self):
        with pytest.raises(ValueError):
            cfg(lam=0.0)


class TestThreshold:
    def test_training_game(self):
        # 0.1 - 2 log2(1001^2)/1000, evaluated at 40 digits
        assert threshold(cfg(n=1000, lam=0.1), "tr") == pytest.approx(0.060131094964656, abs=1e-12)

    def test_asymptotic(self):
        assert threshold(cfg(n=1000, lam=0.1, mode="asymptotic"), "tr") == 0.1
        assert threshold(cfg(n=1000, lam=0.1, mode="asymptotic"), "ks") == 0.1

    def test_negative_at_small_n(self):
        assert threshold(cfg(n=100, lam=0.1), "tr") == pytest.approx(-0.166328459310072, abs=1e-12)

    def test_known_source(self):
        assert threshold(cfg(n=100, lam=0.1), "ks") == pytest.approx(0.1 - 2 * math.log2(101) / 100)


class TestDefender:
    def test_identical_types_accept(self):
        x = EmpiricalType((500, 500), 1000)
        assert defender_decide_tr(x, x, cfg(n=1000, lam=0.1, mode="asymptotic")).decision == ACCEPT

    def test_reference_pair(self):
        x, t = EmpiricalType((500, 500), 1000), EmpiricalType((250, 750), 1000)
        v = defender_decide_tr(x, t, cfg(n=1000, lam=0.1))
        assert v.decision == REJECT
        assert v.statistic == pytest.approx(0.097590, abs=1e-6)
        assert v.threshold == pytest.approx(0.060131, abs=1e-6)
        v = defender_decide_tr(x, t, cfg(n=1000, lam=0.1, mode="asymptotic"))
        assert v.decision == ACCEPT

    def test_strict_inequality(self):
        x, t = EmpiricalType((3, 1), 4), EmpiricalType((1, 3), 4)
        stat = h_statistic(x, t, 1.0).value
        assert defender_decide_tr(x, t, cfg(n=4, lam=stat, mode="asymptotic")).decision == REJECT

    def test_length_checks(self):
        with pytest.raises(ValueError):
            defender_decide_tr(EmpiricalType((1, 1), 2), EmpiricalType((1, 1), 2), cfg(n=4))

    def test_known_source(self):
        x = EmpiricalType((500, 500), 1000)
        g = cfg(n=1000, lam=0.1, mode="asymptotic")
        assert defender_decide_ks(x, [0.5, 0.5], g).decision == ACCEPT
        v = defender_decide_ks(x, [0.25, 0.75], g)
        assert v.decision == REJECT and v.statistic == pytest.approx(0.207519, abs=1e-6)
        assert defender_decide_ks(x, [0.25, 0.75], cfg(n=1000, lam=1e6)).decision == ACCEPT


class TestOptimalAttack:
    def test_reference_instance(self):
        g = cfg(n=8, D=0.125)
        y, t = EmpiricalType((2, 6), 8), EmpiricalType((5, 3), 8)
        res = optimal_attack_tr(y, t, g)
        assert res.z_type.counts == (3, 5)
        assert res.plan.total_cost == 1.0
        assert res.plan.source_counts == (2, 6) and res.plan.destination_counts == (3, 5)
        brute = brute_force_attack(seq_of((2, 6)), t, g)
        assert brute.h_value == res.h_value and brute.z_type == res.z_type

    def test_large_budget_lands_on_training_type(self):
        res = optimal_attack_tr(EmpiricalType((0, 8), 8), EmpiricalType((5, 3), 8), cfg(D=1.0))
        assert res.h_value == 0.0 and res.z_type.counts == (5, 3)

    def test_zero_budget(self):
        y, t = EmpiricalType((2, 6), 8), EmpiricalType((5, 3), 8)
        res = optimal_attack_tr(y, t, cfg(D=0.0))
        assert res.z_type == y
        assert res.h_value == h_statistic(y, t, 1.0).value

    def test_monotone_in_budget(self):
        rng = np.random.default_rng(0)
        for _ in range(20):
            y = EmpiricalType.from_counts(rng.multinomial(20, [0.3, 0.3, 0.4]))
            t = EmpiricalType.from_counts(rng.multinomial(40, [0.5, 0.2, 0.3]))
            values = [
                optimal_attack_tr(y, t, cfg(n=20, c=2.0, k=3, D=D)).h_value
                for D in (0.0, 0.05, 0.1, 0.2, 0.4)
            ]
            assert all(a >= b for a, b in zip(values, values[1:]))

    def test_already_accepted_pairs_succeed(self):
        g = cfg(n=40, lam=0.3, D=0.05, mode="asymptotic")
        t = EmpiricalType((20, 20), 40)
        for row in type_count_matrix(40, 2):
            y = EmpiricalType.from_counts(row)
            if h_statistic(y, t, 1.0).value < 0.3:
                assert optimal_attack_tr(y, t, g).succeeded

    def test_tie_break_is_lexicographic(self):
        # t symmetric, y in the middle, budget lets the attacker move either way
        g = cfg(n=4, D=0.25, lam=10)
        res = optimal_attack_tr(EmpiricalType((2, 2), 4), EmpiricalType((4, 0), 4), g)
        assert res.z_type.counts == (3, 1)
        g3 = cfg(n=2, k=3, D=0.5, lam=10)
        res = optimal_attack_tr(EmpiricalType((0, 0, 2), 2), EmpiricalType((1, 1, 0), 2), g3)
        assert res.z_type.counts == (0, 1, 1)


class TestBruteForce:
    def test_oracle_equivalence_random_binary(self):
        rng = np.random.default_rng(2024)
        for _ in range(50):
            n = int(rng.integers(2, 13))
            c = float(rng.choice([0.5, 1.0, 2.0])) if n % 2 == 0 else float(rng.choice([1.0, 2.0]))
            g = cfg(n=n, c=c, D=float(rng.uniform(0, 0.5)), lam=0.2)
            y_seq = rng.integers(0, 2, n)
            t = EmpiricalType.from_counts(rng.multinomial(g.N, [0.3, 0.7]))
            brute = brute_force_attack(y_seq, t, g)
            fast = optimal_attack_tr(EmpiricalType.from_sequence(y_seq, 2), t, g)
            assert abs(brute.h_value - fast.h_value) <= 1e-12
            assert brute.z_type == fast.z_type
            assert brute.plan.total_cost <= g.budget + 1e-9

    def test_ternary_with_line_cost(self):
        cost = [[0, 1, 2], [1, 0, 1], [2, 1, 0]]
        rng = np.random.default_rng(3)
        for _ in range(5):
            g = cfg(n=7, k=3, D=0.3, cost=cost)
            y_seq = rng.integers(0, 3, 7)
            t = EmpiricalType.from_counts(rng.multinomial(7, [0.6, 0.3, 0.1]))
            brute = brute_force_attack(y_seq, t, g)
            fast = optimal_attack_tr(EmpiricalType.from_sequence(y_seq, 3), t, g)
            assert abs(brute.h_value - fast.h_value) <= 1e-12

    def test_zero_budget_keeps_sequence(self):
        y_seq = np.array([0, 1, 1, 0, 1])
        res = brute_force_attack(y_seq, EmpiricalType((5, 0), 5), cfg(n=5, D=0.0))
        np.testing.assert_array_equal(res.z_sequence, y_seq)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(9)
        g = cfg(n=10, D=0.2)
        t = EmpiricalType((7, 3), 10)
        y_seq = rng.integers(0, 2, 10)
        base = brute_force_attack(y_seq, t, g).h_value
        for _ in range(5):
            assert brute_force_attack(rng.permutation(y_seq), t, g).h_value == base

    def test_parallel_shards_agree(self):
        g = cfg(n=18, D=0.2)
        y_seq = np.random.default_rng(1).integers(0, 2, 18)
        t = EmpiricalType((12, 6), 18)
        a = brute_force_attack(y_seq, t, g, n_jobs=1)
        b = brute_force_attack(y_seq, t, g, n_jobs=4)
        assert a.h_value == b.h_value
        np.testing.assert_array_equal(a.z_sequence, b.z_sequence)

    def test_cap(self):
        from adversarial_ht.exceptions import EnumerationTooLargeError

        with pytest.raises(EnumerationTooLargeError):
            brute_force_attack(np.zeros(30, int), EmpiricalType((30, 0), 30), cfg(n=30), cap=10**6)


class TestVersionA:
    def test_equal_training_matches_version_c(self):
        g = cfg(n=8, D=0.125)
        y, t = EmpiricalType((2, 6), 8), EmpiricalType((5, 3), 8)
        a = attack_version_a(y, t, g)
        c = optimal_attack_tr(y, t, g)
        assert a.z_type == c.z_type and a.h_value == c.h_value
        assert a.succeeded is False

    def test_quantization_reference(self):
        assert quantize_training_estimate([0.333, 0.667], 200).counts == (66, 134)

    def test_quantization_from_type(self):
        assert quantize_training_estimate(EmpiricalType((33, 67), 100), 200).counts == (66, 134)
        assert quantize_training_estimate(EmpiricalType((1, 1, 1), 3), 10).counts == (3, 3, 4)

    def test_quantization_error_bound(self):
        rng = np.random.default_rng(7)
        for _ in range(1000):
            k = int(rng.integers(2, 6))
            K, N = int(rng.integers(1, 300)), int(rng.integers(1, 300))
            tA = EmpiricalType.from_counts(rng.multinomial(K, rng.dirichlet(np.ones(k))))
            q = quantize_training_estimate(tA, N)
            assert q.n == N and min(q.counts) >= 0
            assert np.max(np.abs(q.pmf - tA.pmf)) <= k / N

    def test_unequal_lengths_use_quantized_target(self):
        g = cfg(n=10, c=2.0, d_ratio=1.0, D=0.1)
        y, tA = EmpiricalType((1, 9), 10), EmpiricalType((7, 3), 10)
        res = attack_version_a(y, tA, g)
        target = quantize_training_estimate(tA, 20)
        assert res.h_value == pytest.approx(h_statistic(res.z_type, target, 2.0).value)


def test_divergence_rule_is_dominated():
    """Any pair accepted by D(P_x||P_t) < thr is accepted by h < thr at equal lambda."""
    for n in (10, 25, 40):
        types = type_count_matrix(n, 2) / n
        P = np.repeat(types, len(types), axis=0)
        Q = np.tile(types, (len(types), 1))
        h = h_rows(P, Q, 1.0)
        d = kl_rows(P, Q)
        for thr in (0.05, 0.1, 0.3):
            assert not np.any((d < thr) & ~(h < thr))
            assert np.any((h < thr) & ~(d < thr))
