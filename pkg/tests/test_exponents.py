import json

import numpy as np
import pytest

from adversarial_ht import _convex
from adversarial_ht.core import kl_divergence
from adversarial_ht.exponents import epsilon_ks, epsilon_tr, epsilon_tr_a_bounds
from adversarial_ht.oracle import grid_exponent
from adversarial_ht.regions import RegionQuery, in_gamma_infinity
from adversarial_ht.transport import DistortionSpec

H05 = DistortionSpec.hamming(2, 0.05)
HALF = [0.5, 0.5]


def random_binary_instances(count, seed):
    rng = np.random.default_rng(seed)
    for _ in range(count):
        px = rng.uniform(0.2, 0.8)
        py = rng.uniform(0.02, 0.98)
        yield (
            np.array([px, 1 - px]),
            np.array([py, 1 - py]),
            float(rng.choice([0.02, 0.05, 0.1])),
            DistortionSpec.hamming(2, float(rng.choice([0.0, 0.02, 0.05]))),
            float(rng.choice([0.5, 1.0, 2.0])),
        )


class TestKnownSource:
    def test_identical_sources(self):
        assert epsilon_ks(HALF, HALF, 0.05, H05).value == 0.0

    def test_small_lambda_zero_budget_is_divergence(self):
        res = epsilon_ks([0.4, 0.6], [0.1, 0.9], 1e-8, DistortionSpec.hamming(2, 0.0))
        assert res.value == pytest.approx(kl_divergence([0.4, 0.6], [0.1, 0.9]), abs=1e-3)
        assert res.value < kl_divergence([0.4, 0.6], [0.1, 0.9])

    def test_reference_instance_against_fine_grid(self):
        res = epsilon_ks(HALF, [0.1, 0.9], 0.05, H05)
        assert res.value > 0
        oracle = grid_exponent(HALF, [0.1, 0.9], 0.05, H05, game="ks", resolution=1e-4, refine=1e-7)
        assert res.value == pytest.approx(oracle, abs=1e-5)

    def test_ternary_solver(self):
        H3 = DistortionSpec.hamming(3, 0.05)
        res = epsilon_ks([0.3, 0.3, 0.4], [0.05, 0.15, 0.8], 0.05, H3)
        assert res.value > 0 and res.diagnostics["gap"] < 1e-6
        # minimiser is on the region boundary
        q = RegionQuery(np.array([0.3, 0.3, 0.4]), 0.05, H3, 1.0, "ks")
        assert in_gamma_infinity(res.minimizer_P, q)


class TestTraining:
    def test_inside_region_is_exact_zero(self):
        res = epsilon_tr(HALF, [0.4, 0.6], 0.05, H05)
        assert res.value == 0.0
        np.testing.assert_array_equal(res.minimizer_Q, HALF)

    def test_reference_instance(self):
        tr = epsilon_tr(HALF, [0.05, 0.95], 0.05, H05, c=1.0).value
        ks = epsilon_ks(HALF, [0.05, 0.95], 0.05, H05).value
        assert 0 < tr < ks
        assert tr == pytest.approx(grid_exponent(HALF, [0.05, 0.95], 0.05, H05, c=1.0), abs=1e-4)

    def test_ratio_sweep_approaches_known_source_from_below(self):
        ks = epsilon_ks(HALF, [0.05, 0.95], 0.05, H05).value
        values = [epsilon_tr(HALF, [0.05, 0.95], 0.05, H05, c=c).value for c in (1, 2, 5, 10, 50)]
        assert all(a < b for a, b in zip(values, values[1:]))
        assert values[-1] < ks
        assert ks - values[-1] < 0.1 * ks

    def test_minimisers_are_consistent(self):
        res = epsilon_tr([0.6, 0.4], [0.1, 0.9], 0.05, H05, c=2.0)
        Q, P = res.minimizer_Q, res.minimizer_P
        assert res.value == pytest.approx(2.0 * kl_divergence(Q, [0.6, 0.4]) + kl_divergence(P, [0.1, 0.9]), abs=1e-12)
        assert in_gamma_infinity(P, RegionQuery(Q, 0.05, H05, 2.0, "tr"))

    def test_degenerate_training_source(self):
        res = epsilon_tr([1.0, 0.0], [0.2, 0.8], 0.05, H05)
        assert res.diagnostics.get("degenerate") and res.value > 0

    def test_convex_program_matches_binary_reduction(self):
        for px, py, c in ((0.5, 0.05, 1.0), (0.6, 0.1, 2.0), (0.3, 0.9, 0.5)):
            P_X, P_Y = np.array([px, 1 - px]), np.array([py, 1 - py])
            exact = epsilon_tr(P_X, P_Y, 0.05, H05, c=c).value
            Q, P, _, _ = _convex.min_exponent(P_X, P_Y, 0.05, H05.cost, 0.05, c, "tr", c)
            approx = c * kl_divergence(Q, P_X) + kl_divergence(P, P_Y)
            assert approx == pytest.approx(exact, abs=1e-6)

    def test_ternary(self):
        H3 = DistortionSpec.hamming(3, 0.05)
        args = ([0.3, 0.3, 0.4], [0.05, 0.15, 0.8], 0.05, H3)
        tr, ks = epsilon_tr(*args).value, epsilon_ks(*args).value
        assert 0 < tr < ks


class TestProperties:
    def test_ordering_on_random_instances(self):
        for P_X, P_Y, lam, dist, c in random_binary_instances(20, 11):
            tr = epsilon_tr(P_X, P_Y, lam, dist, c).value
            ks = epsilon_ks(P_X, P_Y, lam, dist).value
            assert tr <= ks + 1e-12
            if not in_gamma_infinity(P_Y, RegionQuery(P_X, lam, dist, c, "ks")):
                assert tr < ks

    def test_zero_set_matches_region_module(self):
        for P_X, P_Y, lam, dist, c in random_binary_instances(30, 12):
            inside = in_gamma_infinity(P_Y, RegionQuery(P_X, lam, dist, c, "tr"))
            value = epsilon_tr(P_X, P_Y, lam, dist, c).value
            assert (value <= 1e-6) == inside

    def test_monotone_in_lambda_and_budget(self):
        P_Y = [0.1, 0.9]
        for fn in (lambda lam, d: epsilon_ks(HALF, P_Y, lam, d), lambda lam, d: epsilon_tr(HALF, P_Y, lam, d)):
            by_lam = [fn(lam, H05).value for lam in (0.01, 0.03, 0.05, 0.1)]
            by_d = [fn(0.05, DistortionSpec.hamming(2, D)).value for D in (0.0, 0.02, 0.05, 0.1)]
            for seq in (by_lam, by_d):
                assert all(a >= b - 1e-12 for a, b in zip(seq, seq[1:]))


class TestVersionA:
    def test_inside_region_gives_zero_bounds(self):
        b = epsilon_tr_a_bounds(HALF, [0.4, 0.6], 0.05, H05)
        assert (b.lower, b.upper) == (0.0, 0.0)

    def test_bounds_order_and_relation_to_version_c(self):
        for P_X, P_Y, lam, dist, c in random_binary_instances(8, 13):
            b = epsilon_tr_a_bounds(P_X, P_Y, lam, dist, c)
            tr = epsilon_tr(P_X, P_Y, lam, dist, c).value
            assert b.lower <= b.upper + 1e-12
            assert b.upper >= tr - 1e-12
            assert b.lower == pytest.approx(tr, abs=1e-12)
            assert (b.upper == 0.0) == (tr == 0.0)

    def test_equal_ratio_uses_doubled_weight(self):
        b = epsilon_tr_a_bounds(HALF, [0.05, 0.95], 0.05, H05, c=1.0)
        explicit = epsilon_tr_a_bounds(HALF, [0.05, 0.95], 0.05, H05, c=1.0, d_ratio=1.0)
        assert b.upper == explicit.upper
        Q, P = b.upper_result.minimizer_Q, b.upper_result.minimizer_P
        assert b.upper == pytest.approx(2.0 * kl_divergence(Q, HALF) + kl_divergence(P, [0.05, 0.95]), abs=1e-12)
        # a tiny attacker training set collapses the upper bound onto version c
        small = epsilon_tr_a_bounds(HALF, [0.05, 0.95], 0.05, H05, c=1.0, d_ratio=1e-6)
        assert small.upper == pytest.approx(b.lower, abs=1e-5)
        assert b.lower_is_relaxed


def test_json_records():
    res = epsilon_tr(HALF, [0.05, 0.95], 0.05, H05)
    rec = json.loads(json.dumps(res.to_dict()))
    assert rec["inputs"]["P_Y"] == [0.05, 0.95]
    assert rec["value"] == float(f"{res.value:.6g}")
    json.dumps(epsilon_ks([0.3, 0.3, 0.4], [0.05, 0.15, 0.8], 0.05, DistortionSpec.hamming(3, 0.05)).to_dict())
    json.dumps(epsilon_tr_a_bounds(HALF, [0.05, 0.95], 0.05, H05).to_dict())
