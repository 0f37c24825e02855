from itertools import product

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from adversarial_ht.core import EmpiricalType, type_count_matrix
from adversarial_ht.exceptions import AlphabetMismatchError, InfeasibleTransportError
from adversarial_ht.transport import (
    DistortionSpec,
    continuous_transport_cost,
    min_transport_cost,
    pairwise_transport_cost,
    reachable,
)

LINE3 = np.array([[0, 1, 2], [1, 0, 1], [2, 1, 0]], dtype=float)


def brute_force_cost(a, b, cost):
    """Minimum over every nonnegative integer matrix with the given margins."""
    k = len(a)

    def rows(total, parts):
        if parts == 1:
            yield (total,)
            return
        for first in range(total + 1):
            for rest in rows(total - first, parts - 1):
                yield (first,) + rest

    best = np.inf
    for plan in product(*(list(rows(int(ai), k)) for ai in a)):
        flow = np.array(plan)
        if np.array_equal(flow.sum(axis=0), b):
            best = min(best, float((flow * cost).sum()))
    return best


class TestDistortionSpec:
    def test_validation(self):
        with pytest.raises(ValueError):
            DistortionSpec([[0, 1], [1, 1]], 0.1)
        with pytest.raises(ValueError):
            DistortionSpec([[0, -1], [1, 0]], 0.1)
        with pytest.raises(ValueError):
            DistortionSpec([[0, np.inf], [1, 0]], 0.1)
        with pytest.raises(ValueError):
            DistortionSpec([[0, 1], [1, 0]], -0.1)

    def test_strict_symmetry_flag(self):
        DistortionSpec([[0, 1], [2, 0]], 0.1)
        with pytest.raises(ValueError):
            DistortionSpec([[0, 1], [2, 0]], 0.1, require_symmetric=True)

    def test_hamming(self):
        spec = DistortionSpec.hamming(3, 0.2)
        assert spec.uniform_offdiagonal == 1.0
        assert DistortionSpec(LINE3, 0.1).uniform_offdiagonal is None
        np.testing.assert_array_equal(DistortionSpec(LINE3, 0.1).path_gaps, [1, 1])
        assert DistortionSpec([[0, 1, 1], [1, 0, 3], [1, 3, 0]], 0).path_gaps is None


class TestMinTransportCost:
    def test_identity(self):
        t = EmpiricalType((3, 2, 4), 9)
        cost, plan = min_transport_cost(t, t, DistortionSpec(LINE3, 0.0))
        assert cost == 0.0
        np.testing.assert_array_equal(plan.flow, np.diag([3, 2, 4]))

    def test_hamming_binary(self):
        cost, plan = min_transport_cost(
            EmpiricalType((3, 5), 8), EmpiricalType((5, 3), 8), DistortionSpec.hamming(2, 0)
        )
        assert cost == 2.0
        assert plan.source_counts == (3, 5) and plan.destination_counts == (5, 3)
        assert plan.total_cost == float((plan.flow * (1 - np.eye(2))).sum())

    def test_three_symbol_line(self):
        cost, plan = min_transport_cost(
            EmpiricalType((4, 0, 0), 4), EmpiricalType((0, 0, 4), 4), DistortionSpec(LINE3, 0)
        )
        assert cost == 8.0 == brute_force_cost((4, 0, 0), (0, 0, 4), LINE3)
        assert plan.flow[0, 2] == 4

    def test_length_mismatch(self):
        with pytest.raises(InfeasibleTransportError):
            min_transport_cost(EmpiricalType((1, 1), 2), EmpiricalType((1, 2), 3), DistortionSpec.hamming(2, 0))

    def test_alphabet_mismatch(self):
        with pytest.raises(AlphabetMismatchError):
            min_transport_cost(EmpiricalType((1, 1), 2), EmpiricalType((1, 1), 2), DistortionSpec.hamming(3, 0))

    @pytest.mark.parametrize("k", [2, 3])
    def test_matches_exhaustive_enumeration(self, k):
        rng = np.random.default_rng(k)
        for n in range(1, 13, 1 if k == 2 else 3):
            cost = rng.integers(0, 5, size=(k, k)).astype(float)
            np.fill_diagonal(cost, 0)
            spec = DistortionSpec(cost, 0.0)
            types = type_count_matrix(n, k)
            picks = types if len(types) <= 12 else types[rng.choice(len(types), 12, replace=False)]
            for a in picks:
                for b in picks:
                    value, plan = min_transport_cost(
                        EmpiricalType.from_counts(a), EmpiricalType.from_counts(b), spec
                    )
                    assert value == brute_force_cost(a, b, cost)
                    assert plan.flow.dtype.kind == "i" and plan.flow.min() >= 0
                    assert plan.total_cost == value

    def test_symmetric_costs_are_symmetric(self):
        spec = DistortionSpec(LINE3, 0)
        types = [EmpiricalType.from_counts(r) for r in type_count_matrix(5, 3)]
        for a in types[::3]:
            for b in types[::4]:
                assert min_transport_cost(a, b, spec)[0] == min_transport_cost(b, a, spec)[0]


class TestPairwiseClosedForms:
    def test_binary_hamming_is_half_l1(self):
        rows = type_count_matrix(10, 2)
        got = pairwise_transport_cost(rows, rows, DistortionSpec.hamming(2, 0))
        expected = 0.5 * np.abs(rows[:, None, :] - rows[None, :, :]).sum(-1)
        np.testing.assert_array_equal(got, expected)

    @pytest.mark.parametrize("k", [2, 3, 4])
    def test_closed_forms_match_lp(self, k):
        rng = np.random.default_rng(10 + k)
        rows = type_count_matrix(5, k)
        rows = rows[rng.choice(len(rows), min(8, len(rows)), replace=False)]
        specs = [DistortionSpec.hamming(k, 0)]
        if k == 2:
            specs.append(DistortionSpec([[0, 0.3], [2.5, 0]], 0))
        else:
            pos = np.concatenate([[0], np.cumsum(rng.uniform(0.2, 2.0, k - 1))])
            line = DistortionSpec(np.abs(pos[:, None] - pos[None, :]), 0)
            assert line.path_gaps is not None
            specs.append(line)
        for spec in specs:
            fast = pairwise_transport_cost(rows, rows, spec)
            for i, a in enumerate(rows):
                for j, b in enumerate(rows):
                    lp = min_transport_cost(EmpiricalType.from_counts(a), EmpiricalType.from_counts(b), spec)[0]
                    assert fast[i, j] == pytest.approx(lp, abs=1e-12)


class TestReachable:
    def test_zero_budget(self):
        spec = DistortionSpec.hamming(2, 0.0)
        src = EmpiricalType((4, 4), 8)
        for b in range(9):
            dst = EmpiricalType((b, 8 - b), 8)
            assert reachable(src, dst, spec) == (b == 4)

    def test_hamming_quarter_budget(self):
        spec = DistortionSpec.hamming(2, 0.25)
        src = EmpiricalType((4, 4), 8)
        assert reachable(src, EmpiricalType((6, 2), 8), spec)
        assert not reachable(src, EmpiricalType((7, 1), 8), spec)

    def test_budget_dominates(self):
        spec = DistortionSpec(LINE3, 2.0)
        src = EmpiricalType((1, 2, 3), 6)
        for row in type_count_matrix(6, 3):
            assert reachable(src, EmpiricalType.from_counts(row), spec)


class TestContinuous:
    def test_identity(self):
        assert continuous_transport_cost([0.2, 0.3, 0.5], [0.2, 0.3, 0.5], DistortionSpec(LINE3, 0)) == 0.0

    def test_hamming_total_variation(self):
        assert continuous_transport_cost([0.5, 0.5], [0.75, 0.25], DistortionSpec.hamming(2, 0)) == 0.25

    @settings(max_examples=100, deadline=None)
    @given(st.floats(0, 1), st.floats(0, 1))
    def test_binary_closed_form(self, p, q):
        cost = continuous_transport_cost([p, 1 - p], [q, 1 - q], DistortionSpec.hamming(2, 0))
        assert cost == pytest.approx(abs(p - q), abs=1e-12)

    def test_scaling_with_types(self):
        spec = DistortionSpec(LINE3, 0)
        rows = type_count_matrix(6, 3)
        for a in rows[::4]:
            for b in rows[::5]:
                T, S = EmpiricalType.from_counts(a), EmpiricalType.from_counts(b)
                disc = min_transport_cost(T, S, spec)[0]
                assert abs(continuous_transport_cost(T.pmf, S.pmf, spec) - disc / 6) < 1e-9
