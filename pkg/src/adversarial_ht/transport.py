"""Additive distortion measures and the transportation problems they induce.

An additive, symbol-indexed distortion makes the attacker's budget
constraint a property of the (input type, output type) pair: the cheapest
way to turn a sequence of type ``src`` into one of type ``dst`` is the
integer transportation problem between the two count vectors.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import linprog

from .core import EmpiricalType, as_pmf
from .exceptions import AlphabetMismatchError, InfeasibleTransportError

BUDGET_TOL = 1e-9


@dataclass(frozen=True)
class DistortionSpec:
    """Per-symbol cost matrix ``cost[i, j]`` and per-letter budget ``budget``.

    Non-symmetric matrices are accepted unless ``require_symmetric`` is set.
    """

    cost: np.ndarray
    budget: float
    require_symmetric: bool = field(default=False, compare=False)

    def __post_init__(self):
        cost = np.array(self.cost, dtype=np.float64)
        if cost.ndim != 2 or cost.shape[0] != cost.shape[1] or cost.shape[0] < 2:
            raise ValueError(f"cost must be a square matrix of size >= 2, got shape {cost.shape}")
        if not np.all(np.isfinite(cost)):
            raise ValueError("cost matrix entries must be finite")
        if np.any(cost < 0):
            raise ValueError("cost matrix entries must be nonnegative")
        if np.any(np.diag(cost) != 0):
            raise ValueError("cost matrix must have a zero diagonal")
        if self.require_symmetric and not np.array_equal(cost, cost.T):
            raise ValueError("cost matrix is not symmetric")
        budget = float(self.budget)
        if not np.isfinite(budget) or budget < 0:
            raise ValueError(f"budget must be finite and nonnegative, got {self.budget!r}")
        cost.setflags(write=False)
        object.__setattr__(self, "cost", cost)
        object.__setattr__(self, "budget", budget)

    @classmethod
    def hamming(cls, alphabet_size: int, budget: float) -> "DistortionSpec":
        return cls(1.0 - np.eye(alphabet_size), budget)

    @property
    def alphabet_size(self) -> int:
        return self.cost.shape[0]

    @property
    def uniform_offdiagonal(self):
        """The common off-diagonal cost if all moves cost the same, else ``None``."""
        off = self.cost[~np.eye(self.alphabet_size, dtype=bool)]
        return float(off[0]) if np.all(off == off[0]) else None

    @property
    def path_gaps(self):
        """Gap lengths if the cost is a path metric on the symbol order, else ``None``.

        That is ``cost[i, j] == sum(gaps[min(i,j):max(i,j)])`` for every pair.
        """
        gaps = np.diag(self.cost, 1)
        if np.any(gaps <= 0):
            return None
        pos = np.concatenate([[0.0], np.cumsum(gaps)])
        dist = np.abs(pos[:, None] - pos[None, :])
        return gaps.copy() if np.allclose(self.cost, dist, rtol=0, atol=1e-12) else None

    def with_budget(self, budget: float) -> "DistortionSpec":
        return DistortionSpec(self.cost, budget, self.require_symmetric)

    def to_dict(self):
        return {"cost": self.cost.tolist(), "budget": self.budget}

    def __hash__(self):
        return hash((self.cost.tobytes(), self.budget))

    def __eq__(self, other):
        if not isinstance(other, DistortionSpec):
            return NotImplemented
        return self.budget == other.budget and np.array_equal(self.cost, other.cost)


@dataclass(frozen=True)
class TransportPlan:
    """Integer substitution counts ``flow[i, j]`` (symbol ``i`` rewritten as ``j``)."""

    flow: np.ndarray
    total_cost: float

    @property
    def source_counts(self):
        return tuple(int(v) for v in self.flow.sum(axis=1))

    @property
    def destination_counts(self):
        return tuple(int(v) for v in self.flow.sum(axis=0))

    def apply(self, seq) -> np.ndarray:
        """Rewrite ``seq`` according to the plan.

        For each symbol ``i`` its earliest occurrences are rewritten first,
        destinations taken in symbol order, so the output is deterministic.
        """
        seq = np.asarray(seq, dtype=np.int64)
        k = self.flow.shape[0]
        if tuple(np.bincount(seq, minlength=k)) != self.source_counts:
            raise InfeasibleTransportError("sequence type does not match the plan's source counts")
        out = seq.copy()
        for i in range(k):
            positions = np.flatnonzero(seq == i)
            cursor = 0
            for j in range(k):
                m = int(self.flow[i, j])
                if j == i or m == 0:
                    continue
                out[positions[cursor:cursor + m]] = j
                cursor += m
        return out


def _check_pair(src, dst, spec):
    if src.alphabet_size != dst.alphabet_size or src.alphabet_size != spec.alphabet_size:
        raise AlphabetMismatchError("source, destination and cost matrix alphabets differ")
    if src.n != dst.n:
        raise InfeasibleTransportError(
            f"cannot transport a length-{src.n} type onto a length-{dst.n} type"
        )


def _solve_transport_lp(a, b, cost):
    k = len(a)
    A_eq = np.zeros((2 * k, k * k))
    for i in range(k):
        A_eq[i, i * k:(i + 1) * k] = 1.0
        A_eq[k + i, i::k] = 1.0
    res = linprog(
        cost.ravel(),
        A_eq=A_eq,
        b_eq=np.concatenate([a, b]),
        bounds=(0, None),
        method="highs-ds",
    )
    if res.status != 0:
        raise InfeasibleTransportError(f"transportation LP failed: {res.message}")
    return res.x.reshape(k, k), float(res.fun)


def min_transport_cost(src: EmpiricalType, dst: EmpiricalType, spec: DistortionSpec):
    """Cheapest integer plan moving ``src`` counts onto ``dst`` counts.

    The transportation polytope has integral vertices, so the simplex
    vertex returned by the LP solver is an integer plan; this is checked
    rather than assumed.

    Returns
    -------
    cost : float
    plan : TransportPlan
    """
    _check_pair(src, dst, spec)
    a = src.as_array()
    b = dst.as_array()
    if np.array_equal(a, b):
        return 0.0, TransportPlan(np.diag(a).astype(np.int64), 0.0)
    relaxed, lp_value = _solve_transport_lp(a.astype(float), b.astype(float), spec.cost)
    flow = np.rint(relaxed).astype(np.int64)
    if (
        np.any(flow < 0)
        or not np.array_equal(flow.sum(axis=1), a)
        or not np.array_equal(flow.sum(axis=0), b)
        or np.max(np.abs(relaxed - flow)) > 1e-6
    ):
        raise InfeasibleTransportError("transportation LP returned a non-integral vertex")
    total = float((flow * spec.cost).sum())
    if abs(total - lp_value) > 1e-7 * max(1.0, abs(lp_value)):
        raise InfeasibleTransportError("rounded plan does not attain the LP optimum")
    return total, TransportPlan(flow, total)


def reachable(src: EmpiricalType, dst: EmpiricalType, spec: DistortionSpec) -> bool:
    """Whether ``dst`` can be produced from ``src`` within the budget ``n * D``."""
    _check_pair(src, dst, spec)
    cost = pairwise_transport_cost(src.as_array()[None, :], dst.as_array()[None, :], spec)[0, 0]
    return bool(cost <= src.n * spec.budget + BUDGET_TOL)


def continuous_transport_cost(P, Q, spec: DistortionSpec) -> float:
    """Minimum expected cost over couplings of ``P`` and ``Q`` (per letter)."""
    p = as_pmf(P, size=spec.alphabet_size, name="P")
    q = as_pmf(Q, size=spec.alphabet_size, name="Q")
    return float(pairwise_transport_cost(p[None, :], q[None, :], spec)[0, 0])


def pairwise_transport_cost(src_rows, dst_rows, spec: DistortionSpec) -> np.ndarray:
    """Optimal transport cost between every row of ``src_rows`` and of ``dst_rows``.

    Rows may be counts or pmfs (masses must match row by row).  Binary
    alphabets, uniform off-diagonal costs and path metrics have closed forms; other
    matrices fall back to one LP per pair.
    """
    src = np.asarray(src_rows, dtype=np.float64)
    dst = np.asarray(dst_rows, dtype=np.float64)
    k = spec.alphabet_size
    if src.shape[-1] != k or dst.shape[-1] != k:
        raise AlphabetMismatchError("row length does not match the cost matrix")
    if k == 2:
        # only one direction of substitution is ever worth paying for
        diff = src[:, None, 0] - dst[None, :, 0]
        return np.where(diff > 0, diff * spec.cost[0, 1], -diff * spec.cost[1, 0])
    w = spec.uniform_offdiagonal
    if w is not None:
        return 0.5 * w * np.abs(src[:, None, :] - dst[None, :, :]).sum(axis=-1)
    gaps = spec.path_gaps
    if gaps is not None:
        # one-dimensional transport: mass crossing each gap is the CDF difference
        F_src = np.cumsum(src, axis=-1)[:, :-1]
        F_dst = np.cumsum(dst, axis=-1)[:, :-1]
        return (np.abs(F_src[:, None, :] - F_dst[None, :, :]) * gaps).sum(axis=-1)
    out = np.empty((src.shape[0], dst.shape[0]))
    for i, a in enumerate(src):
        for j, b in enumerate(dst):
            out[i, j] = 0.0 if np.array_equal(a, b) else _solve_transport_lp(a, b, spec.cost)[1]
    return out
