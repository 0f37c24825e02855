"""Defender acceptance tests and attacker strategies for both games.

The defender's optimal region depends on the (test, training) pair only
through their types, and the attacker's budget constraint depends only on
the (input, output) types, so every optimal strategy here is computed by
scanning types.  :func:`brute_force_attack` searches sequence space
directly and exists to validate that reduction.
"""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from .core import (
    DEFAULT_ENUMERATION_CAP,
    EmpiricalType,
    as_pmf,
    h_rows,
    kl_rows,
    type_count_matrix,
)
from .exceptions import AlphabetMismatchError, EnumerationTooLargeError
from .transport import BUDGET_TOL, DistortionSpec, TransportPlan, min_transport_cost, pairwise_transport_cost
from .validation import check_ratio, check_sequence

ACCEPT = "accept_H0"
REJECT = "reject_H0"
THRESHOLD_MODES = ("finite_n", "asymptotic")
GAMES = ("ks", "tr")
TIE_TOL = 1e-12


def _integral_length(ratio, n, name):
    value = ratio * n
    rounded = round(value)
    if rounded <= 0 or abs(value - rounded) > 1e-9:
        raise ValueError(f"{name} * n = {value} is not a positive integer")
    return int(rounded)


@dataclass(frozen=True)
class GameConfig:
    """Parameters shared by the defender and the attacker.

    ``c`` fixes the defender's training length ``N = c n``; ``d_ratio``
    fixes the attacker's own training length ``K = d n`` in version a
    (defaults to ``c``).  ``lam`` is the false-positive exponent in bits.
    """

    alphabet_size: int
    n: int
    lam: float
    distortion: DistortionSpec
    c: float = 1.0
    d_ratio: Optional[float] = None
    threshold_mode: str = "finite_n"

    def __post_init__(self):
        if int(self.alphabet_size) < 2:
            raise ValueError("alphabet_size must be >= 2")
        if int(self.n) < 1:
            raise ValueError("n must be >= 1")
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError(f"lam must be positive and finite, got {self.lam!r}")
        if self.threshold_mode not in THRESHOLD_MODES:
            raise ValueError(f"threshold_mode must be one of {THRESHOLD_MODES}")
        if self.distortion.alphabet_size != self.alphabet_size:
            raise AlphabetMismatchError("distortion matrix does not match alphabet_size")
        c = check_ratio(self.c)
        d = c if self.d_ratio is None else check_ratio(self.d_ratio, "d_ratio")
        object.__setattr__(self, "alphabet_size", int(self.alphabet_size))
        object.__setattr__(self, "n", int(self.n))
        object.__setattr__(self, "c", c)
        object.__setattr__(self, "d_ratio", d)
        _integral_length(c, self.n, "c")
        _integral_length(d, self.n, "d_ratio")

    @property
    def N(self) -> int:
        return _integral_length(self.c, self.n, "c")

    @property
    def K(self) -> int:
        return _integral_length(self.d_ratio, self.n, "d_ratio")

    @property
    def budget(self) -> float:
        """Total distortion allowed on a length-``n`` sequence."""
        return self.n * self.distortion.budget

    def with_n(self, n: int) -> "GameConfig":
        return replace(self, n=n)

    def to_dict(self):
        return {
            "alphabet_size": self.alphabet_size,
            "n": self.n,
            "c": self.c,
            "d_ratio": self.d_ratio,
            "lambda": self.lam,
            "distortion": self.distortion.to_dict(),
            "threshold_mode": self.threshold_mode,
        }


@dataclass(frozen=True)
class Verdict:
    decision: str
    statistic: float
    threshold: float

    @property
    def accepted(self) -> bool:
        return self.decision == ACCEPT


@dataclass(frozen=True)
class AttackResult:
    z_type: EmpiricalType
    plan: TransportPlan
    h_value: float
    succeeded: bool
    z_sequence: Optional[np.ndarray] = field(default=None, compare=False)

    def to_dict(self):
        out = {
            "z_counts": list(self.z_type.counts),
            "plan": self.plan.flow.tolist(),
            "plan_cost": self.plan.total_cost,
            "h_value": self.h_value,
            "succeeded": self.succeeded,
        }
        if self.z_sequence is not None:
            out["z_sequence"] = self.z_sequence.tolist()
        return out


def threshold(config: GameConfig, game: str = "tr") -> float:
    """Acceptance threshold on the test statistic.

    In ``finite_n`` mode the threshold carries the polynomial correction
    that makes the false-positive guarantee hold at finite length; it can
    be negative, in which case nothing is accepted.
    """
    if game not in GAMES:
        raise ValueError(f"game must be one of {GAMES}")
    if config.threshold_mode == "asymptotic":
        return config.lam
    k, n = config.alphabet_size, config.n
    if game == "tr":
        return config.lam - k * math.log2((n + 1) * (config.N + 1)) / n
    return config.lam - k * math.log2(n + 1) / n


def acceptance_statistic(P_rows, target, config: GameConfig, game: str) -> np.ndarray:
    """``h_c(P, target)`` for the training game or ``D(P||target)`` for known sources."""
    if game == "tr":
        return h_rows(P_rows, target, config.c)
    return kl_rows(P_rows, target)


def _check_type(t, length, k, name):
    if t.alphabet_size != k:
        raise AlphabetMismatchError(f"{name} has {t.alphabet_size} symbols, expected {k}")
    if t.n != length:
        raise ValueError(f"{name} has length {t.n}, expected {length}")


def _decide(statistic, thr):
    return Verdict(ACCEPT if statistic < thr else REJECT, float(statistic), float(thr))


def defender_decide_tr(x: EmpiricalType, t: EmpiricalType, config: GameConfig) -> Verdict:
    """Accept H0 iff ``h(P_x, P_t)`` is strictly below the training-game threshold."""
    _check_type(x, config.n, config.alphabet_size, "test type")
    _check_type(t, config.N, config.alphabet_size, "training type")
    stat = float(h_rows(x.pmf, t.pmf, config.c))
    return _decide(stat, threshold(config, "tr"))


def defender_decide_ks(x: EmpiricalType, P_X, config: GameConfig) -> Verdict:
    _check_type(x, config.n, config.alphabet_size, "test type")
    p = as_pmf(P_X, config.alphabet_size, "P_X")
    return _decide(float(kl_rows(x.pmf, p)), threshold(config, "ks"))


def best_reachable_type(y: EmpiricalType, target, config: GameConfig, game: str = "tr", cap=DEFAULT_ENUMERATION_CAP):
    """Minimise the acceptance statistic over output types reachable from ``y``.

    Returns ``(counts, statistic)``; ties within ``TIE_TOL`` go to the
    lexicographically smallest count vector.
    """
    types = type_count_matrix(config.n, config.alphabet_size, cap)
    cost = pairwise_transport_cost(y.as_array()[None, :], types, config.distortion)[0]
    feasible = np.flatnonzero(cost <= config.budget + BUDGET_TOL)
    stats = acceptance_statistic(types[feasible] / config.n, target, config, game)
    best = stats.min()
    first = int(np.flatnonzero(stats <= best + TIE_TOL)[0])
    return types[feasible[first]], float(stats[first])


def _attack(y, target, config, game, succeeded=None):
    counts, value = best_reachable_type(y, target, config, game)
    z = EmpiricalType.from_counts(counts)
    _, plan = min_transport_cost(y, z, config.distortion)
    assert plan.total_cost <= config.budget + BUDGET_TOL
    if succeeded is None:
        succeeded = value < threshold(config, game)
    return AttackResult(z, plan, value, bool(succeeded))


def optimal_attack_tr(y: EmpiricalType, t: EmpiricalType, config: GameConfig) -> AttackResult:
    """Optimal version-c attack: the reachable output type minimising ``h(., P_t)``."""
    _check_type(y, config.n, config.alphabet_size, "attacked type")
    _check_type(t, config.N, config.alphabet_size, "training type")
    return _attack(y, t.pmf, config, "tr")


def optimal_attack_ks(y: EmpiricalType, P_X, config: GameConfig) -> AttackResult:
    """Known-source attack: the reachable output type minimising ``D(. || P_X)``."""
    _check_type(y, config.n, config.alphabet_size, "attacked type")
    return _attack(y, as_pmf(P_X, config.alphabet_size, "P_X"), config, "ks")


def quantize_training_estimate(P_tA, N: int) -> EmpiricalType:
    """Estimate of the defender's training type built from the attacker's own pmf.

    Every coordinate but the last is floored to a multiple of ``1/N`` and
    the last absorbs the remainder, so the result is a type of length ``N``.
    """
    if isinstance(P_tA, EmpiricalType):
        counts = [c * N // P_tA.n for c in P_tA.counts[:-1]]
    else:
        p = as_pmf(P_tA, name="P_tA")
        counts = [int(math.floor(v * N + 1e-12)) for v in p[:-1]]
    last = N - sum(counts)
    assert last >= 0, "flooring can only remove mass"
    return EmpiricalType(tuple(counts) + (last,), N)


def attack_version_a(y: EmpiricalType, t_A: EmpiricalType, config: GameConfig) -> AttackResult:
    """Attack with the attacker's own training sequence in place of the defender's.

    When ``K == N`` the attacker plays the version-c attack against ``t_A``;
    otherwise it first quantises ``P_{t_A}`` to denominator ``N``.  Success
    can only be judged against the defender's training type, so
    ``succeeded`` is left ``False`` for the caller to fill in.
    """
    _check_type(y, config.n, config.alphabet_size, "attacked type")
    _check_type(t_A, config.K, config.alphabet_size, "attacker training type")
    target = t_A if config.K == config.N else quantize_training_estimate(t_A, config.N)
    return _attack(y, target.pmf, config, "tr", succeeded=False)


def _digit_matrix(k, length):
    idx = np.arange(k**length, dtype=np.int64)
    powers = k ** np.arange(length - 1, -1, -1, dtype=np.int64)
    return ((idx[:, None] // powers[None, :]) % k).astype(np.int64)


def brute_force_attack(
    y_seq,
    t: EmpiricalType,
    config: GameConfig,
    cap: int = DEFAULT_ENUMERATION_CAP,
    n_jobs: int = 1,
) -> AttackResult:
    """Exhaustive search over every output sequence within the distortion budget.

    Sequence space is split into shards by prefix; each shard is scanned
    with vectorised arithmetic and the shard winners are reduced in prefix
    order, so the answer does not depend on ``n_jobs``.
    """
    k, n = config.alphabet_size, config.n
    y = check_sequence(y_seq, k, "y_seq")
    if y.size != n:
        raise ValueError(f"y_seq has length {y.size}, expected {n}")
    _check_type(t, config.N, k, "training type")
    if k**n > cap:
        raise EnumerationTooLargeError(k**n, cap, "sequences")
    cost = config.distortion.cost
    suffix_len = min(n, max(1, int(math.log(2**16, k))))
    prefix_len = n - suffix_len
    suffixes = _digit_matrix(k, suffix_len)
    suffix_cost = cost[y[prefix_len:][None, :], suffixes].sum(axis=1)
    suffix_counts = np.stack([(suffixes == s).sum(axis=1) for s in range(k)], axis=1)
    target = t.pmf
    limit = config.budget + BUDGET_TOL

    def scan(prefix):
        pre_cost = float(cost[y[:prefix_len], prefix].sum()) if prefix_len else 0.0
        pre_counts = np.bincount(prefix, minlength=k) if prefix_len else np.zeros(k, np.int64)
        ok = np.flatnonzero(pre_cost + suffix_cost <= limit)
        if ok.size == 0:
            return None
        counts = suffix_counts[ok] + pre_counts
        stats = h_rows(counts / n, target, config.c)
        best = stats.min()
        tied = np.flatnonzero(stats <= best + TIE_TOL)
        # lexicographically smallest count vector among the minimisers
        order = np.lexsort(counts[tied].T[::-1])
        j = tied[order[0]]
        return float(stats[j]), tuple(int(v) for v in counts[j]), np.concatenate([prefix, suffixes[ok[j]]])

    prefixes = list(_digit_matrix(k, prefix_len)) if prefix_len else [np.zeros(0, np.int64)]
    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            results = list(pool.map(scan, prefixes))
    else:
        results = [scan(p) for p in prefixes]
    results = [r for r in results if r is not None]
    best_h = min(r[0] for r in results)
    value, counts, z = min((r for r in results if r[0] <= best_h + TIE_TOL), key=lambda r: r[1])
    flow = np.zeros((k, k), dtype=np.int64)
    np.add.at(flow, (y, z), 1)
    plan = TransportPlan(flow, float((flow * cost).sum()))
    z_type = EmpiricalType(counts, n)
    return AttackResult(z_type, plan, value, value < threshold(config, "tr"), z_sequence=z)
