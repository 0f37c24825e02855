"""Attack-success sets at finite length and asymptotic indistinguishability regions.

``Gamma^n(Q)`` is the set of length-``n`` types from which the attacker
can reach the defender's acceptance region (built around ``Q``) within the
distortion budget.  ``Gamma^inf(Q)`` is its asymptotic counterpart: the
pmfs ``P`` for which some ``P'`` within per-letter transport cost ``D``
has acceptance statistic at most ``lam``.
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from . import _convex
from .core import DEFAULT_ENUMERATION_CAP, EmpiricalType, as_pmf, h_rows, kl_rows, type_count_matrix
from .exceptions import AlphabetMismatchError
from .strategies import GAMES, GameConfig, acceptance_statistic, best_reachable_type, threshold
from .transport import BUDGET_TOL, DistortionSpec, pairwise_transport_cost
from .validation import check_ratio

BOUNDARY_TOL = 1e-7
BISECTION_TOL = 1e-9
# below this lambda the region degenerates towards the cost ball around Q
STRICT_INCLUSION_LAMBDA_FLOOR = 0.01


@dataclass(frozen=True)
class RegionQuery:
    Q: np.ndarray
    lam: float
    distortion: DistortionSpec
    c: float = 1.0
    game: str = "tr"

    def __post_init__(self):
        Q = as_pmf(self.Q, size=self.distortion.alphabet_size, name="Q")
        object.__setattr__(self, "Q", Q)
        if not (math.isfinite(self.lam) and self.lam > 0):
            raise ValueError("lam must be positive and finite")
        object.__setattr__(self, "c", check_ratio(self.c))
        if self.game not in GAMES:
            raise ValueError(f"game must be one of {GAMES}")

    def for_game(self, game):
        return RegionQuery(self.Q, self.lam, self.distortion, self.c, game)


# ---------------------------------------------------------------------------
# finite n


def gamma_n_mask(Q, config: GameConfig, game: str = "tr", cap: int = DEFAULT_ENUMERATION_CAP):
    """Membership of every length-``n`` type in ``Gamma^n(Q)``.

    Returns ``(types, mask)`` where ``types`` is the lexicographic
    ``(num_types, k)`` count array.
    """
    q = as_pmf(Q, size=config.alphabet_size, name="Q")
    types = type_count_matrix(config.n, config.alphabet_size, cap)
    stats = acceptance_statistic(types / config.n, q, config, game)
    accepted = stats < threshold(config, game)
    if not accepted.any():
        return types, np.zeros(len(types), dtype=bool)
    limit = config.budget + BUDGET_TOL
    if config.alphabet_size == 2:
        return types, _binary_window_any(types[:, 0], accepted, config.distortion.cost, limit)
    targets = types[accepted]
    mask = np.zeros(len(types), dtype=bool)
    step = max(1, 2_000_000 // max(1, len(targets)))
    for lo in range(0, len(types), step):
        cost = pairwise_transport_cost(types[lo:lo + step], targets, config.distortion)
        mask[lo:lo + step] = (cost <= limit).any(axis=1)
    return types, mask


def _binary_window_any(zeros, accepted, cost, limit):
    """For each count of symbol 0, is any accepted count inside its reachable window?"""
    n = len(zeros) - 1
    # zeros[i] == i for the lexicographic binary enumeration
    down = n if cost[0, 1] == 0 else math.floor(limit / cost[0, 1])
    up = n if cost[1, 0] == 0 else math.floor(limit / cost[1, 0])
    prefix = np.concatenate([[0], np.cumsum(accepted)])
    lo = np.clip(zeros - down, 0, n)
    hi = np.clip(zeros + up, 0, n)
    return prefix[hi + 1] - prefix[lo] > 0


def in_gamma_n(y_type: EmpiricalType, Q, config: GameConfig, game: str = "tr") -> bool:
    """Whether the optimal attack from ``y_type`` lands in the acceptance region around ``Q``."""
    if y_type.n != config.n:
        raise ValueError(f"y_type has length {y_type.n}, expected {config.n}")
    if y_type.alphabet_size != config.alphabet_size:
        raise AlphabetMismatchError("y_type alphabet does not match the configuration")
    q = as_pmf(Q, size=config.alphabet_size, name="Q")
    _, value = best_reachable_type(y_type, q, config, game)
    return value < threshold(config, game)


# ---------------------------------------------------------------------------
# asymptotic region


def _stat_binary(p0, q, c, game):
    P = np.column_stack([p0, 1.0 - p0]) if np.ndim(p0) else np.array([p0, 1.0 - p0])
    return h_rows(P, q, c) if game == "tr" else kl_rows(P, q)


def min_reachable_statistic(P, query: RegionQuery):
    """Smallest acceptance statistic over pmfs within transport cost ``D`` of ``P``.

    Returns ``(value, P_prime, diagnostics)``.  Binary alphabets are exact:
    the reachable set is an interval in ``P(0)`` and the statistic is
    convex with its minimum at ``Q``, so the optimum is the projection of
    ``Q(0)`` onto that interval.
    """
    p = as_pmf(P, size=query.distortion.alphabet_size, name="P")
    cost, D = query.distortion.cost, query.distortion.budget
    if len(p) == 2:
        lo = 0.0 if cost[0, 1] == 0 else max(0.0, p[0] - D / cost[0, 1])
        hi = 1.0 if cost[1, 0] == 0 else min(1.0, p[0] + D / cost[1, 0])
        p0 = min(max(query.Q[0], lo), hi)
        Pp = np.array([p0, 1.0 - p0])
        diag = {"method": "exact-binary", "iterations": 0}
    else:
        Pp, diag = _convex.min_statistic_in_ball(p, query.Q, cost, D, query.c, query.game)
    value = float(h_rows(Pp, query.Q, query.c) if query.game == "tr" else kl_rows(Pp, query.Q))
    return value, Pp, diag


def in_gamma_infinity(P, query: RegionQuery) -> bool:
    """Membership in the closed asymptotic region (boundary points within 1e-7 count as members)."""
    value, _, _ = min_reachable_statistic(P, query)
    return value < query.lam + BOUNDARY_TOL


def acceptance_interval(Q, lam, c, game):
    """``{p : stat((p, 1-p), Q) <= lam}`` for a binary ``Q``, as ``(lo, hi)``."""
    q = as_pmf(Q, size=2, name="Q")

    def f(p0):
        return float(_stat_binary(p0, q, c, game)) - lam

    q0 = q[0]
    lo = 0.0 if f(0.0) <= 0 else brentq(f, 0.0, q0, xtol=BISECTION_TOL * 1e-3, rtol=1e-15)
    hi = 1.0 if f(1.0) <= 0 else brentq(f, q0, 1.0, xtol=BISECTION_TOL * 1e-3, rtol=1e-15)
    return lo, hi


def binary_region_interval(query: RegionQuery):
    """Endpoints of ``Gamma^inf`` in ``P(0)`` for a binary alphabet (to 1e-9)."""
    if query.distortion.alphabet_size != 2:
        raise AlphabetMismatchError("interval form only exists for binary alphabets")
    a, b = acceptance_interval(query.Q, query.lam, query.c, query.game)
    cost, D = query.distortion.cost, query.distortion.budget
    lo = 0.0 if cost[1, 0] == 0 else max(0.0, a - D / cost[1, 0])
    hi = 1.0 if cost[0, 1] == 0 else min(1.0, b + D / cost[0, 1])
    return lo, hi


# ---------------------------------------------------------------------------
# grids


@dataclass
class RegionGrid:
    """Both-game membership over a regular grid on the simplex."""

    resolution: int
    points: np.ndarray
    ks_member: np.ndarray
    tr_member: np.ndarray
    query: RegionQuery = field(repr=False)

    def __post_init__(self):
        bad = self.ks_member & ~self.tr_member
        assert not bad.any(), f"{bad.sum()} grid points lie in the known-source region only"

    @property
    def labels(self):
        return np.where(
            self.tr_member, np.where(self.ks_member, "both", "tr_only"), "neither"
        )

    def counts(self):
        labels = self.labels
        return {name: int((labels == name).sum()) for name in ("both", "tr_only", "neither")} | {
            "ks_only": int((self.ks_member & ~self.tr_member).sum())
        }

    def to_csv(self, fh=None):
        """Write ``p0..p{k-1},ks_member,tr_member`` rows; returns the text if ``fh`` is None."""
        out = io.StringIO() if fh is None else fh
        writer = csv.writer(out, lineterminator="\n")
        k = self.points.shape[1]
        writer.writerow([f"p{i}" for i in range(k)] + ["ks_member", "tr_member"])
        for row, ks, tr in zip(self.points, self.ks_member, self.tr_member):
            writer.writerow([repr(float(v)) for v in row] + [int(ks), int(tr)])
        return out.getvalue() if fh is None else None


def simplex_grid(k: int, resolution: int) -> np.ndarray:
    if k not in (2, 3):
        raise AlphabetMismatchError("grids are only supported for alphabets of size 2 or 3")
    return type_count_matrix(resolution, k) / resolution


def region_grid(query: RegionQuery, resolution: int, n_jobs: int = 1) -> RegionGrid:
    """Evaluate asymptotic membership for both games on every grid point."""
    if resolution < 1:
        raise ValueError("resolution must be positive")
    points = simplex_grid(query.distortion.alphabet_size, resolution)
    ks_q, tr_q = query.for_game("ks"), query.for_game("tr")

    def member(p):
        return in_gamma_infinity(p, ks_q), in_gamma_infinity(p, tr_q)

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            flags = list(pool.map(member, points))
    else:
        flags = [member(p) for p in points]
    flags = np.asarray(flags, dtype=bool).reshape(len(points), 2)
    return RegionGrid(resolution, points, flags[:, 0], flags[:, 1], query)


# ---------------------------------------------------------------------------
# convergence of the finite-n sets


@dataclass
class ConvergenceReport:
    n_values: list
    distances: list
    nearest: list
    tolerance: float = 0.02

    @property
    def converged(self) -> bool:
        d = self.distances
        return bool(d) and d[-1] < self.tolerance and d[-1] <= d[0]


def gamma_n_convergence_probe(P_star, Q_seq, config_template: GameConfig, n_schedule, game="tr", tolerance=0.02):
    """Distance from ``P_star`` to the nearest member of ``Gamma^n(Q_n)`` along a schedule.

    ``Q_seq[i]`` is the conditioning pmf used at ``n_schedule[i]``.
    """
    p = as_pmf(P_star, size=config_template.alphabet_size, name="P_star")
    if len(Q_seq) != len(n_schedule):
        raise ValueError("Q_seq and n_schedule must have the same length")
    dists, nearest = [], []
    for n, Q in zip(n_schedule, Q_seq):
        types, mask = gamma_n_mask(Q, config_template.with_n(n), game)
        if not mask.any():
            dists.append(math.inf)
            nearest.append(None)
            continue
        members = types[mask] / n
        l1 = np.abs(members - p).sum(axis=1)
        j = int(np.argmin(l1))
        dists.append(float(l1[j]))
        nearest.append(tuple(int(v) for v in types[mask][j]))
    return ConvergenceReport(list(n_schedule), dists, nearest, tolerance)
