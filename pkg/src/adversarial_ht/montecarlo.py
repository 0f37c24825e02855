"""Monte Carlo simulation of the games and exact false-negative probabilities.

Every trial draws from its own counter-based stream keyed by
``(seed, n, trial)``, so results do not depend on how trials are split
across threads.  Within a trial the draws happen in a fixed order: the
defender's training sequence, the attacked sequence, the H0 test
sequence, and finally the attacker's own training sequence (version a
only).  Forcing the attacker to reuse the defender's training sequence
therefore leaves every other draw unchanged.
"""

from __future__ import annotations

import csv
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
from scipy.special import logsumexp

from .core import DEFAULT_ENUMERATION_CAP, LN2, EmpiricalType, as_pmf, num_types, type_count_matrix
from .core import log2_type_class_prob_rows
from .exceptions import EnumerationTooLargeError
from .regions import gamma_n_mask
from .strategies import (
    GAMES,
    GameConfig,
    acceptance_statistic,
    best_reachable_type,
    quantize_training_estimate,
    threshold,
)

VERSIONS = ("c", "a")
# exact version-a enumeration is cubic in the type counts
VERSION_A_EXACT_MAX = 60
CHUNK = 2048


def trial_stream(seed: int, n: int, trial: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(np.random.SeedSequence([int(seed), int(n), int(trial)])))


def _cdf(p):
    cdf = np.cumsum(p)
    cdf[-1] = 1.0
    return cdf


def _draw(cdf, n, stream):
    return np.searchsorted(cdf, stream.random(int(n)), side="right").astype(np.int64)


def sample_sequence(P, n: int, stream: np.random.Generator) -> np.ndarray:
    """``n`` i.i.d. draws from ``P`` by inversion of the cumulative distribution."""
    return _draw(_cdf(as_pmf(P, name="P")), n, stream)


@dataclass(frozen=True)
class SimulationSpec:
    config: GameConfig
    P_X: np.ndarray
    P_Y: np.ndarray
    trials: int
    seed: int
    game_version: str = "c"
    n_schedule: tuple = ()
    game: str = "tr"
    force_shared_training: bool = False

    def __post_init__(self):
        k = self.config.alphabet_size
        object.__setattr__(self, "P_X", as_pmf(self.P_X, size=k, name="P_X"))
        object.__setattr__(self, "P_Y", as_pmf(self.P_Y, size=k, name="P_Y"))
        if int(self.trials) < 1:
            raise ValueError("trials must be >= 1")
        if not (0 <= int(self.seed) < 2**64):
            raise ValueError("seed must be an unsigned 64-bit integer")
        if self.game_version not in VERSIONS:
            raise ValueError(f"game_version must be one of {VERSIONS}")
        if self.game not in GAMES:
            raise ValueError(f"game must be one of {GAMES}")
        if self.game == "ks" and self.game_version != "c":
            raise ValueError("version a only exists for the training game")
        sched = tuple(int(v) for v in self.n_schedule)
        if any(b <= a for a, b in zip(sched, sched[1:])):
            raise ValueError("n_schedule must be strictly increasing")
        object.__setattr__(self, "n_schedule", sched)
        object.__setattr__(self, "trials", int(self.trials))
        object.__setattr__(self, "seed", int(self.seed))

    def with_n(self, n):
        return replace(self, config=self.config.with_n(n))

    def to_dict(self):
        return {
            "config": self.config.to_dict(),
            "P_X": self.P_X.tolist(),
            "P_Y": self.P_Y.tolist(),
            "trials": self.trials,
            "seed": self.seed,
            "game_version": self.game_version,
            "n_schedule": list(self.n_schedule),
            "game": self.game,
            "force_shared_training": self.force_shared_training,
        }


def _se(p, trials):
    return math.sqrt(p * (1.0 - p) / trials)


@dataclass
class SimulationReport:
    n: int
    trials: int
    fn_count: int
    fp_count: int
    outcomes: np.ndarray = field(repr=False)
    empirical_exponents: list = field(default_factory=list)
    theory_exponent: Optional[float] = None
    notes: list = field(default_factory=list)

    @property
    def p_fn_hat(self):
        return self.fn_count / self.trials

    @property
    def p_fp_hat(self):
        return self.fp_count / self.trials

    @property
    def p_fn_se(self):
        return _se(self.p_fn_hat, self.trials)

    @property
    def p_fp_se(self):
        return _se(self.p_fp_hat, self.trials)

    def to_dict(self):
        return {
            "n": self.n,
            "trials": self.trials,
            "p_fn_hat": self.p_fn_hat,
            "p_fn_se": self.p_fn_se,
            "p_fp_hat": self.p_fp_hat,
            "p_fp_se": self.p_fp_se,
            "empirical_exponents": self.empirical_exponents,
            "theory_exponent": self.theory_exponent,
            "notes": self.notes,
        }


class _AttackCache:
    """Optimal attack output per (attacked type, target) pair; results are pure, so sharing is safe."""

    def __init__(self, config, game):
        self.config, self.game = config, game
        self.table = {}
        self.verdicts = {}

    def accepts(self, counts, ref_key, ref):
        key = (counts, ref_key)
        hit = self.verdicts.get(key)
        if hit is None:
            g = self.config
            stat = acceptance_statistic(np.asarray(counts, dtype=float)[None, :] / g.n, ref, g, self.game)[0]
            hit = self.verdicts[key] = bool(stat < threshold(g, self.game))
        return hit

    def __call__(self, y_counts, target_key, target_pmf):
        key = (y_counts, target_key)
        hit = self.table.get(key)
        if hit is None:
            counts, _ = best_reachable_type(EmpiricalType(y_counts, self.config.n), target_pmf, self.config, self.game)
            hit = self.table[key] = tuple(int(v) for v in counts)
        return hit


def _counts(seq, k):
    return tuple(int(v) for v in np.bincount(seq, minlength=k))


def _run_trial(spec: SimulationSpec, trial: int, cache: _AttackCache, cdf_x, cdf_y):
    g = spec.config
    k, n = g.alphabet_size, g.n
    rng = trial_stream(spec.seed, n, trial)
    t_D = _counts(_draw(cdf_x, g.N, rng), k) if spec.game == "tr" else None
    y = _counts(_draw(cdf_y, n, rng), k)
    x = _counts(_draw(cdf_x, n, rng), k)
    ref = np.asarray(t_D, dtype=float) / g.N if spec.game == "tr" else spec.P_X

    if spec.game == "ks":
        z = cache(y, None, spec.P_X)
    elif spec.game_version == "c":
        z = cache(y, t_D, ref)
    else:
        if spec.force_shared_training:
            target = EmpiricalType(t_D, g.N)
        else:
            t_A = EmpiricalType(_counts(_draw(cdf_x, g.K, rng), k), g.K)
            target = t_A if g.K == g.N else quantize_training_estimate(t_A, g.N)
        z = cache(y, target.counts, target.pmf)

    fn = cache.accepts(z, t_D, ref)
    fp = not cache.accepts(x, t_D, ref)
    return fn, fp, y, z, t_D


def simulate_game(spec: SimulationSpec, n_jobs: int = 1, trace_path=None, theory=True) -> SimulationReport:
    """Run ``spec.trials`` independent games at ``spec.config.n``.

    ``outcomes`` holds one row per trial: ``(false_negative, false_positive)``.
    With ``trace_path`` every trial is also written to a CSV file.
    """
    cache = _AttackCache(spec.config, spec.game)
    cdf_x, cdf_y = _cdf(spec.P_X), _cdf(spec.P_Y)
    starts = range(0, spec.trials, CHUNK)

    def chunk(lo):
        return [_run_trial(spec, t, cache, cdf_x, cdf_y) for t in range(lo, min(lo + CHUNK, spec.trials))]

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            parts = list(pool.map(chunk, starts))
    else:
        parts = [chunk(lo) for lo in starts]
    rows = [r for part in parts for r in part]
    outcomes = np.array([(r[0], r[1]) for r in rows], dtype=bool).reshape(-1, 2)
    if trace_path is not None:
        with open(trace_path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["trial", "t_D", "y", "z", "false_negative", "false_positive"])
            for i, (fn, fp, y, z, t_D) in enumerate(rows):
                w.writerow([i, " ".join(map(str, t_D or ())), " ".join(map(str, y)), " ".join(map(str, z)), int(fn), int(fp)])
    report = SimulationReport(
        spec.config.n, spec.trials, int(outcomes[:, 0].sum()), int(outcomes[:, 1].sum()), outcomes
    )
    if theory:
        report.theory_exponent = theory_exponent(spec)
    if spec.n_schedule:
        emp = empirical_exponent(spec, n_jobs=n_jobs)
        report.empirical_exponents = [[p["n"], p["exponent"]] for p in emp.points]
        report.notes += emp.notes
    return report


def theory_exponent(spec: SimulationSpec) -> float:
    from .exponents import epsilon_ks, epsilon_tr, epsilon_tr_a_bounds

    g = spec.config
    if spec.game == "ks":
        return epsilon_ks(spec.P_X, spec.P_Y, g.lam, g.distortion).value
    if spec.game_version == "a" and not spec.force_shared_training:
        # only the upper end of the sandwich is a statement about the attacker's weakness
        return epsilon_tr_a_bounds(spec.P_X, spec.P_Y, g.lam, g.distortion, g.c, g.d_ratio).upper
    return epsilon_tr(spec.P_X, spec.P_Y, g.lam, g.distortion, g.c).value


# ---------------------------------------------------------------------------
# exact probabilities by type enumeration


def _check_product(config, cap, game):
    size = num_types(config.n, config.alphabet_size)
    if game == "tr":
        size *= num_types(config.N, config.alphabet_size)
    if size > cap:
        raise EnumerationTooLargeError(size, cap, "type pairs")


def _log_sum_bits(values):
    values = np.asarray(values, dtype=float)
    if values.size == 0 or np.all(np.isneginf(values)):
        return -math.inf
    return float(logsumexp(values * LN2) / LN2)


def exact_log2_pfn(config: GameConfig, P_X, P_Y, game: str = "tr", cap=DEFAULT_ENUMERATION_CAP, n_jobs: int = 1):
    """``log2`` of the exact version-c false-negative probability under the optimal attack."""
    k = config.alphabet_size
    P_X = as_pmf(P_X, size=k, name="P_X")
    P_Y = as_pmf(P_Y, size=k, name="P_Y")
    _check_product(config, cap, game)
    y_types = type_count_matrix(config.n, k, cap)
    log_py = log2_type_class_prob_rows(y_types, P_Y)
    if game == "ks":
        _, mask = gamma_n_mask(P_X, config, "ks", cap)
        return _log_sum_bits(log_py[mask])
    t_types = type_count_matrix(config.N, k, cap)
    log_px = log2_type_class_prob_rows(t_types, P_X)

    def term(i):
        if np.isneginf(log_px[i]):
            return -math.inf
        _, mask = gamma_n_mask(t_types[i] / config.N, config, "tr", cap)
        return log_px[i] + _log_sum_bits(log_py[mask])

    if n_jobs > 1:
        with ThreadPoolExecutor(max_workers=n_jobs) as pool:
            terms = list(pool.map(term, range(len(t_types))))
    else:
        terms = [term(i) for i in range(len(t_types))]
    return min(_log_sum_bits(terms), 0.0)


def exact_pfn(config: GameConfig, P_X, P_Y, game: str = "tr", cap=DEFAULT_ENUMERATION_CAP, n_jobs: int = 1) -> float:
    return 2.0 ** exact_log2_pfn(config, P_X, P_Y, game, cap, n_jobs)


def exact_log2_pfp(config: GameConfig, P_X, game: str = "tr", cap=DEFAULT_ENUMERATION_CAP) -> float:
    """``log2`` of the exact false-positive probability (no attack under H0)."""
    k = config.alphabet_size
    P_X = as_pmf(P_X, size=k, name="P_X")
    _check_product(config, cap, game)
    x_types = type_count_matrix(config.n, k, cap)
    log_x = log2_type_class_prob_rows(x_types, P_X)
    thr = threshold(config, game)
    if game == "ks":
        reject = acceptance_statistic(x_types / config.n, P_X, config, "ks") >= thr
        return _log_sum_bits(log_x[reject])
    t_types = type_count_matrix(config.N, k, cap)
    log_t = log2_type_class_prob_rows(t_types, P_X)
    terms = []
    for t, lt in zip(t_types, log_t):
        reject = acceptance_statistic(x_types / config.n, t / config.N, config, "tr") >= thr
        terms.append(lt + _log_sum_bits(log_x[reject]))
    return min(_log_sum_bits(terms), 0.0)


def exact_pfn_version_a(config: GameConfig, P_X, P_Y) -> float:
    """Exact version-a false-negative probability for short binary games.

    Sums over the defender's training type, the attacker's training type
    and the attacked type.  Only lengths up to ``VERSION_A_EXACT_MAX`` are
    accepted.
    """
    if config.alphabet_size != 2:
        raise ValueError("exact version-a probability is only implemented for binary alphabets")
    if max(config.n, config.N, config.K) > VERSION_A_EXACT_MAX:
        raise EnumerationTooLargeError(max(config.n, config.N, config.K), VERSION_A_EXACT_MAX, "sequence length")
    P_X = as_pmf(P_X, size=2, name="P_X")
    P_Y = as_pmf(P_Y, size=2, name="P_Y")
    n, N, K = config.n, config.N, config.K
    y_types, t_types, a_types = (type_count_matrix(m, 2) for m in (n, N, K))
    log_y = log2_type_class_prob_rows(y_types, P_Y)
    log_t = log2_type_class_prob_rows(t_types, P_X)
    log_a = log2_type_class_prob_rows(a_types, P_X)
    z_types = type_count_matrix(n, 2)
    # accepted[z, t]: would the defender with training type t accept output type z
    stats = np.array([acceptance_statistic(z_types / n, t / N, config, "tr") for t in t_types]).T
    accepted = stats < threshold(config, "tr")
    cache = _AttackCache(config, "tr")
    terms = []
    for a_counts, la in zip(a_types, log_a):
        tA = EmpiricalType.from_counts(a_counts)
        target = tA if K == N else quantize_training_estimate(tA, N)
        z0 = np.array([cache(tuple(int(v) for v in y), target.counts, target.pmf)[0] for y in y_types])
        # z is indexed by its count of symbol 0, matching the lexicographic order
        hit = accepted[z0]
        for j, lt in enumerate(log_t):
            terms.append(la + lt + _log_sum_bits(log_y[hit[:, j]]))
    return 2.0 ** min(_log_sum_bits(terms), 0.0)


# ---------------------------------------------------------------------------
# empirical exponents


@dataclass
class ExponentSlopeReport:
    points: list
    slope: float
    intercept: float
    theory_exponent: Optional[float]
    notes: list

    def to_dict(self):
        return {
            "points": self.points,
            "slope": self.slope,
            "intercept": self.intercept,
            "theory_exponent": self.theory_exponent,
            "notes": self.notes,
        }


def empirical_exponent(spec: SimulationSpec, use_exact=True, cap=DEFAULT_ENUMERATION_CAP, n_jobs=1, theory=True):
    """Least-squares slope of ``-log2 P_fn`` against ``n`` over ``spec.n_schedule``.

    Exact enumeration is used wherever it fits under ``cap`` (version c);
    other points fall back to Monte Carlo, and Monte Carlo points with no
    observed false negatives are dropped with a note.
    """
    if len(spec.n_schedule) < 4:
        raise ValueError("n_schedule needs at least 4 points")
    points, notes = [], []
    for n in spec.n_schedule:
        sub = spec.with_n(n)
        log2p, source = None, None
        if use_exact and spec.game_version == "c":
            try:
                log2p = exact_log2_pfn(sub.config, spec.P_X, spec.P_Y, spec.game, cap, n_jobs)
                source = "exact"
            except EnumerationTooLargeError:
                notes.append(f"n={n}: exact enumeration over cap, using Monte Carlo")
        if source is None:
            rep = simulate_game(replace(sub, n_schedule=()), n_jobs=n_jobs, theory=False)
            source = "monte_carlo"
            log2p = math.log2(rep.p_fn_hat) if rep.fn_count else -math.inf
        dropped = not math.isfinite(log2p)
        if dropped:
            notes.append(f"n={n}: P_fn is zero at this length, point dropped")
        points.append({
            "n": n,
            "log2_p_fn": None if dropped else log2p,
            "exponent": None if dropped else -log2p / n,
            "source": source,
            "dropped": dropped,
        })
    kept = [(p["n"], -p["log2_p_fn"]) for p in points if not p["dropped"]]
    if len(kept) >= 2:
        slope, intercept = np.polyfit([a for a, _ in kept], [b for _, b in kept], 1)
        slope, intercept = float(slope), float(intercept)
    else:
        slope = intercept = math.nan
        notes.append("fewer than two usable points; slope undefined")
    th = theory_exponent(spec) if theory else None
    return ExponentSlopeReport(points, slope, intercept, th, notes)
