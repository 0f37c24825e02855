"""Empirical types, KL divergence and the generalized log-likelihood ratio.

All information quantities are in bits.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterator, Union

import numpy as np
from scipy.special import gammaln

from .exceptions import (
    AlphabetMismatchError,
    EnumerationTooLargeError,
    InvalidRatioError,
)
from .validation import check_pmf, check_ratio, check_same_alphabet, check_sequence

LN2 = math.log(2.0)
DEFAULT_ENUMERATION_CAP = 10**7


@dataclass(frozen=True)
class EmpiricalType:
    """Symbol counts of a length-``n`` sequence.

    Attributes
    ----------
    counts : tuple of int
        Number of occurrences of each symbol ``0..k-1``.
    n : int
        Sequence length; must equal ``sum(counts)``.
    """

    counts: tuple
    n: int

    def __post_init__(self):
        counts = tuple(int(c) for c in self.counts)
        if len(counts) < 2:
            raise ValueError("an empirical type needs an alphabet of size >= 2")
        if any(c < 0 for c in counts):
            raise ValueError(f"negative count in {counts}")
        if int(self.n) <= 0 or sum(counts) != int(self.n):
            raise ValueError(f"counts {counts} do not sum to length {self.n}")
        object.__setattr__(self, "counts", counts)
        object.__setattr__(self, "n", int(self.n))

    @classmethod
    def from_counts(cls, counts) -> "EmpiricalType":
        counts = tuple(int(c) for c in counts)
        return cls(counts, sum(counts))

    @classmethod
    def from_sequence(cls, seq, alphabet_size: int) -> "EmpiricalType":
        arr = check_sequence(seq, alphabet_size)
        return cls.from_counts(np.bincount(arr, minlength=alphabet_size))

    @property
    def alphabet_size(self) -> int:
        return len(self.counts)

    @property
    def pmf(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.float64) / self.n

    def as_array(self) -> np.ndarray:
        return np.asarray(self.counts, dtype=np.int64)


PmfLike = Union[np.ndarray, list, tuple, EmpiricalType]


def as_pmf(p: PmfLike, size=None, name="pmf") -> np.ndarray:
    if isinstance(p, EmpiricalType):
        if size is not None and p.alphabet_size != size:
            raise AlphabetMismatchError(f"{name} has {p.alphabet_size} symbols, expected {size}")
        return p.pmf
    return check_pmf(p, size, name)


@dataclass(frozen=True)
class HStatistic:
    """Value of ``h_c(P, Q)`` together with the mixture it was computed against."""

    value: float
    mixture: np.ndarray
    c: float

    def __float__(self):
        return self.value


# ---------------------------------------------------------------------------
# divergences


def kl_rows(P, Q) -> np.ndarray:
    """Row-wise ``D(P_i || Q_i)`` in bits with the ``0 log 0 = 0`` convention.

    ``P`` and ``Q`` broadcast against each other along the last axis.
    """
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    P, Q = np.broadcast_arrays(P, Q)
    pos = P > 0
    with np.errstate(divide="ignore", invalid="ignore"):
        terms = np.where(pos, P * (np.log(np.where(pos, P, 1.0)) - np.log(Q)), 0.0)
    return terms.sum(axis=-1) / LN2


def kl_divergence(P: PmfLike, Q: PmfLike) -> float:
    """``D(P || Q)`` in bits; ``inf`` when P puts mass where Q has none."""
    p = as_pmf(P, name="P")
    q = as_pmf(Q, name="Q")
    check_same_alphabet(p, q)
    return float(kl_rows(p, q))


def h_rows(P, Q, c: float) -> np.ndarray:
    """Vectorised ``h_c(P_i, Q_i)`` for already-validated arrays."""
    P = np.asarray(P, dtype=np.float64)
    Q = np.asarray(Q, dtype=np.float64)
    U = (P + c * Q) / (1.0 + c)
    value = kl_rows(P, U) + c * kl_rows(Q, U)
    # rounding can leave tiny negatives when P is numerically equal to Q
    return np.maximum(value, 0.0)


def _pmf_and_length(p, name):
    if isinstance(p, EmpiricalType):
        return p.pmf, p.n
    return check_pmf(p, name=name), None


def h_statistic(P: PmfLike, Q: PmfLike, c: float) -> HStatistic:
    """Generalized log-likelihood ratio ``D(P||U) + c D(Q||U)``.

    ``U = P/(1+c) + cQ/(1+c)`` is the empirical pmf of the concatenation
    when ``P`` and ``Q`` are types of lengths ``n`` and ``N = cn``.  When
    both arguments are :class:`EmpiricalType`, ``c`` must equal ``N/n``.
    """
    c = check_ratio(c)
    p, n = _pmf_and_length(P, "P")
    q, N = _pmf_and_length(Q, "Q")
    check_same_alphabet(p, q)
    if n is not None and N is not None and abs(c - N / n) > 1e-12 * max(1.0, c):
        raise InvalidRatioError(f"c={c} does not match N/n = {N}/{n}")
    U = (p + c * q) / (1.0 + c)
    return HStatistic(float(h_rows(p, q, c)), U, c)


def h_alternative_form(P: PmfLike, Q: PmfLike, c: float) -> float:
    """``D(P||Q) - (1+c) D(U||Q)``; equals :func:`h_statistic` when D(P||Q) is finite.

    Returns ``nan`` when ``D(P||Q)`` is infinite (the difference is undefined).
    """
    c = check_ratio(c)
    p = as_pmf(P, name="P")
    q = as_pmf(Q, name="Q")
    check_same_alphabet(p, q)
    d_pq = float(kl_rows(p, q))
    if math.isinf(d_pq):
        return math.nan
    U = (p + c * q) / (1.0 + c)
    return d_pq - (1.0 + c) * float(kl_rows(U, q))


def concat_type(x: EmpiricalType, t: EmpiricalType) -> EmpiricalType:
    """Type of the sequence obtained by appending ``t`` to ``x``."""
    if x.alphabet_size != t.alphabet_size:
        raise AlphabetMismatchError("cannot concatenate types over different alphabets")
    return EmpiricalType(tuple(a + b for a, b in zip(x.counts, t.counts)), x.n + t.n)


# ---------------------------------------------------------------------------
# types with a given denominator


def num_types(n: int, alphabet_size: int) -> int:
    return math.comb(n + alphabet_size - 1, alphabet_size - 1)


def _check_cap(n, alphabet_size, cap):
    size = num_types(n, alphabet_size)
    if size > cap:
        raise EnumerationTooLargeError(size, cap)
    return size


def _compositions(n, k):
    if k == 1:
        yield (n,)
        return
    for first in range(n + 1):
        for rest in _compositions(n - first, k - 1):
            yield (first,) + rest


def enumerate_types(
    n: int, alphabet_size: int, cap: int = DEFAULT_ENUMERATION_CAP
) -> Iterator[EmpiricalType]:
    """Yield every type with denominator ``n``, in lexicographic order of counts."""
    if n <= 0 or alphabet_size < 2:
        raise ValueError("need n >= 1 and alphabet_size >= 2")
    _check_cap(n, alphabet_size, cap)
    for counts in _compositions(n, alphabet_size):
        yield EmpiricalType(counts, n)


def type_count_matrix(n: int, alphabet_size: int, cap: int = DEFAULT_ENUMERATION_CAP) -> np.ndarray:
    """All types with denominator ``n`` as a ``(num_types, k)`` count array, lexicographic rows."""
    size = _check_cap(n, alphabet_size, cap)
    if alphabet_size == 2:
        a = np.arange(n + 1, dtype=np.int64)
        return np.column_stack([a, n - a])
    out = np.fromiter(
        (c for counts in _compositions(n, alphabet_size) for c in counts),
        dtype=np.int64,
        count=size * alphabet_size,
    )
    return out.reshape(size, alphabet_size)


def log2_type_class_prob_rows(counts, P) -> np.ndarray:
    """Row-wise log2 probability of each type class in ``counts`` under ``P``."""
    counts = np.asarray(counts, dtype=np.float64)
    P = np.asarray(P, dtype=np.float64)
    n = counts.sum(axis=-1)
    log_coef = gammaln(n + 1) - gammaln(counts + 1).sum(axis=-1)
    with np.errstate(divide="ignore", invalid="ignore"):
        logp = np.where(counts > 0, counts * np.log(np.where(P > 0, P, 1.0)), 0.0)
        impossible = np.any((counts > 0) & (P <= 0), axis=-1)
    total = (log_coef + logp.sum(axis=-1)) / LN2
    return np.where(impossible, -np.inf, total)


def type_class_log_prob(T: EmpiricalType, P: PmfLike) -> float:
    """log2 of the probability that an i.i.d. ``P`` sequence of length ``T.n`` has type ``T``."""
    p = as_pmf(P, size=T.alphabet_size, name="P")
    return float(log2_type_class_prob_rows(T.as_array(), p))
