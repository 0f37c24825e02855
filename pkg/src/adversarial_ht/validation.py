"""Input validation helpers, in the spirit of ``sklearn.utils.validation``."""

import math
from numbers import Real

import numpy as np

from .exceptions import AlphabetMismatchError, InvalidPmfError, InvalidRatioError

PMF_ATOL = 1e-9


def check_pmf(p, size=None, name="pmf"):
    """Return ``p`` as a float64 vector on the probability simplex.

    Vectors whose sum is within ``PMF_ATOL`` of one are renormalised;
    anything further off, or with negative entries, is rejected.
    """
    arr = np.asarray(p, dtype=np.float64)
    if arr.ndim != 1 or arr.size < 2:
        raise InvalidPmfError(f"{name} must be a vector of length >= 2, got shape {arr.shape}")
    if size is not None and arr.size != size:
        raise AlphabetMismatchError(f"{name} has {arr.size} entries, expected {size}")
    if not np.all(np.isfinite(arr)):
        raise InvalidPmfError(f"{name} has non-finite entries")
    if np.any(arr < 0):
        raise InvalidPmfError(f"{name} has negative entries")
    total = arr.sum()
    if abs(total - 1.0) > PMF_ATOL:
        raise InvalidPmfError(f"{name} sums to {total!r}, not 1")
    return arr / total


def check_same_alphabet(*arrays):
    sizes = {len(a) for a in arrays}
    if len(sizes) != 1:
        raise AlphabetMismatchError(f"alphabet sizes differ: {sorted(sizes)}")
    return sizes.pop()


def check_ratio(c, name="c"):
    if isinstance(c, bool) or not isinstance(c, Real):
        raise InvalidRatioError(f"{name} must be a real number, got {c!r}")
    c = float(c)
    if not math.isfinite(c) or c <= 0:
        raise InvalidRatioError(f"{name} must be positive and finite, got {c!r}")
    return c


def check_sequence(x, alphabet_size=None, name="sequence"):
    """Validate a 1-D sequence of symbol indices and return it as an int64 array."""
    arr = np.asarray(x)
    if arr.ndim != 1 or arr.size == 0:
        raise ValueError(f"{name} must be a non-empty 1-D array of symbols")
    if not np.issubdtype(arr.dtype, np.integer):
        if not np.all(np.equal(np.mod(arr, 1), 0)):
            raise ValueError(f"{name} must contain integer symbols")
    arr = arr.astype(np.int64)
    if arr.min() < 0:
        raise ValueError(f"{name} contains negative symbols")
    if alphabet_size is not None and arr.max() >= alphabet_size:
        raise AlphabetMismatchError(
            f"{name} contains symbol {arr.max()} outside an alphabet of size {alphabet_size}"
        )
    return arr


def check_sequences(X, alphabet_size=None, name="X"):
    """2-D variant of :func:`check_sequence`: one sequence per row."""
    arr = np.asarray(X)
    if arr.ndim == 1:
        arr = arr[np.newaxis, :]
    if arr.ndim != 2 or arr.shape[1] == 0:
        raise ValueError(f"{name} must be 2-D with one sequence per row")
    checked = check_sequence(arr.ravel(), alphabet_size, name)
    return checked.reshape(arr.shape)
