"""scikit-learn style wrappers around the defender and the attacker.

Rows of ``X`` are test sequences of symbol indices.  Detectors are fitted
on what the defender knows (a training sequence, or the source pmf) and
``predict`` returns 1 when H0 is rejected.  The attacker is a transformer
that rewrites each row within the distortion budget.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .core import EmpiricalType, as_pmf, h_rows, kl_rows
from .strategies import GameConfig, best_reachable_type, quantize_training_estimate, threshold
from .transport import DistortionSpec, min_transport_cost


def _sequences(X, alphabet_size):
    X = check_array(X, dtype=np.int64, ensure_2d=True)
    if X.min() < 0 or X.max() >= alphabet_size:
        raise ValueError(f"symbols must lie in 0..{alphabet_size - 1}")
    return X


def _training_sequence(t, alphabet_size):
    t = check_array(np.asarray(t).reshape(1, -1), dtype=np.int64)[0]
    if t.min() < 0 or t.max() >= alphabet_size:
        raise ValueError(f"symbols must lie in 0..{alphabet_size - 1}")
    return t


def _counts(X, k):
    return np.stack([np.bincount(row, minlength=k) for row in X])


class _Detector(BaseEstimator):
    def _config(self, k, n, N=None):
        c = 1.0 if N is None else N / n
        return GameConfig(k, n, self.lam, DistortionSpec.hamming(k, 0.0), c=c, threshold_mode=self.threshold_mode)

    def predict(self, X):
        """1 where H0 is rejected, 0 where it is accepted."""
        return (self.decision_function(X) >= 0).astype(int)


class TrainingDataDetector(_Detector):
    """Defender of the training game: compare each test type with the training type.

    Parameters
    ----------
    alphabet_size : int
    lam : float
        False-positive exponent in bits.
    threshold_mode : {"finite_n", "asymptotic"}
    """

    def __init__(self, alphabet_size=2, lam=0.1, threshold_mode="finite_n"):
        self.alphabet_size = alphabet_size
        self.lam = lam
        self.threshold_mode = threshold_mode

    def fit(self, X, y=None):
        """``X`` is the defender's training sequence."""
        t = _training_sequence(X, self.alphabet_size)
        self.training_type_ = EmpiricalType.from_sequence(t, self.alphabet_size)
        self.n_training_ = len(t)
        return self

    def decision_function(self, X):
        """``h_c(P_x, P_t)`` minus the threshold; rejection where this is ``>= 0``."""
        check_is_fitted(self, "training_type_")
        X = _sequences(X, self.alphabet_size)
        cfg = self._config(self.alphabet_size, X.shape[1], self.n_training_)
        stats = h_rows(_counts(X, self.alphabet_size) / X.shape[1], self.training_type_.pmf, cfg.c)
        return stats - threshold(cfg, "tr")


class KnownSourceDetector(_Detector):
    """Defender of the known-source game: compare each test type with ``P_X``."""

    def __init__(self, P_X=None, lam=0.1, threshold_mode="finite_n"):
        self.P_X = P_X
        self.lam = lam
        self.threshold_mode = threshold_mode

    def fit(self, X=None, y=None):
        self.P_X_ = as_pmf(self.P_X, name="P_X")
        return self

    def decision_function(self, X):
        check_is_fitted(self, "P_X_")
        X = _sequences(X, len(self.P_X_))
        cfg = self._config(len(self.P_X_), X.shape[1])
        stats = kl_rows(_counts(X, len(self.P_X_)) / X.shape[1], self.P_X_)
        return stats - threshold(cfg, "ks")


class OptimalAttacker(TransformerMixin, BaseEstimator):
    """Rewrite sequences so their types move as close as possible to the defender's region.

    Parameters
    ----------
    cost : array of shape (k, k)
        Per-symbol substitution cost.
    budget : float
        Per-letter distortion budget ``D``.
    game : {"tr", "ks"}
    defender_training_length : int or None
        Length ``N`` of the defender's training sequence.  When it differs
        from the length of the fitted training sequence the attacker plays
        version a and quantises its estimate to denominator ``N``.
    """

    def __init__(self, cost=None, budget=0.0, game="tr", defender_training_length=None):
        self.cost = cost
        self.budget = budget
        self.game = game
        self.defender_training_length = defender_training_length

    def fit(self, X, y=None):
        """``X`` is the attacker's training sequence (tr) or ``P_X`` itself (ks)."""
        self.distortion_ = DistortionSpec(self.cost, self.budget)
        k = self.distortion_.alphabet_size
        if self.game == "ks":
            self.target_ = as_pmf(X, size=k, name="P_X")
            self.N_ = None
            return self
        t = _training_sequence(X, k)
        t_type = EmpiricalType.from_sequence(t, k)
        N = self.defender_training_length or len(t)
        self.N_ = int(N)
        self.target_ = (t_type if N == len(t) else quantize_training_estimate(t_type, N)).pmf
        return self

    def _attack(self, row):
        k = self.distortion_.alphabet_size
        n = len(row)
        c = 1.0 if self.N_ is None else self.N_ / n
        cfg = GameConfig(k, n, 1.0, self.distortion_, c=c, threshold_mode="asymptotic")
        y = EmpiricalType.from_sequence(row, k)
        counts, _ = best_reachable_type(y, self.target_, cfg, self.game)
        _, plan = min_transport_cost(y, EmpiricalType.from_counts(counts), self.distortion_)
        return plan.apply(row)

    def transform(self, X):
        check_is_fitted(self, "target_")
        X = _sequences(X, self.distortion_.alphabet_size)
        return np.stack([self._attack(row) for row in X])
