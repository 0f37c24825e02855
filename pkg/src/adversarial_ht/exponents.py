"""False-negative error exponents at the equilibrium of both games.

All values are in bits.  Binary alphabets are reduced to one-dimensional
problems that are solved essentially exactly: the indistinguishability
region is an interval in ``P(0)``, so the inner minimisation of
``D(P||P_Y)`` is a projection, and the remaining outer problem over ``Q``
is convex.  Larger alphabets go through one joint convex program.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import minimize_scalar

from . import _convex
from .core import as_pmf, kl_divergence
from .regions import RegionQuery, binary_region_interval, in_gamma_infinity
from .transport import DistortionSpec
from .validation import check_ratio

# outer grid for the binary training-game exponent before local refinement
OUTER_GRID_POINTS = 401
REPORT_DIGITS = 6


def _sig(x, digits=REPORT_DIGITS):
    return float(f"{x:.{digits}g}") if math.isfinite(x) else x


@dataclass
class ExponentResult:
    value: float
    minimizer_Q: np.ndarray
    minimizer_P: np.ndarray
    diagnostics: dict = field(default_factory=dict)
    inputs: dict = field(default_factory=dict)

    def to_dict(self):
        return {
            "inputs": self.inputs,
            "value": _sig(self.value),
            "minimizer_Q": None if self.minimizer_Q is None else self.minimizer_Q.tolist(),
            "minimizer_P": self.minimizer_P.tolist(),
            "diagnostics": self.diagnostics,
        }


@dataclass
class VersionABounds:
    """Sandwich on the version-a exponent; no point value is claimed in between."""

    lower: float
    upper: float
    lower_is_relaxed: bool
    lower_result: ExponentResult = field(repr=False)
    upper_result: ExponentResult = field(repr=False)

    def to_dict(self):
        return {
            "lower": _sig(self.lower),
            "upper": _sig(self.upper),
            "lower_is_relaxed": self.lower_is_relaxed,
            "lower_detail": self.lower_result.to_dict(),
            "upper_detail": self.upper_result.to_dict(),
        }


def _prepare(P_X, P_Y, lam, distortion):
    k = distortion.alphabet_size
    P_X = as_pmf(P_X, size=k, name="P_X")
    P_Y = as_pmf(P_Y, size=k, name="P_Y")
    if not (math.isfinite(lam) and lam > 0):
        raise ValueError("lam must be positive and finite")
    return P_X, P_Y, float(lam)


def _inputs(P_X, P_Y, lam, distortion, c=None, **extra):
    out = {"P_X": P_X.tolist(), "P_Y": P_Y.tolist(), "lam": lam, "distortion": distortion.to_dict()}
    if c is not None:
        out["c"] = c
    return out | extra


def _project_binary(P_Y, lo, hi):
    p0 = min(max(P_Y[0], lo), hi)
    P = np.array([p0, 1.0 - p0])
    return P, kl_divergence(P, P_Y)


def epsilon_ks(P_X, P_Y, lam, distortion: DistortionSpec) -> ExponentResult:
    """Smallest ``D(P||P_Y)`` over the known-source indistinguishability region of ``P_X``."""
    P_X, P_Y, lam = _prepare(P_X, P_Y, lam, distortion)
    inputs = _inputs(P_X, P_Y, lam, distortion, game="ks")
    query = RegionQuery(P_X, lam, distortion, 1.0, "ks")
    if in_gamma_infinity(P_Y, query):
        return ExponentResult(0.0, None, P_Y.copy(), {"method": "inside-region"}, inputs)
    if len(P_X) == 2:
        lo, hi = binary_region_interval(query)
        P, value = _project_binary(P_Y, lo, hi)
        return ExponentResult(value, None, P, {"method": "exact-binary", "interval": [float(lo), float(hi)]}, inputs)
    _, P, _, diag = _convex.min_exponent(
        P_X, P_Y, lam, distortion.cost, distortion.budget, 1.0, "ks", 0.0
    )
    value = kl_divergence(P, P_Y)
    diag["method"] = "convex"
    diag["gap"] = abs(value - diag["objective_bits"])
    return ExponentResult(value, None, P, diag, inputs)


def _binary_tr(P_X, P_Y, lam, distortion, c, weight):
    """Outer minimisation over ``Q(0)``; the objective is convex in ``Q(0)``."""
    support = np.flatnonzero(P_X > 0)
    if len(support) == 1:
        # D(Q||P_X) is finite only at Q = P_X
        lo_q = hi_q = float(P_X[0])
    else:
        lo_q, hi_q = 0.0, 1.0

    def parts(q0):
        Q = np.array([q0, 1.0 - q0])
        lo, hi = binary_region_interval(RegionQuery(Q, lam, distortion, c, "tr"))
        P, inner = _project_binary(P_Y, lo, hi)
        return weight * kl_divergence(Q, P_X) + inner, Q, P

    def objective(q0):
        return parts(q0)[0]

    if lo_q == hi_q:
        value, Q, P = parts(lo_q)
        return value, Q, P, {"method": "exact-binary", "degenerate": True}
    grid = np.linspace(lo_q, hi_q, OUTER_GRID_POINTS)
    vals = np.array([objective(q) for q in grid])
    i = int(np.argmin(vals))
    a, b = grid[max(i - 1, 0)], grid[min(i + 1, len(grid) - 1)]
    res = minimize_scalar(objective, bounds=(a, b), method="bounded", options={"xatol": 1e-12})
    q_best = float(res.x) if res.fun <= vals[i] else float(grid[i])
    value, Q, P = parts(q_best)
    diag = {
        "method": "exact-binary",
        "iterations": int(res.nfev) + OUTER_GRID_POINTS,
        "gap": float(vals[i] - value),
    }
    return value, Q, P, diag


def _tr_exponent(P_X, P_Y, lam, distortion, c, weight, inputs):
    query = RegionQuery(P_X, lam, distortion, c, "tr")
    if in_gamma_infinity(P_Y, query):
        # Q = P_X costs nothing and already admits P = P_Y
        return ExponentResult(0.0, P_X.copy(), P_Y.copy(), {"method": "inside-region"}, inputs)
    if len(P_X) == 2:
        value, Q, P, diag = _binary_tr(P_X, P_Y, lam, distortion, c, weight)
        return ExponentResult(value, Q, P, diag, inputs)
    Q, P, _, diag = _convex.min_exponent(
        P_X, P_Y, lam, distortion.cost, distortion.budget, c, "tr", weight
    )
    value = weight * kl_divergence(Q, P_X) + kl_divergence(P, P_Y)
    diag["method"] = "convex"
    diag["gap"] = abs(value - diag["objective_bits"])
    return ExponentResult(value, Q, P, diag, inputs)


def epsilon_tr(P_X, P_Y, lam, distortion: DistortionSpec, c: float = 1.0) -> ExponentResult:
    """Training-game exponent ``min_Q [c D(Q||P_X) + min over the region of Q of D(P||P_Y)]``."""
    P_X, P_Y, lam = _prepare(P_X, P_Y, lam, distortion)
    c = check_ratio(c)
    inputs = _inputs(P_X, P_Y, lam, distortion, c, game="tr")
    return _tr_exponent(P_X, P_Y, lam, distortion, c, c, inputs)


def epsilon_tr_a_bounds(P_X, P_Y, lam, distortion: DistortionSpec, c: float = 1.0, d_ratio=None) -> VersionABounds:
    """Lower and upper bounds on the version-a exponent.

    The upper bound charges the attacker's and the defender's training
    sequences together, with weight ``c + d``.  The lower bound replaces
    the mismatched-estimate region by the matched one, which contains it;
    the resulting program is minimised by putting the attacker's estimate
    at ``P_X``, so it coincides with the version-c exponent.
    """
    P_X, P_Y, lam = _prepare(P_X, P_Y, lam, distortion)
    c = check_ratio(c)
    d = c if d_ratio is None else check_ratio(d_ratio, "d_ratio")
    inputs = _inputs(P_X, P_Y, lam, distortion, c, d_ratio=d, game="tr_a")
    upper = _tr_exponent(P_X, P_Y, lam, distortion, c, c + d, inputs | {"bound": "upper"})
    lower = _tr_exponent(P_X, P_Y, lam, distortion, c, c, inputs | {"bound": "lower"})
    lower.diagnostics["relaxed"] = True
    return VersionABounds(lower.value, upper.value, True, lower, upper)
