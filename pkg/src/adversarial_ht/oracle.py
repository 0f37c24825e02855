"""Slow reference implementations used by the test suite.

Nothing here calls into the optimised modules: divergences, thresholds,
type enumeration and transport plans are all recomputed with plain loops
so that a bug in the fast path cannot be mirrored here.
"""

from __future__ import annotations

import math

import numpy as np

ORACLE_TYPE_CAP = 10**5


def _kl(p, q):
    total = 0.0
    for a, b in zip(p, q):
        if a > 0:
            if b <= 0:
                return math.inf
            total += a * math.log2(a / b)
    return max(total, 0.0)


def _h(p, q, c):
    u = [(a + c * b) / (1 + c) for a, b in zip(p, q)]
    return max(_kl(p, u) + c * _kl(q, u), 0.0)


def _compositions(total, parts):
    if parts == 1:
        yield (total,)
        return
    for first in range(total, -1, -1):
        for rest in _compositions(total - first, parts - 1):
            yield (first,) + rest


def _threshold(config, game):
    n, k, lam = config.n, config.alphabet_size, config.lam
    if config.threshold_mode == "asymptotic":
        return lam
    if game == "ks":
        return lam - k * math.log2(n + 1) / n
    N = int(round(config.c * n))
    return lam - k * math.log2((n + 1) * (N + 1)) / n


def _destinations(counts, cost, limit):
    """Every output type reachable from ``counts`` by an integer plan of cost ``<= limit``."""
    k = len(counts)
    found = set()

    def walk(row, dest, spent):
        if spent > limit:
            return
        if row == k:
            found.add(tuple(dest))
            return
        for split in _compositions(counts[row], k):
            extra = sum(split[j] * cost[row][j] for j in range(k))
            walk(row + 1, [d + s for d, s in zip(dest, split)], spent + extra)

    walk(0, [0] * k, 0.0)
    return found


def exhaustive_region(Q, config, game="tr"):
    """All length-``n`` count vectors from which an attack into the acceptance region exists."""
    n, k = config.n, config.alphabet_size
    if math.comb(n + k - 1, k - 1) > ORACLE_TYPE_CAP:
        raise RuntimeError("type set too large for the oracle")
    q = [float(v) for v in Q]
    s = sum(q)
    q = [v / s for v in q]
    cost = [[float(v) for v in row] for row in np.asarray(config.distortion.cost)]
    limit = n * config.distortion.budget + 1e-9
    thr = _threshold(config, game)
    c = config.c

    def accepted(t):
        p = [v / n for v in t]
        stat = _h(p, q, c) if game == "tr" else _kl(p, q)
        return stat < thr

    verdict = {}
    members = set()
    for t in _compositions(n, k):
        for z in _destinations(t, cost, limit):
            if z not in verdict:
                verdict[z] = accepted(z)
            if verdict[z]:
                members.add(t)
                break
    return members


# ---------------------------------------------------------------------------
# nested grid exponent, binary alphabets only


def _grid(lo, hi, step):
    m = max(1, int(math.ceil((hi - lo) / step - 1e-9)))
    return np.linspace(lo, hi, m + 1)


def _kl_vec(p0, q0):
    """Binary divergence in bits, vectorised over ``p0``."""
    p0 = np.asarray(p0, dtype=float)
    out = np.zeros_like(p0)
    for a, b in ((p0, q0), (1 - p0, 1 - q0)):
        pos = a > 0
        if b <= 0:
            out = np.where(pos, np.inf, out)
            continue
        with np.errstate(divide="ignore", invalid="ignore"):
            out = out + np.where(pos, a * np.log2(np.where(pos, a, 1.0) / b), 0.0)
    return np.maximum(out, 0.0)


def _stat_vec(p0, q0, c, game):
    if game == "ks":
        return _kl_vec(p0, q0)
    u0 = (np.asarray(p0) + c * q0) / (1 + c)
    # divergence of the fixed Q against each mixture, written out directly
    total = np.zeros_like(u0)
    for a, b in ((np.asarray(p0), u0), (1 - np.asarray(p0), 1 - u0)):
        with np.errstate(divide="ignore", invalid="ignore"):
            total += np.where(a > 0, a * np.log2(np.where(a > 0, a, 1) / np.where(b > 0, b, 1)), 0)
    for a, b in ((q0, u0), (1 - q0, 1 - u0)):
        if a > 0:
            total += c * a * np.log2(a / b)
    return np.maximum(total, 0.0)


def _accepted_span(q0, lam, c, game, step, fine):
    """Approximate ``[a, b]`` with ``stat(p, q) <= lam`` by a coarse grid plus a fine rescan at each edge."""
    grid = _grid(0.0, 1.0, step)
    ok = _stat_vec(grid, q0, c, game) <= lam
    if not ok.any():
        return None
    idx = np.flatnonzero(ok)
    ends = []
    for j, side in ((idx[0], -1), (idx[-1], 1)):
        if (side < 0 and j == 0) or (side > 0 and j == len(grid) - 1):
            ends.append(grid[j])
            continue
        lo, hi = sorted((grid[j], grid[j + side]))
        sub = _grid(lo, hi, fine)
        sub_ok = _stat_vec(sub, q0, c, game) <= lam
        ends.append(sub[sub_ok].min() if side < 0 else sub[sub_ok].max())
    return ends[0], ends[1]


def _inner(q0, p_y0, lam, D, c01, c10, c, game, step, fine):
    span = _accepted_span(q0, lam, c, game, step, fine)
    if span is None:
        return math.inf
    a, b = span
    lo = 0.0 if c10 == 0 else max(0.0, a - D / c10)
    hi = 1.0 if c01 == 0 else min(1.0, b + D / c01)
    # grid over P restricted to the region, then a fine pass near the best point
    grid = _grid(lo, hi, step)
    vals = _kl_vec(grid, p_y0)
    j = int(np.argmin(vals))
    sub = _grid(grid[max(j - 1, 0)], grid[min(j + 1, len(grid) - 1)], fine)
    return float(min(vals[j], _kl_vec(sub, p_y0).min()))


def grid_exponent(P_X, P_Y, lam, distortion, c=1.0, game="tr", resolution=1e-3, refine=1e-5):
    """Nested grid evaluation of the false-negative exponent for a binary alphabet."""
    px0, py0 = float(P_X[0]) / float(sum(P_X)), float(P_Y[0]) / float(sum(P_Y))
    cost = np.asarray(distortion.cost, dtype=float)
    if cost.shape != (2, 2):
        raise ValueError("grid_exponent only handles binary alphabets")
    D, c01, c10 = float(distortion.budget), float(cost[0, 1]), float(cost[1, 0])
    if game == "ks":
        return _inner(px0, py0, lam, D, c01, c10, 1.0, "ks", resolution, refine)

    def outer(q0):
        return c * float(_kl_vec([q0], px0)[0]) + _inner(q0, py0, lam, D, c01, c10, c, "tr", resolution, refine)

    qs = _grid(0.0, 1.0, resolution)
    vals = np.array([outer(q) for q in qs])
    j = int(np.argmin(vals))
    sub = _grid(qs[max(j - 1, 0)], qs[min(j + 1, len(qs) - 1)], refine)
    return float(min(vals[j], min(outer(q) for q in sub)))
