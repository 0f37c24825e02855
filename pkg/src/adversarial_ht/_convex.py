"""Convex programs over couplings, solved with cvxpy's exponential-cone backend.

Both the training-game statistic ``h_c(P', Q)`` and the divergence are
jointly convex in their two arguments, which is what lets every inner and
outer problem below be posed as a single convex program.
"""

from __future__ import annotations

import math

import cvxpy as cp
import numpy as np

from .exceptions import ConvergenceError

LN2 = math.log(2.0)
SOLVER = "CLARABEL"
_OK = (cp.OPTIMAL, cp.OPTIMAL_INACCURATE)
# defaults stop near 1e-8, too loose for boundary tests at 1e-7
SOLVER_OPTS = {"tol_gap_abs": 1e-11, "tol_gap_rel": 1e-11, "tol_feas": 1e-11, "max_iter": 500}


def _coupling(k, cost, budget, row_marginal):
    gamma = cp.Variable((k, k), nonneg=True)
    cons = [cp.sum(gamma, axis=1) == row_marginal, cp.sum(cp.multiply(cost, gamma)) <= budget]
    return gamma, cp.sum(gamma, axis=0), cons


def _statistic(Pp, Q, c, game):
    """Acceptance statistic in nats as a cvxpy expression."""
    if game == "ks":
        return cp.sum(cp.rel_entr(Pp, Q))
    U = (Pp + c * Q) / (1.0 + c)
    return cp.sum(cp.rel_entr(Pp, U)) + c * cp.sum(cp.rel_entr(Q, U))


def _solve(problem, what, iterates):
    try:
        problem.solve(solver=SOLVER, **SOLVER_OPTS)
    except cp.error.SolverError as exc:
        raise ConvergenceError(f"{what}: solver error {exc}", iterates) from exc
    if problem.status not in _OK:
        raise ConvergenceError(f"{what}: solver status {problem.status}", iterates)
    stats = problem.solver_stats
    return {"solver": SOLVER, "status": problem.status, "iterations": stats.num_iters}


def _clean(v):
    v = np.clip(np.asarray(v, dtype=np.float64).ravel(), 0.0, None)
    return v / v.sum()


def _support_constraints(var, ref):
    """Force ``var`` to vanish where the fixed reference pmf does (keeps rel_entr finite)."""
    zero = np.flatnonzero(np.asarray(ref) <= 0)
    return [var[zero] == 0] if zero.size else []


def min_statistic_in_ball(P, Q, cost, budget, c, game):
    """Minimise the acceptance statistic of ``P'`` over couplings of ``P`` within budget.

    Returns ``(Pp, diagnostics)``; the caller re-evaluates the statistic
    at ``Pp`` with its own arithmetic.
    """
    k = len(P)
    gamma, Pp, cons = _coupling(k, cost, budget, P)
    Q_safe = np.where(Q > 0, Q, 1.0) if game == "ks" else Q
    if game == "ks":
        cons += _support_constraints(Pp, Q)
    problem = cp.Problem(cp.Minimize(_statistic(Pp, Q_safe, c, game)), cons)
    diag = _solve(problem, "inner statistic minimisation", {"P": P.tolist(), "Q": Q.tolist()})
    return _clean(Pp.value), diag


def min_exponent(P_X, P_Y, lam, cost, budget, c, game, weight):
    """Jointly minimise ``weight D(Q||P_X) + D(P||P_Y)`` over ``Q`` and ``P`` in the region.

    For the known-source game ``Q`` is pinned to ``P_X`` and ``weight`` is unused.
    Returns ``(Q, P, Pp, diagnostics)``.
    """
    k = len(P_X)
    P = cp.Variable(k, nonneg=True)
    gamma, Pp, cons = _coupling(k, cost, budget, P)
    cons += [cp.sum(P) == 1]
    cons += _support_constraints(P, P_Y)
    PY_safe = np.where(P_Y > 0, P_Y, 1.0)
    objective = cp.sum(cp.rel_entr(P, PY_safe))
    if game == "ks":
        Q = P_X
        cons += _support_constraints(Pp, P_X)
        cons += [_statistic(Pp, np.where(P_X > 0, P_X, 1.0), c, "ks") <= lam * LN2]
    else:
        Q = cp.Variable(k, nonneg=True)
        cons += [cp.sum(Q) == 1]
        cons += _support_constraints(Q, P_X)
        PX_safe = np.where(P_X > 0, P_X, 1.0)
        objective = objective + weight * cp.sum(cp.rel_entr(Q, PX_safe))
        cons += [_statistic(Pp, Q, c, "tr") <= lam * LN2]
    problem = cp.Problem(cp.Minimize(objective), cons)
    diag = _solve(
        problem,
        "exponent minimisation",
        {"P_X": P_X.tolist(), "P_Y": P_Y.tolist(), "lam": lam, "budget": budget},
    )
    Q_val = P_X.copy() if game == "ks" else _clean(Q.value)
    diag["objective_bits"] = float(problem.value) / LN2
    return Q_val, _clean(P.value), _clean(Pp.value), diag
