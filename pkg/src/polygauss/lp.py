"""Dense two-phase primal simplex with Bland's rule.

The LPs solved here are tiny (a handful of variables), so a plain tableau is
used; robustness matters more than speed.
"""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import LPNumericalFailure

LP_TOL = 1e-9
PIVOT_TOL = 1e-11
MAX_ITER = 5000


@dataclass(frozen=True)
class LPResult:
    status: str  # "optimal", "infeasible" or "unbounded"
    x: np.ndarray | None = None
    fun: float | None = None


def _pivot(T, row, col):
    T[row] /= T[row, col]
    for r in range(T.shape[0]):
        if r != row and T[r, col] != 0.0:
            T[r] -= T[r, col] * T[row]


def _simplex(T, basis, ncols, tol):
    """Minimize the objective stored in the last row of T over columns [0, ncols).

    Returns "optimal" or "unbounded". T[-1, :ncols] holds reduced costs and
    T[-1, -1] holds minus the objective value.
    """
    m = T.shape[0] - 1
    for _ in range(MAX_ITER):
        obj = T[-1, :ncols]
        entering = -1
        for j in range(ncols):
            if obj[j] < -tol:
                entering = j
                break
        if entering < 0:
            return "optimal"
        col = T[:m, entering]
        rhs = T[:m, -1]
        best, leave = np.inf, -1
        for i in range(m):
            if col[i] > PIVOT_TOL:
                ratio = rhs[i] / col[i]
                # Bland: smallest ratio, ties broken by smallest basic index
                if ratio < best - 1e-14 or (abs(ratio - best) <= 1e-14 and basis[i] < basis[leave]):
                    best, leave = ratio, i
        if leave < 0:
            return "unbounded"
        _pivot(T, leave, entering)
        basis[leave] = entering
    raise LPNumericalFailure(f"simplex exceeded {MAX_ITER} iterations")


def _standard_form_solve(c, A, b, tol):
    """min c.x  s.t.  A x = b, x >= 0."""
    A = np.array(A, dtype=float)
    b = np.array(b, dtype=float)
    c = np.asarray(c, dtype=float)
    m, nv = A.shape
    neg = b < 0
    A[neg] *= -1.0
    b[neg] *= -1.0

    # phase 1 tableau: [A | I | b], objective = sum of artificials
    T = np.zeros((m + 1, nv + m + 1))
    T[:m, :nv] = A
    T[:m, nv:nv + m] = np.eye(m)
    T[:m, -1] = b
    T[-1, :nv] = -A.sum(axis=0)
    T[-1, -1] = -b.sum()
    basis = list(range(nv, nv + m))

    _simplex(T, basis, nv + m, tol)
    scale = max(1.0, float(np.abs(b).max(initial=0.0)))
    if -T[-1, -1] > tol * scale * 10:
        return LPResult("infeasible")

    # drive remaining artificials out of the basis, drop redundant rows
    keep = []
    for i in range(m):
        if basis[i] >= nv:
            row = T[i, :nv]
            j = int(np.argmax(np.abs(row))) if nv else 0
            if nv and abs(row[j]) > 1e-9:
                _pivot(T, i, j)
                basis[i] = j
                keep.append(i)
        else:
            keep.append(i)
    T2 = np.zeros((len(keep) + 1, nv + 1))
    T2[:-1, :nv] = T[keep, :nv]
    T2[:-1, -1] = T[keep, -1]
    basis = [basis[i] for i in keep]
    T2[-1, :nv] = c
    for i, j in enumerate(basis):
        if T2[-1, j] != 0.0:
            T2[-1] -= T2[-1, j] * T2[i]

    status = _simplex(T2, basis, nv, tol)
    if status == "unbounded":
        return LPResult("unbounded")
    x = np.zeros(nv)
    for i, j in enumerate(basis):
        x[j] = T2[i, -1]
    return LPResult("optimal", x, float(c @ x))


def linprog(c, A_ub=None, b_ub=None, A_eq=None, b_eq=None, bounds=None, tol=LP_TOL):
    """Minimize c.x subject to A_ub x <= b_ub, A_eq x == b_eq and variable bounds.

    ``bounds`` is a sequence of (lo, hi) pairs, ``None`` meaning unbounded on
    that side; the default makes every variable free. Feasibility of the
    returned point is re-checked against the original constraints and an
    :class:`LPNumericalFailure` is raised if it is violated beyond tolerance.
    """
    c = np.asarray(c, dtype=float)
    nx = c.size
    A_ub = np.zeros((0, nx)) if A_ub is None else np.atleast_2d(np.asarray(A_ub, dtype=float))
    b_ub = np.zeros(0) if b_ub is None else np.asarray(b_ub, dtype=float).ravel()
    A_eq = np.zeros((0, nx)) if A_eq is None else np.atleast_2d(np.asarray(A_eq, dtype=float))
    b_eq = np.zeros(0) if b_eq is None else np.asarray(b_eq, dtype=float).ravel()
    if bounds is None:
        bounds = [(None, None)] * nx

    # x = offset + M u, u >= 0
    cols = []
    offset = np.zeros(nx)
    extra_ub = []  # (column index in u, upper bound)
    for k, (lo, hi) in enumerate(bounds):
        if lo is not None:
            offset[k] = lo
            cols.append((k, 1.0))
            if hi is not None:
                extra_ub.append((len(cols) - 1, hi - lo))
        elif hi is not None:
            offset[k] = hi
            cols.append((k, -1.0))
        else:
            cols.append((k, 1.0))
            cols.append((k, -1.0))
    nu = len(cols)
    M = np.zeros((nx, nu))
    for u, (k, s) in enumerate(cols):
        M[k, u] = s

    ub_rows = [A_ub @ M]
    ub_rhs = [b_ub - A_ub @ offset]
    if extra_ub:
        E = np.zeros((len(extra_ub), nu))
        for r, (u, h) in enumerate(extra_ub):
            E[r, u] = 1.0
        ub_rows.append(E)
        ub_rhs.append(np.array([h for _, h in extra_ub]))
    G = np.vstack(ub_rows)
    h = np.concatenate(ub_rhs)
    ns = G.shape[0]
    Aeq_u = A_eq @ M
    beq_u = b_eq - A_eq @ offset

    A = np.zeros((ns + Aeq_u.shape[0], nu + ns))
    A[:ns, :nu] = G
    A[:ns, nu:] = np.eye(ns)
    A[ns:, :nu] = Aeq_u
    rhs = np.concatenate([h, beq_u])
    cost = np.concatenate([M.T @ c, np.zeros(ns)])

    res = _standard_form_solve(cost, A, rhs, tol)
    if res.status != "optimal":
        return res
    x = offset + M @ res.x[:nu]
    _check_feasible(x, A_ub, b_ub, A_eq, b_eq, bounds)
    return LPResult("optimal", x, float(c @ x))


def _check_feasible(x, A_ub, b_ub, A_eq, b_eq, bounds, tol=1e-7):
    scale = 1.0 + float(np.abs(x).max(initial=0.0))
    if A_ub.size and np.any(A_ub @ x - b_ub > tol * scale * (1.0 + np.abs(A_ub).max())):
        raise LPNumericalFailure("simplex returned a point violating an inequality")
    if A_eq.size and np.any(np.abs(A_eq @ x - b_eq) > tol * scale * (1.0 + np.abs(A_eq).max())):
        raise LPNumericalFailure("simplex returned a point violating an equality")
    for xi, (lo, hi) in zip(x, bounds):
        if (lo is not None and xi < lo - tol * scale) or (hi is not None and xi > hi + tol * scale):
            raise LPNumericalFailure("simplex returned a point outside its bounds")
