"""H-representation polyhedra and the LP-backed combinatorial checks.

Constraints are labelled 1..n throughout (label ``j`` is column ``j - 1`` of
``a``); label 0 is reserved for the homogenizing half-space ``x_0 >= 0``.
"""
from __future__ import annotations

import enum
import warnings
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np
import scipy.linalg

from . import lp
from .errors import DegenerateNearTie, EmptyPolyhedron, InvalidPolyhedron

EPS_LP = 1e-9
EPS_STRICT = 1e-7
RANK_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class HPolyhedron:
    """The polyhedron {x : a[:, j]·x + b[j] >= 0 for all j}."""

    a: np.ndarray
    b: np.ndarray

    def __post_init__(self):
        a = np.array(self.a, dtype=float)
        if a.ndim == 1:
            a = a.reshape(1, -1)
        b = np.array(self.b, dtype=float).ravel()
        if a.ndim != 2 or a.shape[0] < 1 or a.shape[1] < 1:
            raise InvalidPolyhedron(f"a must be a non-empty d x n matrix, got shape {a.shape}")
        if b.shape != (a.shape[1],):
            raise InvalidPolyhedron(f"b has length {b.size}, expected {a.shape[1]}")
        if not (np.all(np.isfinite(a)) and np.all(np.isfinite(b))):
            raise InvalidPolyhedron("a and b must be finite")
        zero = np.flatnonzero(~np.any(a != 0.0, axis=0))
        if zero.size:
            raise InvalidPolyhedron(f"constraint(s) {list(zero + 1)} have a zero normal")
        a.setflags(write=False)
        b.setflags(write=False)
        object.__setattr__(self, "a", a)
        object.__setattr__(self, "b", b)

    @property
    def d(self) -> int:
        return self.a.shape[0]

    @property
    def n(self) -> int:
        return self.a.shape[1]

    def values(self, x: np.ndarray) -> np.ndarray:
        """f_j(x) for points stacked in the rows of ``x``."""
        return np.atleast_2d(x) @ self.a + self.b

    def contains(self, x: np.ndarray, tol: float = 0.0) -> np.ndarray:
        return np.all(self.values(x) >= -tol, axis=1)

    def subset(self, labels) -> "HPolyhedron":
        idx = [j - 1 for j in labels]
        return HPolyhedron(self.a[:, idx], self.b[idx])

    def __eq__(self, other):
        if not isinstance(other, HPolyhedron):
            return NotImplemented
        return np.array_equal(self.a, other.a) and np.array_equal(self.b, other.b)

    def __hash__(self):
        return hash((self.a.tobytes(), self.b.tobytes(), self.a.shape))


@dataclass(frozen=True, eq=False)
class HomogenizedFamily:
    """Columns of the lifted half-spaces in R^{d+1}; column 0 is e_0."""

    columns: np.ndarray

    @property
    def d(self) -> int:
        return self.columns.shape[0] - 1

    @property
    def n(self) -> int:
        return self.columns.shape[1] - 1

    def to_polyhedron(self) -> HPolyhedron:
        return HPolyhedron(self.columns[1:, 1:], self.columns[0, 1:])


def homogenize(p: HPolyhedron) -> HomogenizedFamily:
    cols = np.zeros((p.d + 1, p.n + 1))
    cols[0, 0] = 1.0
    cols[0, 1:] = p.b
    cols[1:, 1:] = p.a
    cols.setflags(write=False)
    return HomogenizedFamily(cols)


# --- rank -----------------------------------------------------------------

def numerical_rank(m: np.ndarray, tol: float = RANK_TOL) -> tuple[int, bool]:
    """Rank via column-pivoted QR; also reports whether a pivot sits near the cut."""
    m = np.atleast_2d(m)
    if m.size == 0:
        return 0, False
    r = scipy.linalg.qr(m, mode="r", pivoting=True)[0]
    diag = np.abs(np.diag(r))
    if diag.size == 0 or diag[0] == 0.0:
        return 0, False
    cut = tol * diag[0]
    rank = int(np.sum(diag > cut))
    near = bool(np.any((diag > cut / 10) & (diag < cut * 10)))
    return rank, near


# --- cone LPs ------------------------------------------------------------

def _max_slack(h: HomogenizedFamily, J) -> tuple[float, np.ndarray | None]:
    """max s  s.t. â_j·x = 0 (j in J), â_k·x >= s (k not in J), |x|_inf <= 1, s <= 1."""
    cols = h.columns
    m = h.d + 1
    J = sorted(J)
    rest = [k for k in range(h.n + 1) if k not in set(J)]
    c = np.zeros(m + 1)
    c[-1] = -1.0
    A_ub = np.hstack([-cols[:, rest].T, np.ones((len(rest), 1))])
    b_ub = np.zeros(len(rest))
    A_eq = np.hstack([cols[:, J].T, np.zeros((len(J), 1))]) if J else None
    b_eq = np.zeros(len(J)) if J else None
    bounds = [(-1.0, 1.0)] * m + [(None, 1.0)]
    res = lp.linprog(c, A_ub, b_ub, A_eq, b_eq, bounds)
    if res.status != "optimal":
        return -np.inf, None
    return -res.fun, res.x[:m]


def relative_interior_point(h: HomogenizedFamily, J) -> np.ndarray | None:
    """A nonzero x with â_j·x = 0 on J and â_k·x > 0 strictly off J, or None."""
    J = sorted(J)
    if len(J) == h.n + 1:
        # no strict constraints left: any nonzero vector of the common null space
        null = scipy.linalg.null_space(h.columns[:, J].T, rcond=RANK_TOL)
        return null[:, 0] if null.shape[1] else None
    s, x = _max_slack(h, J)
    return x if s > EPS_STRICT else None


def _cone_is_zero(h: HomogenizedFamily, J) -> bool:
    """Whether {x : â_j·x = 0 on J, â_k·x >= 0 elsewhere} is {0}."""
    cols = h.columns
    m = h.d + 1
    rank, _ = numerical_rank(cols)
    if rank < m:
        return False  # common lineality direction survives every restriction
    J = sorted(J)
    rest = [k for k in range(h.n + 1) if k not in set(J)]
    if not rest:
        return True
    c = -cols[:, rest].sum(axis=1)
    A_ub = -cols[:, rest].T
    A_eq = cols[:, J].T if J else None
    b_eq = np.zeros(len(J)) if J else None
    res = lp.linprog(c, A_ub, np.zeros(len(rest)), A_eq, b_eq, [(-1.0, 1.0)] * m)
    return res.status == "optimal" and -res.fun <= EPS_STRICT


class FaceClass(str, enum.Enum):
    FULL_DIM = "FullDimCone"
    ZERO = "ZeroCone"
    VIOLATION = "Violation"


def classify(h: HomogenizedFamily, J) -> tuple[FaceClass, bool]:
    """Classify F̂_J; the flag reports a near-tie in a rank or strictness decision."""
    J = tuple(sorted(J))
    near = False
    if len(J) == h.n + 1:
        point = relative_interior_point(h, J)
        strict_ok = point is not None
    else:
        s, _ = _max_slack(h, J)
        strict_ok = s > EPS_STRICT
        near |= EPS_STRICT / 10 < s < EPS_STRICT * 10
    if strict_ok:
        rank, near_rank = numerical_rank(h.columns[:, list(J)]) if J else (0, False)
        near |= near_rank
        if rank == len(J):
            return FaceClass.FULL_DIM, near
    if _cone_is_zero(h, J):
        return FaceClass.ZERO, near
    return FaceClass.VIOLATION, near


@dataclass
class GeneralPositionReport:
    in_general_position: bool
    witness: tuple[int, ...] | None = None
    face_dims: dict[tuple[int, ...], FaceClass] = field(default_factory=dict)
    near_ties: list[tuple[int, ...]] = field(default_factory=list)

    def full_dim_faces(self) -> list[tuple[int, ...]]:
        return [J for J, cls in self.face_dims.items() if cls is FaceClass.FULL_DIM]


def check_general_position(h: HomogenizedFamily, exhaustive: bool = False) -> GeneralPositionReport:
    """Check every F̂_J, J ⊆ {0..n}, by increasing |J| then lexicographically.

    Only sets all of whose one-smaller subsets are full-dimensional cones are
    visited: a superset of a ZeroCone set is itself {0}. Enumeration stops at
    the first violation unless ``exhaustive`` is set. Worst case 2^(n+1) LPs.
    """
    report = GeneralPositionReport(True)
    frontier = [()]
    labels = range(h.n + 1)
    while frontier:
        full = set(frontier)
        level = []
        for J in frontier:
            cls, near = classify(h, J)
            report.face_dims[J] = cls
            if near:
                report.near_ties.append(J)
                warnings.warn(f"near-degenerate decision for J={list(J)}", DegenerateNearTie, stacklevel=2)
            if cls is FaceClass.VIOLATION:
                if report.in_general_position:
                    report.in_general_position = False
                    report.witness = J
                if not exhaustive:
                    return report
            if cls is not FaceClass.FULL_DIM:
                full.discard(J)
        # candidates of the next size: every subset of size k must be full-dim
        for J in sorted(full):
            last = J[-1] if J else -1
            for k in labels:
                if k <= last:
                    continue
                cand = J + (k,)
                if all(sub in full for sub in combinations(cand, len(cand) - 1)):
                    level.append(cand)
        frontier = sorted(level)
    return report


# --- Farkas validity ----------------------------------------------------------

class Validity(str, enum.Enum):
    VALID_CASE_I = "ValidCaseI"
    VALID_CASE_II = "ValidCaseII"
    INVALID = "Invalid"


@dataclass(frozen=True)
class ValidityCertificate:
    kind: Validity
    multipliers: np.ndarray | None = None

    @property
    def valid(self) -> bool:
        return self.kind is not Validity.INVALID


def is_valid(p: HPolyhedron, c, c0: float) -> ValidityCertificate:
    """Decide whether c·x + c0 >= 0 on P by searching for Farkas multipliers.

    Case II (λ >= 0, aλ = 0, b·λ < 0) certifies P is empty and is tried first;
    case I needs aλ = c with b·λ <= c0.
    """
    c = np.asarray(c, dtype=float).ravel()
    if c.shape != (p.d,):
        raise InvalidPolyhedron(f"c must have length {p.d}")
    n = p.n
    nonneg = [(0.0, None)] * n
    res = lp.linprog(np.zeros(n), p.b[None, :], [-1.0], p.a, np.zeros(p.d), nonneg)
    if res.status == "optimal":
        return ValidityCertificate(Validity.VALID_CASE_II, res.x)
    res = lp.linprog(p.b, A_eq=p.a, b_eq=c, bounds=nonneg)
    if res.status == "optimal" and res.fun <= c0 + EPS_LP * (1.0 + abs(c0)):
        return ValidityCertificate(Validity.VALID_CASE_I, res.x)
    return ValidityCertificate(Validity.INVALID)


# --- redundancy ---------------------------------------------------------------

def is_empty(p: HPolyhedron) -> bool:
    res = lp.linprog(np.zeros(p.d), -p.a.T, p.b)
    return res.status == "infeasible"


def strip_redundant(p: HPolyhedron) -> tuple[HPolyhedron, tuple[int, ...]]:
    """Drop every constraint implied by the remaining ones.

    Returns the reduced polyhedron and the removed labels (1-based, in terms
    of the input). Constraints are tested in order against the currently
    kept set, so of two identical rows the first is removed.
    """
    if is_empty(p):
        raise EmptyPolyhedron("polyhedron has no points")
    kept = list(range(1, p.n + 1))
    removed = []
    for j in range(1, p.n + 1):
        others = [k for k in kept if k != j]
        aj, bj = p.a[:, j - 1], p.b[j - 1]
        if others:
            idx = [k - 1 for k in others]
            res = lp.linprog(aj, -p.a[:, idx].T, p.b[idx])
            bounded = res.status == "optimal"
            low = res.fun + bj if bounded else -np.inf
        else:
            low = -np.inf
        if low >= -EPS_LP * (1.0 + np.abs(aj).sum() + abs(bj)):
            kept.remove(j)
            removed.append(j)
    return p.subset(kept), tuple(removed)


def kept_labels(p: HPolyhedron, removed) -> tuple[int, ...]:
    gone = set(removed)
    return tuple(j for j in range(1, p.n + 1) if j not in gone)
