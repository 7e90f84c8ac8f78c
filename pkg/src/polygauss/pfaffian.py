"""Gram-matrix algebra and the Pfaffian coefficient matrices.

The state basis is g^J = ∂_b^J φ for J in the complex. Along b_j,

    ∂_{b_j} g^J = g^{J∪{j}}                                   (j ∉ J)
    ∂_{b_j} g^J = -Σ_{k∈J} α^{jk}_J (b_k g^J + Σ_{ℓ∉J} α_{kℓ} g^{J∪{ℓ}})   (j ∈ J)

with g^L = 0 whenever L is not a face, and along a_{ij}

    ∂_{a_{ij}} g = Σ_k a_{ik} (∂_{b_k} B_j + B_j B_k) g.
"""
from __future__ import annotations

import json
import math
import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .complex import SimplicialComplex
from .errors import SingularGram
from .geometry import HPolyhedron

CHOL_TOL = 1e-12
SINGULAR_WARN = 1e-8


@dataclass(frozen=True)
class GramCache:
    alpha: np.ndarray
    sub_inverses: dict
    sub_determinants: dict

    def inverse(self, J) -> np.ndarray:
        return self.sub_inverses[tuple(J)]


def _cholesky(m: np.ndarray, J) -> np.ndarray:
    """Lower Cholesky factor; SingularGram when a pivot drops below CHOL_TOL·trace.

    A pivot within rounding of the cutoff counts as singular.
    """
    n = m.shape[0]
    L = np.zeros_like(m)
    floor = CHOL_TOL * float(np.trace(m)) + 8 * np.finfo(float).eps * float(np.max(np.diag(m)))
    for k in range(n):
        piv = m[k, k] - L[k, :k] @ L[k, :k]
        if not piv > floor:
            raise SingularGram(J, piv)
        L[k, k] = math.sqrt(piv)
        L[k + 1:, k] = (m[k + 1:, k] - L[k + 1:, :k] @ L[k, :k]) / L[k, k]
    return L


def gram_cache(p: HPolyhedron | np.ndarray, c: SimplicialComplex) -> GramCache:
    a = p.a if isinstance(p, HPolyhedron) else np.asarray(p, dtype=float)
    alpha = a.T @ a
    inv, det = {}, {}
    for J in c.faces:
        if not J:
            continue
        idx = [j - 1 for j in J]
        sub = alpha[np.ix_(idx, idx)]
        L = _cholesky(sub, J)
        inv[J] = scipy.linalg.cho_solve((L, True), np.eye(len(J)))
        det[J] = float(np.prod(np.diag(L)) ** 2)
    return GramCache(alpha, inv, det)


class PfaffianSystem:
    """Coefficient matrices of the Pfaffian system for a fixed complex and normals ``a``.

    ``a`` is d x n with column ``j - 1`` the normal of label ``j``; only the
    labels that occur in the complex enter the matrices. Each b-direction
    matrix is affine in b: B_j(b) = const_j + diag(slope_j @ b).
    """

    def __init__(self, complex: SimplicialComplex, a, gram: GramCache | None = None):
        self.complex = complex
        self.a = np.asarray(a, dtype=float)
        if self.a.ndim == 1:
            self.a = self.a.reshape(1, -1)
        self.gram = gram if gram is not None else gram_cache(self.a, complex)
        self.dimension = len(complex)
        self._const = {}
        self._slope = {}

    @property
    def basis(self):
        return self.complex.faces

    @property
    def n(self) -> int:
        return self.a.shape[1]

    @property
    def d(self) -> int:
        return self.a.shape[0]

    def _build(self, j):
        m = self.dimension
        const = np.zeros((m, m))
        slope = np.zeros((m, self.n))
        alpha = self.gram.alpha
        index = self.complex.index
        for r, J in enumerate(self.complex.faces):
            if j not in J:
                col = index.get(tuple(sorted(J + (j,))))
                if col is not None:
                    const[r, col] = 1.0
                continue
            inv = self.gram.inverse(J)
            w = inv[J.index(j)]  # α^{jk}_J over k in J
            idx = [k - 1 for k in J]
            slope[r, idx] = -w
            for ell in self.complex.labels:
                if ell in J:
                    continue
                col = index.get(tuple(sorted(J + (ell,))))
                if col is not None:
                    const[r, col] = -w @ alpha[idx, ell - 1]
        self._const[j] = const
        self._slope[j] = slope

    def b_parts_da(self, j, p, q):
        """Derivatives of (const, slope) of B_j with respect to a_{pq}."""
        m = self.dimension
        dconst = np.zeros((m, m))
        dslope = np.zeros((m, self.n))
        alpha = self.gram.alpha
        # ∂α/∂a_pq = e_q a_pᵀ + a_p e_qᵀ, a_p the p-th row of a
        dalpha = np.zeros_like(alpha)
        dalpha[q - 1, :] += self.a[p - 1]
        dalpha[:, q - 1] += self.a[p - 1]
        index = self.complex.index
        for r, J in enumerate(self.complex.faces):
            if j not in J:
                continue
            idx = [k - 1 for k in J]
            inv = self.gram.inverse(J)
            pos = J.index(j)
            w = inv[pos]
            dw = -(inv @ dalpha[np.ix_(idx, idx)] @ inv)[pos]
            dslope[r, idx] = -dw
            for ell in self.complex.labels:
                if ell in J:
                    continue
                col = index.get(tuple(sorted(J + (ell,))))
                if col is not None:
                    dconst[r, col] = -(dw @ alpha[idx, ell - 1] + w @ dalpha[idx, ell - 1])
        return dconst, dslope

    def derivative(self, of, along, b) -> np.ndarray:
        """Exact ∂_{along} of the coefficient matrix for direction ``of`` at (self.a, b)."""
        b = np.asarray(b, dtype=float)
        if of[0] == "b":
            j = of[1]
            if along[0] == "b":
                return self.db_matrix(j, along[1])
            dconst, dslope = self.b_parts_da(j, along[1], along[2])
            return dconst + np.diag(dslope @ b)
        i, j = of[1], of[2]
        Bj = self.b_matrix(j, b)
        out = np.zeros_like(Bj)
        if along[0] == "b":
            m = along[1]
            Dj = self.db_matrix(j, m)
            for k in range(1, self.n + 1):
                aik = self.a[i - 1, k - 1]
                if aik != 0.0:
                    out += aik * (Dj @ self.b_matrix(k, b) + Bj @ self.db_matrix(k, m))
            return out
        p, q = along[1], along[2]
        dconst_j, dslope_j = self.b_parts_da(j, p, q)
        dBj = dconst_j + np.diag(dslope_j @ b)
        if i == p:
            out += self.db_matrix(j, q) + Bj @ self.b_matrix(q, b)
        for k in range(1, self.n + 1):
            aik = self.a[i - 1, k - 1]
            if aik == 0.0:
                continue
            dconst_k, dslope_k = self.b_parts_da(k, p, q)
            dBk = dconst_k + np.diag(dslope_k @ b)
            out += aik * (np.diag(dslope_j[:, k - 1]) + dBj @ self.b_matrix(k, b) + Bj @ dBk)
        return out

    def b_parts(self, j):
        """(constant part, slope) of B_j: B_j(b) = const + diag(slope @ b)."""
        if j not in self._const:
            self._build(j)
        return self._const[j], self._slope[j]

    def b_matrix(self, j, b) -> np.ndarray:
        const, slope = self.b_parts(j)
        return const + np.diag(slope @ np.asarray(b, dtype=float))

    def db_matrix(self, j, k) -> np.ndarray:
        """∂_{b_k} B_j, a constant diagonal matrix."""
        return np.diag(self.b_parts(j)[1][:, k - 1])

    def a_matrix(self, i, j, b) -> np.ndarray:
        """C_{a_ij}: first-order reduction of Σ_k a_ik ∂_{b_k} ∂_{b_j}."""
        Bj = self.b_matrix(j, b)
        out = np.zeros_like(Bj)
        for k in range(1, self.n + 1):
            aik = self.a[i - 1, k - 1]
            if aik != 0.0:
                out += aik * (self.db_matrix(j, k) + Bj @ self.b_matrix(k, b))
        return out

    def path_matrices(self, db, b0):
        """A(s) = A0 + s A1 for the b-path b(s) = b0 + s db."""
        db = np.asarray(db, dtype=float)
        b0 = np.asarray(b0, dtype=float)
        A0 = np.zeros((self.dimension, self.dimension))
        diag0 = np.zeros(self.dimension)
        diag1 = np.zeros(self.dimension)
        for j in range(1, self.n + 1):
            if db[j - 1] == 0.0:
                continue
            const, slope = self.b_parts(j)
            A0 += db[j - 1] * const
            diag0 += db[j - 1] * (slope @ b0)
            diag1 += db[j - 1] * (slope @ db)
        A0[np.diag_indices_from(A0)] += diag0
        return A0, np.diag(diag1)

    def at(self, a) -> "PfaffianSystem":
        """Same complex, new normals."""
        return PfaffianSystem(self.complex, a)

    def coefficient(self, direction, b) -> np.ndarray:
        """Matrix for a coordinate direction ("b", j) or ("a", i, j)."""
        if direction[0] == "b":
            return self.b_matrix(direction[1], b)
        return self.a_matrix(direction[1], direction[2], b)

    def to_json(self, b, directions=None) -> str:
        b = np.asarray(b, dtype=float)
        if directions is None:
            directions = [("b", j) for j in range(1, self.n + 1)]
        return json.dumps({
            "basis": [list(J) for J in self.basis],
            "point": {"a": self.a.tolist(), "b": b.tolist()},
            "matrices": [
                {"direction": list(dirn), "rows": self.coefficient(dirn, b).tolist()}
                for dirn in directions
            ],
        })


def b_direction_matrix(sys: PfaffianSystem, j: int, b) -> np.ndarray:
    return sys.b_matrix(j, b)


def a_direction_matrix(sys: PfaffianSystem, i: int, j: int, b) -> np.ndarray:
    return sys.a_matrix(i, j, b)


def coordinate_directions(sys: PfaffianSystem, include_a: bool = True):
    dirs = [("b", j) for j in range(1, sys.n + 1)]
    if include_a:
        dirs += [("a", i, j) for i in range(1, sys.d + 1) for j in range(1, sys.n + 1)]
    return dirs


def _coordinate(a, b, direction):
    return b[direction[1] - 1] if direction[0] == "b" else a[direction[1] - 1, direction[2] - 1]


def _shift(a, b, direction, h):
    a2, b2 = a.copy(), b.copy()
    if direction[0] == "b":
        b2[direction[1] - 1] += h
    else:
        a2[direction[1] - 1, direction[2] - 1] += h
    return a2, b2


def fd_derivative(sys: PfaffianSystem, b, of, along) -> np.ndarray:
    """∂_{along} of the coefficient matrix for ``of`` by Richardson-extrapolated central differences.

    Base step h = 1e-5·(1 + |coordinate|); the h and h/2 stencils are combined
    to fourth order.
    """
    a = sys.a
    b = np.asarray(b, dtype=float)
    h = 1e-5 * (1.0 + abs(_coordinate(a, b, along)))

    def central(step):
        ap, bp = _shift(a, b, along, step)
        am, bm = _shift(a, b, along, -step)
        sp = sys if along[0] == "b" else sys.at(ap)
        sm = sys if along[0] == "b" else sys.at(am)
        return (sp.coefficient(of, bp) - sm.coefficient(of, bm)) / (2 * step)

    return (4.0 * central(h / 2) - central(h)) / 3.0


def integrability_residual(sys: PfaffianSystem, point, dir1, dir2, method: str = "exact") -> float:
    """‖∂₁c₂ + c₂c₁ − ∂₂c₁ − c₁c₂‖_∞ at ``point`` = (a, b).

    ``method="exact"`` differentiates the coefficient matrices analytically;
    ``"fd"`` uses :func:`fd_derivative` for every a-direction.
    """
    if tuple(dir1) == tuple(dir2):
        return 0.0
    a, b = point
    a = np.array(a, dtype=float).reshape(sys.d, sys.n)
    b = np.array(b, dtype=float)
    here = sys if np.array_equal(a, sys.a) else sys.at(a)

    def deriv(of, along):
        if method == "fd" and "a" in (of[0], along[0]):
            return fd_derivative(here, b, of, along)
        return here.derivative(of, along, b)

    c1 = here.coefficient(dir1, b)
    c2 = here.coefficient(dir2, b)
    lhs = deriv(dir2, dir1) + c2 @ c1
    rhs = deriv(dir1, dir2) + c1 @ c2
    return float(np.abs(lhs - rhs).max())


def annihilator_residual(sys: PfaffianSystem, b) -> float:
    """max over J, j∈J of |b_j e_J + Σ_k α_jk Row_J(B_k)|: the b-relations restated as a matrix identity."""
    b = np.asarray(b, dtype=float)
    alpha = sys.gram.alpha
    Bs = {k: sys.b_matrix(k, b) for k in range(1, sys.n + 1)}
    worst = 0.0
    for r, J in enumerate(sys.basis):
        for j in J:
            row = np.zeros(sys.dimension)
            row[r] = b[j - 1]
            for k in range(1, sys.n + 1):
                row += alpha[j - 1, k - 1] * Bs[k][r]
            worst = max(worst, float(np.abs(row).max()))
    return worst


def singular_distance(sys: PfaffianSystem) -> float:
    """min det α_J over the nonempty faces; warns when it is tiny relative to the scale of α."""
    dets = sys.gram.sub_determinants
    if not dets:
        return math.inf
    value = min(dets.values())
    labels = [j - 1 for j in sys.complex.labels]
    diag = np.diag(sys.gram.alpha)[labels]
    scale = float(np.exp(np.mean(np.log(diag))))
    if value < SINGULAR_WARN * scale:
        warnings.warn(f"close to the singular locus: min det α_J = {value:.3e}", RuntimeWarning, stacklevel=2)
    return value
