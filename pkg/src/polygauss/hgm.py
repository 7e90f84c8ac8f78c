"""Probability content of a polyhedron by integrating the Pfaffian system in b.

The state along a b-path is stored in a Gaussian gauge: g^J = z^J · exp(w^J)
where w^J = log of the N(0, α_J) density at -b_J. The far-field values of
g^J are astronomically small and would underflow (or lose all relative
accuracy) in plain floating point; z^J stays O(1) because it is the
probability-like link value

    z^J = Σ_{G in lk(J)} (-1)^{|G|} P(Z_G < -b_G | Z_J = -b_J),   Z = aᵀX,

which is again a polyhedron content in dimension d - |J| and is computed by
the same machinery. In this gauge the diagonal of the b-path matrix cancels
and the system is strictly upper triangular by face size.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import asdict, dataclass, field

import numpy as np

from . import ode
from .complex import SimplicialComplex, holonomic_rank, nerve
from .errors import (NonPositiveDefinite, ShiftTooSmall, SingularGram, SingularLocusCrossing)
from .geometry import HPolyhedron, check_general_position, homogenize, kept_labels, strip_redundant
from .pfaffian import PfaffianSystem, gram_cache, singular_distance

MIN_RADIUS = 6.0
PHI_SLACK = 1e-6
_LOG_2PI = math.log(2 * math.pi)


@dataclass
class HGMConfig:
    rel_tol: float = 1e-9
    abs_tol: float = 1e-12
    init_tol: float = 1e-8
    shift_t: float | None = None
    max_retries: int = 3

    @classmethod
    def from_dict(cls, d: dict | None) -> "HGMConfig":
        d = dict(d or {})
        unknown = set(d) - set(cls.__dataclass_fields__)
        if unknown:
            raise ValueError(f"unknown config keys: {sorted(unknown)}")
        return cls(**d)

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True, eq=False)
class GaussianProblem:
    polyhedron: HPolyhedron
    mean: np.ndarray | None = None
    covariance: np.ndarray | None = None

    def __post_init__(self):
        d = self.polyhedron.d
        mean = np.zeros(d) if self.mean is None else np.asarray(self.mean, dtype=float).ravel()
        cov = np.eye(d) if self.covariance is None else np.atleast_2d(np.asarray(self.covariance, dtype=float))
        if mean.shape != (d,):
            raise ValueError(f"mean must have length {d}")
        if cov.shape != (d, d):
            raise ValueError(f"covariance must be {d} x {d}")
        if not np.allclose(cov, cov.T, rtol=0.0, atol=1e-12):
            raise NonPositiveDefinite("covariance is not symmetric")
        object.__setattr__(self, "mean", mean)
        object.__setattr__(self, "covariance", cov)


def standardize(gp: GaussianProblem) -> HPolyhedron:
    """Rewrite P(X ∈ P), X ~ N(μ, Σ), as the standard-normal content of a new polyhedron."""
    cov = gp.covariance
    floor = 1e-12 * float(np.trace(cov)) + 8 * np.finfo(float).eps * float(np.max(np.diag(cov)))
    L = np.zeros_like(cov)
    for k in range(cov.shape[0]):
        piv = cov[k, k] - L[k, :k] @ L[k, :k]
        if not piv > floor:
            raise NonPositiveDefinite(f"covariance pivot {piv:.3e} at row {k}")
        L[k, k] = math.sqrt(piv)
        L[k + 1:, k] = (cov[k + 1:, k] - L[k + 1:, :k] @ L[k, :k]) / L[k, k]
    p = gp.polyhedron
    return HPolyhedron(L.T @ p.a, p.a.T @ gp.mean + p.b)


@dataclass
class StateVector:
    """g^J = scaled[J] * exp(log_scale[J]) over the basis of a complex."""

    basis: tuple
    scaled: np.ndarray
    log_scale: np.ndarray

    @classmethod
    def from_values(cls, basis, values) -> "StateVector":
        values = np.asarray(values, dtype=float)
        return cls(tuple(basis), values.copy(), np.zeros_like(values))

    @property
    def values(self) -> np.ndarray:
        with np.errstate(under="ignore"):
            return self.scaled * np.exp(self.log_scale)

    @property
    def phi(self) -> float:
        return float(self.values[0])

    def __getitem__(self, J) -> float:
        i = self.basis.index(tuple(sorted(J)))
        with np.errstate(under="ignore"):
            return float(self.scaled[i] * math.exp(self.log_scale[i]))

    def rescaled(self, log_scale: np.ndarray) -> np.ndarray:
        """Scaled components relative to another gauge."""
        with np.errstate(over="ignore", under="ignore", invalid="ignore"):
            out = self.scaled * np.exp(self.log_scale - log_scale)
        out[self.scaled == 0.0] = 0.0
        return out


# --- gauge ------------------------------------------------------------------

def _gauge_quadratic(sys: PfaffianSystem, b0, db):
    """Coefficients of w_J(s) = c0 + c1 s + c2 s² along b0 + s·db."""
    m = sys.dimension
    c0 = np.zeros(m)
    c1 = np.zeros(m)
    c2 = np.zeros(m)
    for r, J in enumerate(sys.basis):
        if not J:
            continue
        idx = [j - 1 for j in J]
        Q = sys.gram.inverse(J)
        u, v = b0[idx], db[idx]
        c0[r] = -0.5 * u @ Q @ u - 0.5 * len(J) * _LOG_2PI - 0.5 * math.log(sys.gram.sub_determinants[J])
        c1[r] = -(v @ Q @ u)
        c2[r] = -0.5 * v @ Q @ v
    return c0, c1, c2


def log_weights(sys: PfaffianSystem, b) -> np.ndarray:
    b = np.asarray(b, dtype=float)
    return _gauge_quadratic(sys, b, np.zeros_like(b))[0]


# --- link problems --------------------------------------------------------------

def _link_system(sys: PfaffianSystem, J) -> PfaffianSystem:
    cache = sys.__dict__.setdefault("_link_cache", {})
    if J not in cache:
        idx = [j - 1 for j in J]
        q, _ = np.linalg.qr(sys.a[:, idx])
        a_proj = sys.a - q @ (q.T @ sys.a)
        cache[J] = PfaffianSystem(sys.complex.link(J), a_proj)
    return cache[J]


def _conditional_offsets(sys: PfaffianSystem, J, b) -> np.ndarray:
    idx = [j - 1 for j in J]
    coef = sys.gram.alpha[:, idx] @ sys.gram.inverse(J)
    return b - coef @ b[idx]


def link_value(sys: PfaffianSystem, J, b, cfg: HGMConfig | None = None) -> float:
    """z^J = g^J / N(-b_J; 0, α_J), the link-complex content conditional on the face J."""
    J = tuple(sorted(J))
    if not J:
        raise ValueError("link_value needs a nonempty face")
    if sys.complex.is_maximal(J):
        return 1.0
    sub = _link_system(sys, J)
    return continued_phi(sub, _conditional_offsets(sys, J, np.asarray(b, dtype=float)), cfg=cfg)


def column_norms(sys: PfaffianSystem) -> np.ndarray:
    idx = [j - 1 for j in sys.complex.labels]
    return np.sqrt(np.diag(sys.gram.alpha)[idx])


def default_shift(sys: PfaffianSystem, b) -> float:
    idx = [j - 1 for j in sys.complex.labels]
    b = np.asarray(b, dtype=float)
    return max(8.0 * float(column_norms(sys).max()) - float(b[idx].min()), 10.0)


def inscribed_radius(sys: PfaffianSystem, b, t: float) -> float:
    idx = [j - 1 for j in sys.complex.labels]
    return float(np.min((np.asarray(b, dtype=float)[idx] + t) / column_norms(sys)))


def initial_state(sys: PfaffianSystem, b, t: float, cfg: HGMConfig | None = None) -> StateVector:
    """Far-field state at b + t·1.

    g^∅ is set to 1 (error below the Gaussian tail outside the inscribed ball
    of radius r(t) >= 6); every other component gets its exact value through
    the Gaussian gauge and a recursive link computation.
    """
    b = np.asarray(b, dtype=float)
    r = inscribed_radius(sys, b, t)
    if r < MIN_RADIUS:
        raise ShiftTooSmall(f"shift t={t:g} gives inscribed radius {r:.3g} < {MIN_RADIUS:g}")
    far = b + t
    scaled = np.ones(sys.dimension)
    for i, J in enumerate(sys.basis):
        if J:
            scaled[i] = link_value(sys, J, far, cfg)
    return StateVector(sys.basis, scaled, log_weights(sys, far))


# --- integration --------------------------------------------------------------

@dataclass
class PathTrace:
    phi_min: float = math.inf
    phi_max: float = -math.inf
    stats: ode.StepStats = field(default_factory=ode.StepStats)


def integrate(sys: PfaffianSystem, from_b, to_b, y0: StateVector, cfg: HGMConfig | None = None,
              trace: PathTrace | None = None) -> StateVector:
    """Integrate the Pfaffian system along the segment from_b -> to_b (a fixed)."""
    cfg = cfg or HGMConfig()
    b0 = np.asarray(from_b, dtype=float)
    b1 = np.asarray(to_b, dtype=float)
    db = b1 - b0
    if not np.any(db):
        return y0
    A0, A1 = sys.path_matrices(db, b0)
    c0, c1, c2 = _gauge_quadratic(sys, b0, db)
    rows, cols = np.nonzero((A0 != 0.0) | (A1 != 0.0))
    off = rows != cols
    rows, cols = rows[off], cols[off]
    a0, a1 = A0[rows, cols], A1[rows, cols]
    diag0, diag1 = np.diag(A0).copy(), np.diag(A1).copy()
    m = sys.dimension

    def rhs(s, z):
        w = c0 + s * (c1 + s * c2)
        dw = c1 + 2.0 * s * c2
        M = np.zeros((m, m))
        with np.errstate(under="ignore"):
            M[rows, cols] = (a0 + s * a1) * np.exp(w[cols] - w[rows])
        M[np.diag_indices(m)] = diag0 + s * diag1 - dw
        return M @ z

    # coupling factors exp(w_L - w_J) are Gaussian bumps in s; never step past one
    curv = np.abs(np.concatenate([c2[cols] - c2[rows], c2]))
    max_step = 1.0 / math.sqrt(max(1.0, 2.0 * float(curv.max(initial=0.0))))

    z0 = y0.rescaled(c0)
    trace = trace if trace is not None else PathTrace()
    z1 = ode.integrate(rhs, z0, 0.0, 1.0, cfg.rel_tol, cfg.abs_tol, trace.stats,
                       observer=lambda s, z: _observe(trace, z[0]), max_step=max_step)
    _observe(trace, z1[0])
    return StateVector(sys.basis, z1, c0 + c1 + c2)


def _observe(trace: PathTrace, phi: float):
    trace.phi_min = min(trace.phi_min, phi)
    trace.phi_max = max(trace.phi_max, phi)


def continued_phi(sys: PfaffianSystem, b, t: float | None = None, cfg: HGMConfig | None = None,
                  trace: PathTrace | None = None, full: bool = False):
    """Run initial_state + integrate to b and return g^∅ (or the whole state)."""
    b = np.asarray(b, dtype=float)
    if len(sys.basis) == 1:
        return StateVector.from_values(sys.basis, [1.0]) if full else 1.0
    if t is None:
        t = default_shift(sys, b)
    y0 = initial_state(sys, b, t, cfg)
    y1 = integrate(sys, b + t, b, y0, cfg, trace)
    return y1 if full else y1.phi


# --- top level -------------------------------------------------------------

@dataclass
class Diagnostics:
    rank: int
    singular_distance: float
    doubling_gap: float
    shift_t: float
    retries: int
    steps_accepted: int
    steps_rejected: int
    phi_range: tuple
    removed_redundant: tuple
    kept: tuple
    polyhedron: HPolyhedron = field(repr=False)
    system: PfaffianSystem = field(repr=False)
    state: StateVector = field(repr=False)


def prepare(gp: GaussianProblem):
    """standardize -> strip_redundant -> general position -> nerve -> Pfaffian system."""
    std = standardize(gp)
    stripped, removed = strip_redundant(std)
    report = check_general_position(homogenize(stripped))
    cx = nerve(stripped, report)
    sys = PfaffianSystem(cx, stripped.a, gram_cache(stripped, cx))
    return stripped, removed, sys


def compute_probability(gp: GaussianProblem, cfg: HGMConfig | None = None) -> tuple[float, Diagnostics]:
    """P(X ∈ P) for X ~ N(μ, Σ), validated by a t / 2t far-field doubling check."""
    cfg = cfg or HGMConfig()
    stripped, removed, sys = prepare(gp)
    b = stripped.b
    t = cfg.shift_t if cfg.shift_t is not None else default_shift(sys, b)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", RuntimeWarning)
        sing = singular_distance(sys)
    for attempt in range(cfg.max_retries + 1):
        trace = PathTrace()
        y = continued_phi(sys, b, t, cfg, trace, full=True)
        y2 = continued_phi(sys, b, 2 * t, cfg, full=True)
        gap = abs(y.phi - y2.phi)
        if gap <= cfg.init_tol:
            break
        if attempt == cfg.max_retries:
            raise ShiftTooSmall(f"doubling gap {gap:.3e} > {cfg.init_tol:.1e} after {attempt} retries")
        t *= 2.0
    if not (-PHI_SLACK <= trace.phi_min and trace.phi_max <= 1.0 + PHI_SLACK):
        warnings.warn(f"g^∅ left [0, 1] along the path: [{trace.phi_min:.3g}, {trace.phi_max:.3g}]",
                      RuntimeWarning, stacklevel=2)
    diag = Diagnostics(
        rank=holonomic_rank(sys.complex), singular_distance=sing, doubling_gap=gap, shift_t=t,
        retries=attempt, steps_accepted=trace.stats.accepted, steps_rejected=trace.stats.rejected,
        phi_range=(trace.phi_min, trace.phi_max), removed_redundant=removed,
        kept=kept_labels(standardize(gp), removed), polyhedron=stripped, system=sys, state=y,
    )
    return y.phi, diag


def probability(a, b, mean=None, covariance=None, cfg: HGMConfig | None = None) -> float:
    return compute_probability(GaussianProblem(HPolyhedron(a, b), mean, covariance), cfg)[0]


# --- continuation in a ----------------------------------------------------------

def continue_in_a(complex: SimplicialComplex, from_a, to_a, b, y0: StateVector,
                  cfg: HGMConfig | None = None, samples: int = 64) -> StateVector:
    """Carry the state along the straight segment from_a -> to_a at fixed b."""
    cfg = cfg or HGMConfig()
    a0 = np.asarray(from_a, dtype=float)
    a1 = np.asarray(to_a, dtype=float)
    b = np.asarray(b, dtype=float)
    da = a1 - a0
    if not np.any(da):
        return y0
    for s in np.linspace(0.0, 1.0, samples):
        try:
            dets = gram_cache(a0 + s * da, complex).sub_determinants
        except SingularGram as exc:
            raise SingularLocusCrossing(f"segment meets det α_J = 0 near s={s:.3f}") from exc
        if dets and min(dets.values()) <= 1e-8:
            raise SingularLocusCrossing(f"det α_J = {min(dets.values()):.3e} at s={s:.3f}")
    entries = [(i + 1, j + 1, da[i, j]) for i in range(da.shape[0]) for j in range(da.shape[1]) if da[i, j]]

    def rhs(s, y):
        sys = PfaffianSystem(complex, a0 + s * da)
        M = sum(v * sys.a_matrix(i, j, b) for i, j, v in entries)
        return M @ y

    y = ode.integrate(rhs, y0.values, 0.0, 1.0, cfg.rel_tol, cfg.abs_tol)
    return StateVector.from_values(y0.basis, y)
