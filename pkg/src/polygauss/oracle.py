"""Sampling oracle for φ, the inclusion–exclusion terms φ_F and their b-derivatives.

Samples are drawn in fixed-size chunks, chunk ``k`` from the stream
SeedSequence(seed, spawn_key=(k,)), so estimates are bit-identical for a
given seed whatever the thread count. Chunk sums are reduced in chunk order
with numpy's pairwise summation.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.special import ndtri
from scipy.stats import qmc

from .complex import SimplicialComplex
from .geometry import HPolyhedron

CHUNK = 1 << 16
QMC_SHIFTS = 16


@dataclass(frozen=True)
class OracleEstimate:
    value: float
    std_error: float
    samples: int
    method: str = "MC"


def max_threads() -> int:
    env = os.environ.get("POLYGAUSS_THREADS")
    if env:
        return max(1, int(env))
    return os.cpu_count() or 1


def _normals(seed: int, chunk: int, size: int, d: int) -> np.ndarray:
    rng = np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(chunk,)))
    return rng.standard_normal((size, d))


def _mc_moments(d: int, samples: int, seed: int, integrand):
    """Per-column (sum, sum of squares) of integrand(x) over ``samples`` standard normals."""
    sizes = [CHUNK] * (samples // CHUNK)
    if samples % CHUNK:
        sizes.append(samples % CHUNK)

    def work(k):
        vals = integrand(_normals(seed, k, sizes[k], d))
        return vals.sum(axis=0), (vals * vals).sum(axis=0)

    workers = min(max_threads(), len(sizes))
    if workers > 1:
        with ThreadPoolExecutor(workers) as pool:
            parts = list(pool.map(work, range(len(sizes))))
    else:
        parts = [work(k) for k in range(len(sizes))]
    s = np.sum(np.array([p[0] for p in parts]), axis=0)
    s2 = np.sum(np.array([p[1] for p in parts]), axis=0)
    return s, s2


def _qmc_means(d: int, samples: int, seed: int, integrand):
    per_shift = max(1, math.ceil(samples / QMC_SHIFTS))
    m = max(1, math.ceil(math.log2(per_shift)))
    means = []
    for k in range(QMC_SHIFTS):
        engine = qmc.Sobol(d, scramble=True, seed=np.random.default_rng(np.random.SeedSequence(seed, spawn_key=(k,))))
        u = engine.random_base2(m)
        u = np.clip(u, 1e-300, 1 - 1e-16)
        means.append(integrand(ndtri(u)).mean(axis=0))
    return np.array(means), QMC_SHIFTS * (1 << m)


def _estimate(d: int, samples: int, seed: int, integrand, method: str):
    """Estimates for each column of integrand(x) (a 2-D array)."""
    if method == "MC":
        s, s2 = _mc_moments(d, samples, seed, integrand)
        mean = s / samples
        var = np.maximum(s2 - samples * mean * mean, 0.0) / max(samples - 1, 1)
        return [OracleEstimate(float(m), float(math.sqrt(v / samples)), samples, "MC") for m, v in zip(mean, var)]
    if method == "QMC":
        means, total = _qmc_means(d, samples, seed, integrand)
        mean = means.mean(axis=0)
        err = means.std(axis=0, ddof=1) / math.sqrt(QMC_SHIFTS)
        return [OracleEstimate(float(m), float(e), total, "QMC") for m, e in zip(mean, err)]
    raise ValueError(f"unknown method {method!r}")


def _indicator(p: HPolyhedron, b=None):
    a = p.a
    b = p.b if b is None else b

    def f(x):
        return np.all(x @ a + b >= 0.0, axis=1).astype(float)

    return f


def _chi(p: HPolyhedron, F):
    idx = [j - 1 for j in F]
    a = p.a[:, idx]
    b = p.b[idx]
    sign = (-1.0) ** len(idx)

    def f(x):
        if not idx:
            return np.ones(x.shape[0])
        return sign * np.all(x @ a + b < 0.0, axis=1)

    return f


def estimate_phi(p: HPolyhedron, samples: int = 10**6, seed: int = 0, method: str = "MC") -> OracleEstimate:
    ind = _indicator(p)
    return _estimate(p.d, samples, seed, lambda x: ind(x)[:, None], method)[0]


def estimate_phi_F(p: HPolyhedron, F, samples: int = 10**6, seed: int = 0, method: str = "MC") -> OracleEstimate:
    """Signed expectation of Π_{j∈F}(H(f_j) - 1)."""
    chi = _chi(p, tuple(F))
    return _estimate(p.d, samples, seed, lambda x: chi(x)[:, None], method)[0]


def check_decomposition(p: HPolyhedron, complex: SimplicialComplex, samples: int = 10**5, seed: int = 0) -> float:
    """|φ̂ - Σ_F φ̂_F| with every estimate drawn from the same stream."""
    total = estimate_phi(p, samples, seed).value
    parts = np.array([estimate_phi_F(p, F, samples, seed).value for F in complex.faces])
    return abs(total - float(np.sum(parts)))


def fd_derivative(p: HPolyhedron, J, h: float = 1e-2, samples: int = 10**6, seed: int = 0,
                  method: str = "MC") -> OracleEstimate:
    """Central difference of the sampled φ in the b_j, j in J (|J| <= 2), common random numbers."""
    J = tuple(sorted(J))
    if len(J) > 2:
        raise ValueError("mixed differences beyond second order are not supported")
    if not J:
        return estimate_phi(p, samples, seed, method)
    stencil = []
    for signs in np.array(np.meshgrid(*[[1.0, -1.0]] * len(J))).T.reshape(-1, len(J)):
        b = p.b.copy()
        for j, s in zip(J, signs):
            b[j - 1] += s * h
        stencil.append((float(np.prod(signs)), b))
    a = p.a
    weights = np.array([w for w, _ in stencil]) / (2.0 * h) ** len(J)
    offsets = np.array([b for _, b in stencil])

    def integrand(x):
        f = x @ a
        vals = np.stack([np.all(f + b >= 0.0, axis=1) for b in offsets], axis=1).astype(float)
        return (vals @ weights)[:, None]

    return _estimate(p.d, samples, seed, integrand, method)[0]


def fd_gradient(p: HPolyhedron, h: float = 1e-2, samples: int = 10**6, seed: int = 0,
                method: str = "MC", extrapolate: bool = False) -> list[OracleEstimate]:
    """fd_derivative for every J = {j}, all columns from one set of samples.

    Pointwise, H at b_j + h minus H at b_j - h is the indicator of
    {-h <= f_j < h, all other constraints hold}. With ``extrapolate`` the h
    and h/2 differences of the same samples are combined as
    (4 D(h/2) - D(h)) / 3, which cancels the O(h²) bias.
    """
    a, b = p.a, p.b

    def strip(f, j, step):
        return (f[:, j] + step >= 0.0) & ~(f[:, j] - step >= 0.0)

    def integrand(x):
        f = x @ a + b
        cols = []
        for j in range(p.n):
            others = np.all(np.delete(f, j, axis=1) >= 0.0, axis=1)
            wide = others & strip(f, j, h)
            if extrapolate:
                narrow = others & strip(f, j, h / 2)
                cols.append((4.0 * narrow / h - wide / (2.0 * h)) / 3.0)
            else:
                cols.append(wide / (2.0 * h))
        return np.stack(cols, axis=1)

    return _estimate(p.d, samples, seed, integrand, method)
