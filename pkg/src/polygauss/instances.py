"""Bundled problem instances and a seeded random generator."""
from __future__ import annotations

import math

import numpy as np

from .geometry import HPolyhedron, check_general_position, homogenize, strip_redundant


def unit_square() -> HPolyhedron:
    return HPolyhedron([[1, -1, 0, 0], [0, 0, 1, -1]], [0, 1, 0, 1])


def square_corner() -> HPolyhedron:
    """First three constraints of the unit square; the two parallel sides meet only at infinity."""
    return HPolyhedron([[1, -1, 0], [0, 0, 1]], [0, 1, 0])


def square_with_diagonal() -> HPolyhedron:
    """Unit square plus the redundant x_1 + x_2 >= 0, which touches it only at the origin."""
    return HPolyhedron([[1, -1, 0, 0, 1], [0, 0, 1, -1, 1]], [0, 1, 0, 1, 0])


def triangle() -> HPolyhedron:
    return HPolyhedron([[1, 0, -1], [0, 1, -1]], [0, 0, 1])


def half_space(d: int = 1) -> HPolyhedron:
    a = np.zeros((d, 1))
    a[0, 0] = 1.0
    return HPolyhedron(a, [0.0])


def orthant_covariance(rho: float) -> np.ndarray:
    return np.array([[1.0, rho], [rho, 1.0]])


def orthant() -> HPolyhedron:
    return HPolyhedron(np.eye(2), [0.0, 0.0])


def orthant_probability(rho: float) -> float:
    return 0.25 + math.asin(rho) / (2 * math.pi)


def square_probability() -> float:
    from scipy.special import ndtr
    return float((ndtr(1.0) - ndtr(0.0)) ** 2)


def problem(p: HPolyhedron, mean=None, covariance=None) -> dict:
    """ProblemFile-shaped dict."""
    out = {"a": p.a.tolist(), "b": p.b.tolist()}
    if mean is not None:
        out["mean"] = np.asarray(mean, float).tolist()
    if covariance is not None:
        out["covariance"] = np.asarray(covariance, float).tolist()
    return out


def bundled() -> dict[str, dict]:
    """Instance set used by the bench command."""
    return {
        "half_space": problem(half_space()),
        "unit_square": problem(unit_square()),
        "triangle": problem(triangle()),
        "orthant_rho_0.5": problem(orthant(), covariance=orthant_covariance(0.5)),
        "orthant_rho_-0.9": problem(orthant(), covariance=orthant_covariance(-0.9)),
        "square_with_diagonal": problem(square_with_diagonal()),
        "random_d3_n5": problem(random_instance(np.random.default_rng(7), 3, 5)),
    }


def random_instance(rng: np.random.Generator, d: int, n: int, center_scale: float = 0.0,
                    unit_normals: bool = False, attempts: int = 200) -> HPolyhedron:
    """Random nonempty polyhedron without redundant rows, in general position.

    Constraint j is tangent to the ball of radius r_j ~ U(0.3, 1.5) about a
    common center c ~ N(0, center_scale² I), with a standard-normal normal;
    so the origin is inside when center_scale is 0. Draws that are redundant
    or degenerate are rejected. With ``unit_normals`` the normals are scaled
    to length one, so b_j is the distance from the origin to
    hyperplane j (signed, positive on the inside).
    """
    for _ in range(attempts):
        a = rng.standard_normal((d, n))
        if unit_normals:
            a /= np.linalg.norm(a, axis=0)
        center = center_scale * rng.standard_normal(d)
        r = rng.uniform(0.3, 1.5, n)
        p = HPolyhedron(a, r * np.linalg.norm(a, axis=0) - a.T @ center)
        _, removed = strip_redundant(p)
        if removed:
            continue
        if check_general_position(homogenize(p)).in_general_position:
            return p
    raise RuntimeError(f"no admissible instance with d={d}, n={n} in {attempts} draws")
