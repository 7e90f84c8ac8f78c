import math

import numpy as np
import pytest
from scipy.special import ndtr
from scipy.stats import multivariate_normal

from polygauss.complex import SimplicialComplex
from polygauss.errors import (EmptyPolyhedron, NonPositiveDefinite, NotGeneralPosition, ShiftTooSmall,
                              SingularLocusCrossing)
from polygauss.geometry import HPolyhedron
from polygauss.hgm import (GaussianProblem, HGMConfig, StateVector, compute_probability, continue_in_a,
                           continued_phi, default_shift, initial_state, integrate, prepare, probability,
                           standardize)
from polygauss.instances import orthant, orthant_covariance, orthant_probability, random_instance, square_probability
from polygauss.oracle import estimate_phi
from polygauss.pfaffian import PfaffianSystem


def box_probability(lo, hi, cov):
    """Rectangle probability of N(0, cov) by inclusion-exclusion over scipy's CDF."""
    d = len(lo)
    total = 0.0
    for corner in np.ndindex(*(2,) * d):
        x = np.where(np.array(corner) == 1, hi, lo)
        sign = (-1) ** (d - sum(corner))
        total += sign * multivariate_normal.cdf(x, cov=cov, abseps=1e-12, releps=1e-12)
    return total


class TestConfig:
    def test_defaults(self):
        cfg = HGMConfig()
        assert (cfg.rel_tol, cfg.abs_tol, cfg.init_tol, cfg.max_retries) == (1e-9, 1e-12, 1e-8, 3)

    def test_round_trip(self):
        cfg = HGMConfig(rel_tol=1e-10, shift_t=20.0)
        assert HGMConfig.from_dict(cfg.to_dict()) == cfg

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            HGMConfig.from_dict({"rtol": 1})


class TestStandardize:
    def test_identity(self, square):
        assert standardize(GaussianProblem(square)) == square

    def test_univariate(self):
        p = standardize(GaussianProblem(HPolyhedron([[1]], [0]), [1.0], [[4.0]]))
        assert (p.a[0, 0], p.b[0]) == (2.0, 1.0)
        assert probability([[1]], [0], [1.0], [[4.0]]) == pytest.approx(ndtr(0.5), abs=1e-9)

    def test_orthant_gram(self):
        p = standardize(GaussianProblem(orthant(), None, orthant_covariance(0.4)))
        np.testing.assert_allclose(p.a.T @ p.a, orthant_covariance(0.4), atol=1e-15)

    def test_not_positive_definite(self):
        with pytest.raises(NonPositiveDefinite):
            standardize(GaussianProblem(orthant(), None, [[1, 1], [1, 1]]))


class TestInitialState:
    def test_square_far_field(self, square):
        sys = prepare(GaussianProblem(square))[2]
        y = initial_state(sys, square.b, 10.0)
        expected = np.zeros(9)
        expected[0] = 1.0
        np.testing.assert_allclose(y.values, expected, atol=1e-20)

    def test_radius_threshold(self):
        sys = PfaffianSystem(SimplicialComplex([(1,)]), [[1.0]])
        initial_state(sys, [0.0], 8.0)
        with pytest.raises(ShiftTooSmall):
            initial_state(sys, [0.0], 3.0)

    def test_univariate_tail(self):
        sys = PfaffianSystem(SimplicialComplex([(1,)]), [[1.0]])
        y = initial_state(sys, [0.0], 10.0)
        assert abs(y.phi - ndtr(10.0)) < 1e-23
        assert y[(1,)] == pytest.approx(math.exp(-50) / math.sqrt(2 * math.pi), rel=1e-14)

    def test_default_shift(self, square):
        sys = prepare(GaussianProblem(square))[2]
        assert default_shift(sys, square.b) == 10.0
        assert default_shift(sys, square.b - 5) == 13.0


class TestIntegrate:
    def test_univariate(self):
        sys = PfaffianSystem(SimplicialComplex([(1,)]), [[1.0]])
        y0 = StateVector.from_values(sys.basis, [1.0, math.exp(-50) / math.sqrt(2 * math.pi)])
        y = integrate(sys, [10.0], [0.0], y0)
        np.testing.assert_allclose(y.values, [0.5, 1 / math.sqrt(2 * math.pi)], atol=1e-10)

    def test_zero_length(self, square):
        sys = prepare(GaussianProblem(square))[2]
        y0 = initial_state(sys, square.b, 10.0)
        assert integrate(sys, square.b, square.b, y0) is y0

    def test_square(self, square):
        sys = prepare(GaussianProblem(square))[2]
        y = integrate(sys, square.b + 10, square.b, initial_state(sys, square.b, 10.0))
        assert y.phi == pytest.approx(square_probability(), abs=1e-9)

    def test_path_independence(self, rng):
        p = random_instance(rng, 2, 4)
        sys = prepare(GaussianProblem(p))[2]
        cfg = HGMConfig()
        start = p.b + 12.0
        y0 = initial_state(sys, p.b, 12.0)
        diagonal = integrate(sys, start, p.b, y0, cfg)
        mid = start.copy()
        mid[:2] = p.b[:2]
        legs = integrate(sys, mid, p.b, integrate(sys, start, mid, y0, cfg), cfg)
        np.testing.assert_allclose(legs.values, diagonal.values, atol=1e-8)


class TestComputeProbability:
    @pytest.mark.parametrize("d", [1, 2, 3])
    def test_half_space(self, d):
        a = np.zeros((d, 1))
        a[0] = 1
        assert probability(a, [0.0]) == pytest.approx(0.5, abs=1e-9)

    def test_square(self, square):
        phi, diag = compute_probability(GaussianProblem(square))
        assert phi == pytest.approx(square_probability(), abs=1e-6)
        assert diag.rank == 9 and diag.doubling_gap <= 1e-8 and diag.singular_distance == pytest.approx(1)

    @pytest.mark.parametrize("rho", [-0.9, -0.5, 0.0, 0.3, 0.5, 0.9])
    def test_orthant(self, rho):
        phi = compute_probability(GaussianProblem(orthant(), None, orthant_covariance(rho)))[0]
        assert phi == pytest.approx(orthant_probability(rho), abs=1e-6)

    def test_correlated_box(self):
        cov = np.array([[2.0, 0.6], [0.6, 0.5]])
        p = HPolyhedron([[1, -1, 0, 0], [0, 0, 1, -1]], [1, 0.5, 0.3, 1.2])
        expected = box_probability([-1, -0.3], [0.5, 1.2], cov)
        assert probability(p.a, p.b, None, cov) == pytest.approx(expected, abs=1e-7)

    def test_mean_shift(self, tri):
        mu = np.array([0.2, -0.1])
        shifted = HPolyhedron(tri.a, tri.a.T @ mu + tri.b)
        assert probability(tri.a, tri.b, mu) == pytest.approx(probability(shifted.a, shifted.b), abs=1e-12)

    def test_redundant_rows_are_stripped(self, square5, square):
        phi, diag = compute_probability(GaussianProblem(square5))
        assert diag.removed_redundant == (5,) and diag.kept == (1, 2, 3, 4)
        assert phi == pytest.approx(square_probability(), abs=1e-6)

    def test_gradient_matches_differences(self, rng):
        p = random_instance(rng, 2, 3)
        _, diag = compute_probability(GaussianProblem(p))
        h = 1e-4
        for j in range(1, 4):
            e = np.zeros(3)
            e[j - 1] = h
            fd = (probability(p.a, p.b + e) - probability(p.a, p.b - e)) / (2 * h)
            g = diag.state[(j,)]
            assert abs(fd - g) <= max(1e-5, 1e-3 * abs(g))

    def test_monotone_in_b(self, rng):
        p = random_instance(rng, 2, 4)
        base = probability(p.a, p.b)
        for j in range(4):
            b = p.b.copy()
            b[j] += 0.3
            assert probability(p.a, b) >= base - 1e-9

    def test_shrinking_toward_empty(self, tri):
        # x1 >= s, x2 >= s, x1 + x2 <= 1 - s collapses at s = 1/3
        values = [probability(tri.a, tri.b - s) for s in (0.0, 0.1, 0.2, 0.3)]
        assert all(x > y for x, y in zip(values, values[1:]))
        est = estimate_phi(HPolyhedron(tri.a, tri.b - 0.3), 4 * 10**6, seed=5)
        assert abs(values[-1] - est.value) <= 4 * est.std_error

    def test_errors(self, corner):
        with pytest.raises(NotGeneralPosition):
            compute_probability(GaussianProblem(corner))
        with pytest.raises(EmptyPolyhedron):
            probability([[1, -1]], [-1, 0])

    def test_fixed_shift_too_small(self):
        cfg = HGMConfig(shift_t=1.0)
        with pytest.raises(ShiftTooSmall):
            compute_probability(GaussianProblem(HPolyhedron([[1]], [0])), cfg)


class TestContinueInA:
    c = SimplicialComplex.generated_by([(1, 2)])

    def _orthant_normals(self, rho):
        return np.array([[1.0, rho], [0.0, math.sqrt(1 - rho * rho)]])

    def test_identity(self):
        y0 = StateVector.from_values(self.c.faces, [0.25, 0.2, 0.2, 0.16])
        assert continue_in_a(self.c, np.eye(2), np.eye(2), np.zeros(2), y0) is y0

    def test_orthant_correlation(self):
        s2pi = 1 / math.sqrt(2 * math.pi)
        y0 = StateVector.from_values(self.c.faces, [0.25, 0.5 * s2pi, 0.5 * s2pi, s2pi**2])
        y = continue_in_a(self.c, np.eye(2), self._orthant_normals(0.5), np.zeros(2), y0)
        assert y.phi == pytest.approx(1 / 3, abs=1e-5)

    def test_singular_crossing(self):
        y0 = StateVector.from_values(self.c.faces, [0.25, 0.2, 0.2, 0.16])
        to_a = np.array([[1.0, 1.0], [0.0, 0.0]])
        with pytest.raises(SingularLocusCrossing):
            continue_in_a(self.c, np.eye(2), to_a, np.zeros(2), y0)


def test_continued_phi_trivial_complex():
    sys = PfaffianSystem(SimplicialComplex([]), np.zeros((2, 0)))
    assert continued_phi(sys, np.zeros(0)) == 1.0
