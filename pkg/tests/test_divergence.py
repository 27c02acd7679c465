import math

import numpy as np
import pytest
from hypothesis import given

from app.core.exceptions import ConcavityError, DimensionMismatchError, ExponentialConcavityError
from app.engine.divergence import (
    DivergenceKind,
    DivergenceTag,
    MetricMatrix,
    OrderBehaviour,
    SignConvention,
    bregman,
    divergence,
    equal_weight_l_alpha,
    excess_growth,
    l_alpha,
    l_divergence,
    metric_matrix,
    quadratic_order_ratio,
)
from app.engine.genfun import CallbackFunction, CrossEntropy, Diversity, NegHalfSqNorm
from app.utils.numerics import random_simplex_points, random_tangent_vectors
from tests.strategies import simplex_points, tangent_vectors

P = np.array([0.5, 0.5])
Q = np.array([0.6, 0.4])
EQUAL_WEIGHT_ANCHOR = -0.5 * math.log(0.96)


class TestWorkedValues:

    def test_bregman_of_quadratic_is_half_squared_distance(self):
        assert bregman(NegHalfSqNorm(), Q, P) == pytest.approx(0.01, abs=1e-15)

    def test_equal_weight_anchor(self):
        phi = CrossEntropy.equal_weight(2)
        assert EQUAL_WEIGHT_ANCHOR == pytest.approx(0.0204110, abs=1e-6)
        assert bregman(phi, Q, P) == pytest.approx(EQUAL_WEIGHT_ANCHOR, abs=1e-12)
        assert l_divergence(phi, Q, P) == pytest.approx(EQUAL_WEIGHT_ANCHOR, abs=1e-12)
        assert l_alpha(phi, 0.5, Q, P) == pytest.approx(EQUAL_WEIGHT_ANCHOR, abs=1e-12)
        assert excess_growth([0.5, 0.5], Q, P) == pytest.approx(EQUAL_WEIGHT_ANCHOR, abs=1e-12)

    def test_excess_growth_of_a_vertex_is_zero(self):
        assert excess_growth([1.0, 0.0], Q, P) == pytest.approx(0.0, abs=1e-15)

    def test_l_alpha_at_one_is_l_divergence(self):
        phi = Diversity(0.5)
        q, p = np.array([0.2, 0.3, 0.5]), np.array([0.4, 0.4, 0.2])
        assert l_alpha(phi, 1.0, q, p) == l_divergence(phi, q, p)

    def test_l_alpha_tends_to_bregman(self):
        assert l_alpha(NegHalfSqNorm(), 1e-8, Q, P) == pytest.approx(0.01, abs=1e-8)

    def test_equal_weight_closed_form(self):
        q, p = np.array([0.2, 0.3, 0.5]), np.array([0.4, 0.4, 0.2])
        expected = l_alpha(CrossEntropy.equal_weight(3), 0.7, q, p)
        assert equal_weight_l_alpha(0.7, q, p) == pytest.approx(expected, abs=1e-14)


class TestAxioms:

    @given(simplex_points(), simplex_points())
    def test_nonnegative(self, p, q):
        for phi in (CrossEntropy.equal_weight(3), NegHalfSqNorm(), Diversity(0.5)):
            assert bregman(phi, q, p) >= -1e-12
            assert l_divergence(phi, q, p) >= -1e-12
            assert l_alpha(phi, 0.5, q, p) >= -1e-12

    @given(simplex_points())
    def test_vanishes_on_the_diagonal(self, p):
        phi = Diversity(0.25)
        for kind in (DivergenceKind.bregman(phi), DivergenceKind.l(phi), DivergenceKind.l_alpha(phi, 0.3)):
            assert divergence(kind, p, p) == pytest.approx(0.0, abs=1e-14)

    @given(simplex_points(), simplex_points())
    def test_cross_entropy_l_divergence_is_excess_growth(self, p, q):
        pi = np.array([0.2, 0.3, 0.5])
        assert l_divergence(CrossEntropy(pi), q, p) == pytest.approx(excess_growth(pi, q, p), abs=1e-12)

    @given(simplex_points(), simplex_points())
    def test_l_alpha_scaling(self, p, q):
        phi = Diversity(0.5)
        for alpha in (0.25, 0.5, 1.0):
            direct = l_alpha(phi, alpha, q, p)
            assert direct == pytest.approx(l_divergence(phi.scaled(alpha), q, p) / alpha, rel=1e-9, abs=1e-13)

    def test_asymmetric(self):
        phi = CrossEntropy.equal_weight(2)
        assert bregman(phi, Q, P) != pytest.approx(bregman(phi, P, Q), abs=1e-6)


class TestGuards:

    def test_convex_function_trips_the_nonnegativity_guard(self):
        convex = CallbackFunction("half_sq_norm", lambda x: float(0.5 * x @ x), lambda x: x,
                                  lambda x: np.eye(x.shape[0]))
        with pytest.raises(ConcavityError):
            bregman(convex, Q, P)

    def test_log_argument_guard(self):
        steep = NegHalfSqNorm().scaled(20.0)
        with pytest.raises(ExponentialConcavityError):
            l_divergence(steep, [0.9, 0.1], [0.6, 0.4])

    def test_dimension_mismatch(self):
        with pytest.raises(DimensionMismatchError):
            bregman(NegHalfSqNorm(), [0.2, 0.3, 0.5], P)

    def test_printed_sign_differs(self):
        phi = NegHalfSqNorm()
        corrected = l_alpha(phi, 1e-6, Q, P)
        printed = l_alpha(phi, 1e-6, Q, P, SignConvention.PRINTED)
        assert corrected == pytest.approx(0.01, abs=1e-8)
        assert printed == pytest.approx(-0.01, abs=1e-8)


class TestDivergenceKind:

    def test_tags_and_labels(self):
        phi = NegHalfSqNorm()
        assert DivergenceKind.l(phi).tag is DivergenceTag.L
        assert str(DivergenceKind.l_alpha(phi, 0.5)) == "L_alpha(0.5)[neg_half_sq_norm]"
        assert DivergenceKind.bregman(phi).curvature_alpha == 0.0

    def test_alpha_beyond_declared_range(self):
        with pytest.raises(ValueError):
            DivergenceKind.l_alpha(CrossEntropy.equal_weight(2), 2.0)

    def test_l_needs_exponential_concavity(self):
        phi = CallbackFunction("flat", lambda x: 0.0, lambda x: np.zeros_like(x))
        with pytest.raises(ValueError):
            DivergenceKind.l(phi)


class TestMetric:

    def test_bregman_metric_of_quadratic_is_identity(self):
        metric = metric_matrix(DivergenceKind.bregman(NegHalfSqNorm()), [0.2, 0.3, 0.5])
        np.testing.assert_allclose(metric.entries, np.eye(3))

    def test_bregman_metric_of_equal_weights_at_barycenter(self):
        third = np.full(3, 1.0 / 3.0)
        metric = metric_matrix(DivergenceKind.bregman(CrossEntropy.equal_weight(3)), third)
        np.testing.assert_allclose(metric.entries, 3.0 * np.eye(3))

    def test_l_metric_agrees_on_the_tangent_space(self):
        third = np.full(3, 1.0 / 3.0)
        metric = metric_matrix(DivergenceKind.l(CrossEntropy.equal_weight(3)), third)
        v = np.array([1.0, -1.0, 0.0])
        assert metric.quadratic_form(v) == pytest.approx(6.0)
        np.testing.assert_allclose(metric.tangent_eigenvalues(), [3.0, 3.0])
        assert metric.is_positive_on_tangent(strict=True)

    @given(simplex_points(floor=0.1), tangent_vectors())
    def test_quadratic_order(self, p, v):
        for phi in (CrossEntropy.equal_weight(3), NegHalfSqNorm(), Diversity(0.5)):
            for kind in (DivergenceKind.bregman(phi), DivergenceKind.l(phi), DivergenceKind.l_alpha(phi, 0.5)):
                result = quadratic_order_ratio(kind, p, v)
                assert result.residuals[-1] < 1e-4

    def test_quadratic_order_samples_pass_or_are_excluded(self, rng):
        phi = CrossEntropy.equal_weight(3)
        ps = random_simplex_points(rng, 3, 100, floor=0.1)
        vs = random_tangent_vectors(rng, 3, 100)
        for kind in (DivergenceKind.bregman(phi), DivergenceKind.l(phi)):
            results = [quadratic_order_ratio(kind, p, v) for p, v in zip(ps, vs)]
            assert all(r.passed or r.excluded for r in results)
            cubic = [r for r in results if r.behaviour is OrderBehaviour.CUBIC]
            assert len(cubic) >= 50
            assert all(r.in_band for r in cubic)

    def test_symmetric_point_has_no_cubic_term(self):
        v = np.array([1.0, -1.0]) / math.sqrt(2.0)
        result = quadratic_order_ratio(DivergenceKind.bregman(CrossEntropy.equal_weight(2)), [0.5, 0.5], v)
        assert result.behaviour is OrderBehaviour.CANCELLING
        assert result.excluded and not result.passed
        assert result.ratios[-1] == pytest.approx(16.0, rel=0.05)
        assert "cubic coefficient" in result.reason
        assert abs(result.coefficients[0]) < 1e-3
        assert result.coefficients[1] == pytest.approx(1.0, rel=1e-2)

    def test_cubic_sample_is_in_band(self):
        v = np.array([1.0, -1.0]) / math.sqrt(2.0)
        result = quadratic_order_ratio(DivergenceKind.bregman(CrossEntropy.equal_weight(2)), [0.6, 0.4], v)
        assert result.behaviour is OrderBehaviour.CUBIC
        assert result.in_band and result.passed
        assert result.reason is None

    def test_wrong_metric_is_a_mismatch(self):
        kind = DivergenceKind.bregman(CrossEntropy.equal_weight(3))
        p, v = [0.2, 0.3, 0.5], np.array([1.0, -1.0, 0.0]) / math.sqrt(2.0)
        doubled = MetricMatrix.of(2.0 * metric_matrix(kind, p).entries)
        result = quadratic_order_ratio(kind, p, v, metric=doubled)
        assert result.behaviour is OrderBehaviour.MISMATCH
        assert not result.passed and not result.excluded
        assert "second order" in result.reason

    def test_needs_three_scales(self):
        with pytest.raises(ValueError):
            quadratic_order_ratio(DivergenceKind.bregman(NegHalfSqNorm()), [0.5, 0.5], [1.0, -1.0], eps=(1e-2, 5e-3))

    def test_quadratic_divergence_has_no_cubic_term(self):
        result = quadratic_order_ratio(DivergenceKind.bregman(NegHalfSqNorm()), [0.2, 0.3, 0.5], [1.0, -1.0, 0.0])
        assert result.passed
        assert result.residuals[-1] < 1e-13
