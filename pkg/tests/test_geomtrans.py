import math

import numpy as np
import pytest
from hypothesis import given
from scipy import optimize
from scipy.optimize import linear_sum_assignment

from app.core.exceptions import AssignmentTooLargeError, CoincidentPointsError, InversionError, UnsupportedSchemeError
from app.engine.divergence import bregman
from app.engine.genfun import CallbackFunction, CrossEntropy, Diversity, NegHalfSqNorm
from app.engine.geomtrans import (
    DualChart,
    InnerProductCost,
    LogDotCost,
    TransportSample,
    brute_force_assignment,
    check_cyclical_monotonicity,
    dual_coordinates,
    multiplicative_transport_map,
    pythagorean_check,
    rebalancing_comparison,
    riemannian_inner_product,
    transport_samples,
)
from app.engine.strategy import GenerationScheme
from app.utils.numerics import random_simplex_points
from tests.strategies import simplex_points

Q = np.full(3, 1.0 / 3.0)
P = Q + np.array([0.1, -0.1, 0.0])
ORTHOGONAL_R = Q + np.array([0.05, 0.05, -0.1])
ACUTE_R = Q + np.array([0.05, -0.05, 0.0])
OBTUSE_R = Q - np.array([0.05, -0.05, 0.0])


class TestTransportMaps:

    def test_equal_weight_map(self):
        np.testing.assert_allclose(multiplicative_transport_map(CrossEntropy.equal_weight(2), [0.6, 0.4]), [0.4, 0.6])
        np.testing.assert_allclose(multiplicative_transport_map(CrossEntropy.equal_weight(2), [0.5, 0.5]), [0.5, 0.5])

    def test_quadratic_map(self):
        np.testing.assert_allclose(multiplicative_transport_map(NegHalfSqNorm(), [0.6, 0.4]), [0.45098, 0.54902],
                                   atol=5e-6)


class TestCyclicalMonotonicity:

    def test_log_dot_pair(self):
        sample = TransportSample([[0.5, 0.5], [0.6, 0.4]], [[0.5, 0.5], [0.4, 0.6]])
        report = check_cyclical_monotonicity(LogDotCost(), sample, max_cycle=2)
        assert report.passed
        assert report.worst_slack == pytest.approx(math.log(0.25) - math.log(0.24), abs=1e-12)

    def test_inner_product_pair(self):
        sources = np.array([[0.5, 0.5], [0.6, 0.4]])
        sample = TransportSample(sources, -sources)
        report = check_cyclical_monotonicity(InnerProductCost(), sample, max_cycle=2)
        assert report.passed
        assert report.worst_slack == pytest.approx(0.02)  # -1.00 against -1.02

    def test_swapped_targets_fail(self):
        sources = np.array([[0.5, 0.5], [0.6, 0.4]])
        sample = TransportSample(sources, -sources[::-1])
        report = check_cyclical_monotonicity(InnerProductCost(), sample, max_cycle=2)
        assert not report.passed
        assert report.worst_slack < 0
        assert report.worst_cycle == (0, 1)

    def test_generated_samples(self, builtin, rng):
        sources = random_simplex_points(rng, 3, 7, floor=0.01)
        for cost, sample in zip((LogDotCost(), InnerProductCost()), transport_samples(builtin, sources)):
            report = check_cyclical_monotonicity(cost, sample, max_cycle=4)
            assert report.passed, report

    def test_cycle_length_bounds(self):
        sample = TransportSample([[0.5, 0.5], [0.6, 0.4]], [[0.5, 0.5], [0.4, 0.6]])
        with pytest.raises(ValueError):
            check_cyclical_monotonicity(LogDotCost(), sample, max_cycle=3)

    def test_counts_each_cycle_once(self):
        sources = np.array([[0.2, 0.8], [0.4, 0.6], [0.6, 0.4], [0.8, 0.2]])
        report = check_cyclical_monotonicity(InnerProductCost(), TransportSample(sources, -sources), max_cycle=3)
        # 6 pairs plus 4 triples in 2 orientations
        assert report.cycles_checked == 14


class TestAssignment:

    def test_single_point(self):
        result = brute_force_assignment(LogDotCost(), [[0.5, 0.5]], [[0.3, 0.7]])
        assert result.permutation == (0,)
        assert result.identity_optimal

    def test_log_dot_pair_identity(self):
        result = brute_force_assignment(LogDotCost(), [[0.5, 0.5], [0.6, 0.4]], [[0.5, 0.5], [0.4, 0.6]])
        assert result.permutation == (0, 1)
        assert result.cost == pytest.approx(math.log(0.5) + math.log(0.48))

    def test_generated_maps_are_optimal(self, builtin, rng):
        for size in (5, 6):
            sources = random_simplex_points(rng, 3, size, floor=0.01)
            targets = [multiplicative_transport_map(builtin, x) for x in sources]
            assert brute_force_assignment(LogDotCost(), sources, targets).identity_optimal
            gradients = [builtin.gradient(x) for x in sources]
            assert brute_force_assignment(InnerProductCost(), sources, gradients).identity_optimal

    def test_matches_linear_sum_assignment(self, rng):
        sources = random_simplex_points(rng, 3, 6)
        targets = random_simplex_points(rng, 3, 6)
        cost = LogDotCost()
        result = brute_force_assignment(cost, sources, targets)
        rows, cols = linear_sum_assignment(cost.matrix(sources, targets))
        assert result.cost == pytest.approx(float(cost.matrix(sources, targets)[rows, cols].sum()), abs=1e-12)

    def test_size_cap(self, rng):
        points = random_simplex_points(rng, 3, 9)
        with pytest.raises(AssignmentTooLargeError):
            brute_force_assignment(InnerProductCost(), points, points)


class TestDualGeometry:

    def test_dual_coordinates(self):
        assert np.allclose(dual_coordinates(DualChart(phi=NegHalfSqNorm()), [0.6, 0.4]), [-0.6, -0.4])
        assert np.allclose(dual_coordinates(DualChart(phi=CrossEntropy.equal_weight(2)), [0.5, 0.5]), [1.0, 1.0])

    def test_round_trip(self, builtin, rng):
        chart = DualChart(phi=builtin)
        for p in random_simplex_points(rng, 3, 50, floor=0.01):
            assert chart.round_trip_error(p) < 1e-9

    def test_numerical_inverse(self, rng):
        chart = DualChart(phi=Diversity(0.4))
        for p in random_simplex_points(rng, 3, 10, floor=0.05):
            assert np.max(np.abs(chart._solve(chart.dual_coordinates(p)) - p)) < 1e-8

    def test_inverse_without_closed_form(self, rng):
        base = Diversity(0.4)
        chart = DualChart(phi=CallbackFunction("diversity_cb", base.value, base.gradient, base.hessian))
        for p in random_simplex_points(rng, 3, 10, floor=0.05):
            assert np.max(np.abs(chart.inverse(chart.dual_coordinates(p)) - p)) < 1e-8

    def test_converged_root_flagged_unsuccessful_is_kept(self, monkeypatch):
        chart = DualChart(phi=Diversity(0.4))
        p = np.array([0.2, 0.3, 0.5])
        reached = optimize.OptimizeResult(x=np.log(p), success=False, message="xtol=0.000000 is too small")
        monkeypatch.setattr(optimize, "root", lambda *args, **kwargs: reached)
        np.testing.assert_allclose(chart._solve(chart.dual_coordinates(p)), p)

    def test_unconverged_root_raises(self, monkeypatch):
        chart = DualChart(phi=Diversity(0.4))
        stuck = optimize.OptimizeResult(x=np.log([0.6, 0.2, 0.2]), success=False, message="not making progress")
        monkeypatch.setattr(optimize, "root", lambda *args, **kwargs: stuck)
        with pytest.raises(InversionError):
            chart._solve(chart.dual_coordinates([0.2, 0.3, 0.5]))

    def test_inner_products(self):
        assert riemannian_inner_product(NegHalfSqNorm(), Q, [1.0, -1.0, 0.0], [0.5, 0.5, -1.0]) == pytest.approx(0.0)
        phi = CrossEntropy.equal_weight(3)
        assert riemannian_inner_product(phi, Q, [1.0, -1.0, 0.0], [1.0, -1.0, 0.0]) == pytest.approx(6.0)
        assert riemannian_inner_product(phi, Q, [0.0, 0.0, 0.0], [1.0, -1.0, 0.0]) == 0.0

    def test_inner_product_needs_tangent_vectors(self):
        with pytest.raises(ValueError):
            riemannian_inner_product(NegHalfSqNorm(), Q, [1.0, 0.0, 0.0], [1.0, -1.0, 0.0])


class TestPythagorean:

    def test_orthogonal_triplet(self):
        result = pythagorean_check(NegHalfSqNorm(), P, Q, ORTHOGONAL_R)
        assert result.bregman_rq == pytest.approx(0.0075)
        assert result.bregman_qp == pytest.approx(0.01)
        assert result.bregman_rp == pytest.approx(0.0175)
        assert result.equality and result.consistent
        assert result.inner_product == pytest.approx(0.0, abs=1e-12)

    def test_acute_triplet(self):
        result = pythagorean_check(NegHalfSqNorm(), P, Q, ACUTE_R)
        assert result.delta == pytest.approx(0.01)
        assert result.inner_product == pytest.approx(0.01)
        assert result.angle_sign == 1 and result.inequality_holds and result.consistent

    def test_obtuse_triplet(self):
        result = pythagorean_check(NegHalfSqNorm(), P, Q, OBTUSE_R)
        assert result.delta < 0 and result.inner_product < 0
        assert not result.inequality_holds and result.consistent

    @given(simplex_points(), simplex_points(), simplex_points())
    def test_inner_product_matches_excess(self, p, q, r):
        for phi in (NegHalfSqNorm(), CrossEntropy.equal_weight(3), Diversity(0.5)):
            if min(np.abs(p - q).max(), np.abs(q - r).max(), np.abs(p - r).max()) < 1e-9:
                continue
            result = pythagorean_check(phi, p, q, r)
            assert result.delta == pytest.approx(result.inner_product, rel=1e-9, abs=1e-10)

    def test_coincident_points(self):
        with pytest.raises(CoincidentPointsError):
            pythagorean_check(NegHalfSqNorm(), P, Q, Q)


class TestRebalancing:

    def test_orthogonal_triplet_is_a_tie(self):
        result = rebalancing_comparison(NegHalfSqNorm(), P, Q, ORTHOGONAL_R, GenerationScheme.additive(NegHalfSqNorm()))
        assert result.better == "tie"

    def test_acute_triplet_favours_rebalancing(self):
        result = rebalancing_comparison(NegHalfSqNorm(), P, Q, ACUTE_R, GenerationScheme.additive(NegHalfSqNorm()))
        assert result.better == "b"
        assert result.difference == pytest.approx(0.01, abs=1e-12)

    def test_round_trip(self):
        phi = CrossEntropy.equal_weight(3)
        scheme = GenerationScheme.additive(phi)
        result = rebalancing_comparison(phi, P, Q, P, scheme)
        assert result.difference == pytest.approx(bregman(phi, P, Q) + bregman(phi, Q, P), abs=1e-12)
        assert result.better == "b"

    def test_other_schemes_are_rejected(self):
        phi = NegHalfSqNorm()
        with pytest.raises(UnsupportedSchemeError):
            rebalancing_comparison(phi, P, Q, ACUTE_R, GenerationScheme.multiplicative(phi))
