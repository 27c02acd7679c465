"""
Transport and geometry oracles: c-cyclical monotonicity of generated maps,
exhaustive assignment, the dually flat Bregman geometry and the Pythagorean
comparison of rebalancing schedules.
"""
import itertools
import math
from abc import ABC, abstractmethod
from typing import Callable, List, Optional, Tuple, Union

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator
from scipy import optimize

from app.core.config import settings
from app.core.exceptions import (
    AssignmentTooLargeError,
    CoincidentPointsError,
    DimensionMismatchError,
    InvalidScaleFunctionError,
    InversionError,
    SimplexDomainError,
    UnsupportedSchemeError,
)
from app.engine.divergence import bregman
from app.engine.genfun import GeneratingFunction, as_interior
from app.engine.market import MarketPath, TangentVector
from app.engine.scale import CallbackScale, ScaleFunction, ode_residual
from app.engine.strategy import GenerationScheme, SchemeTag, multiplicative_portfolio_map, run_strategy
from app.utils.dto.base import ArrayModel, readonly_array
from app.utils.logger import get_logger
from app.utils.numerics import tangent_basis

logger = get_logger("engine.geomtrans")


# Costs

class CostFunction(ABC):
    name: str = "cost"

    @abstractmethod
    def __call__(self, x: np.ndarray, y: np.ndarray) -> float:
        pass

    def matrix(self, sources: np.ndarray, targets: np.ndarray) -> np.ndarray:
        """C[i, j] = c(x_i, y_j)."""
        return np.array([[self(x, y) for y in targets] for x in sources])


class LogDotCost(CostFunction):
    """c(p, q) = log(p . q) on the simplex times its closure."""

    name = "log_dot"

    def __call__(self, x, y):
        dot = float(np.asarray(x, dtype=float) @ np.asarray(y, dtype=float))
        if not dot > 0.0:
            raise SimplexDomainError(f"log-dot cost needs p . q > 0, got {dot:.3e}")
        return math.log(dot)


class InnerProductCost(CostFunction):
    """c(p, v) = p . v."""

    name = "inner_product"

    def __call__(self, x, y):
        return float(np.asarray(x, dtype=float) @ np.asarray(y, dtype=float))


class TransportSample(ArrayModel):
    """Pairs x_k -> y_k of a transport map."""

    sources: np.ndarray
    targets: np.ndarray

    def __init__(self, sources, targets, **kwargs):
        super().__init__(sources=readonly_array(sources, ndim=2), targets=readonly_array(targets, ndim=2), **kwargs)

    @model_validator(mode="after")
    def _aligned(self):
        if self.sources.shape[0] != self.targets.shape[0]:
            raise ValueError(f"{self.sources.shape[0]} sources but {self.targets.shape[0]} targets")
        return self

    @classmethod
    def from_map(cls, sources, transport: Callable[[np.ndarray], np.ndarray]) -> "TransportSample":
        sources = np.asarray(sources, dtype=float)
        return cls(sources, np.vstack([transport(x) for x in sources]))

    def __len__(self) -> int:
        return self.sources.shape[0]


# Transport maps

def multiplicative_transport_map(phi: GeneratingFunction, p) -> np.ndarray:
    """T_i(p) = (pi_i(p)/p_i) / sum_j pi_j(p)/p_j, with pi the multiplicative portfolio map."""
    p = as_interior(p)
    ratios = multiplicative_portfolio_map(phi, p) / p
    total = float(ratios.sum())
    if total == 0.0:
        raise ZeroDivisionError(f"transport map of {phi.name} has a zero normalizer at p={p}")
    return ratios / total


class MonotonicityReport(BaseModel):
    passed: bool
    cycles_checked: int
    worst_slack: float
    worst_cycle: Optional[Tuple[int, ...]] = None


def _cycles(size: int, max_cycle: int):
    # each cycle is listed once per rotation class: its smallest index comes first
    for length in range(2, max_cycle + 1):
        for first in range(size):
            for rest in itertools.permutations(range(first + 1, size), length - 1):
                yield (first, *rest)


def check_cyclical_monotonicity(cost: CostFunction, sample: TransportSample, max_cycle: int) -> MonotonicityReport:
    """sum_k c(x_ik, y_ik) <= sum_k c(x_ik, y_ik+1) over every index cycle of length 2..max_cycle."""
    if not 2 <= max_cycle <= len(sample):
        raise ValueError(f"max_cycle must lie in [2, {len(sample)}], got {max_cycle}")
    costs = cost.matrix(sample.sources, sample.targets)

    worst, worst_cycle, count = math.inf, None, 0
    for cycle in _cycles(len(sample), max_cycle):
        shifted = cycle[1:] + cycle[:1]
        slack = float(costs[cycle, shifted].sum() - costs[cycle, cycle].sum())
        count += 1
        if slack < worst:
            worst, worst_cycle = slack, cycle

    passed = worst >= -settings.MONOTONICITY_SLACK
    if not passed:
        logger.info(f"Cycle {worst_cycle} violates {cost.name} monotonicity by {-worst:.3e}")
    return MonotonicityReport(passed=passed, cycles_checked=count, worst_slack=worst, worst_cycle=worst_cycle)


class AssignmentResult(BaseModel):
    permutation: Tuple[int, ...]
    cost: float
    identity_cost: float

    @property
    def identity_optimal(self) -> bool:
        return self.identity_cost <= self.cost + settings.MONOTONICITY_SLACK


def brute_force_assignment(cost: CostFunction, sources, targets) -> AssignmentResult:
    """Exhaustive minimum of sum_i c(x_i, y_sigma(i)) over permutations sigma."""
    sources = np.atleast_2d(np.asarray(sources, dtype=float))
    targets = np.atleast_2d(np.asarray(targets, dtype=float))
    size = sources.shape[0]
    if targets.shape[0] != size:
        raise DimensionMismatchError(f"{size} sources but {targets.shape[0]} targets")
    if size > settings.MAX_ASSIGNMENT_SIZE:
        raise AssignmentTooLargeError(f"exhaustive assignment is capped at {settings.MAX_ASSIGNMENT_SIZE} points, got {size}")

    costs = cost.matrix(sources, targets)
    rows = np.arange(size)
    best, best_cost = None, math.inf
    for perm in itertools.permutations(range(size)):
        total = float(costs[rows, perm].sum())
        if total < best_cost:
            best, best_cost = perm, total
    return AssignmentResult(permutation=tuple(best), cost=best_cost, identity_cost=float(np.trace(costs)))


# Dually flat geometry

class DualChart(BaseModel):
    """Dual coordinates p* = grad phi(p) of a concave generating function."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    phi: GeneratingFunction

    def dual_coordinates(self, p) -> np.ndarray:
        return self.phi.gradient(as_interior(p))

    def inverse(self, p_star) -> np.ndarray:
        """Solve grad phi(x) = p_star over the positive orthant."""
        p_star = np.asarray(p_star, dtype=float)
        closed_form = self.phi.inverse_gradient(p_star)
        if closed_form is not None:
            return closed_form
        return self._solve(p_star)

    def _solve(self, p_star: np.ndarray) -> np.ndarray:
        n = p_star.shape[0]

        def residual(z):
            return self.phi.gradient(np.exp(z)) - p_star

        def jacobian(z):
            x = np.exp(z)
            return self.phi.hessian(x) * x[None, :]

        solution = optimize.root(residual, np.full(n, -math.log(n)), jac=jacobian, method="hybr", tol=1e-12)
        x = np.exp(solution.x)
        miss = float(np.max(np.abs(self.phi.gradient(x) - p_star)))
        # hybr may report failure on a root it already reached; judge by the residual
        if not np.all(np.isfinite(x)) or not miss <= 1e-9 * max(1.0, float(np.max(np.abs(p_star)))):
            raise InversionError(f"could not invert the gradient of {self.phi.name}: {solution.message} (miss {miss:.3e})")
        return x

    def round_trip_error(self, p) -> float:
        p = as_interior(p)
        return float(np.max(np.abs(self.inverse(self.dual_coordinates(p)) - p)))


def dual_coordinates(chart: DualChart, p) -> np.ndarray:
    return chart.dual_coordinates(p)


def _tangent(v) -> np.ndarray:
    if isinstance(v, TangentVector):
        return np.asarray(v)
    return np.asarray(TangentVector(v))


def riemannian_inner_product(phi: GeneratingFunction, p, u, v) -> float:
    """u^T (-Hess phi(p)) v for tangent vectors u, v."""
    u, v = _tangent(u), _tangent(v)
    return float(u @ (-phi.hessian(as_interior(p))) @ v)


class PythagoreanResult(BaseModel):
    bregman_rq: float
    bregman_qp: float
    bregman_rp: float
    delta: float
    inner_product: float
    angle_sign: int
    inequality_holds: bool
    equality: bool
    consistent: bool


def _sign(x: float, tol: float) -> int:
    return 0 if abs(x) <= tol else (1 if x > 0 else -1)


def dual_velocity_in_primal(phi: GeneratingFunction, q: np.ndarray, target: np.ndarray) -> np.ndarray:
    """Primal tangent vector u at q with Hess phi(q) u = target* - q* on the tangent space."""
    basis = tangent_basis(q.shape[0])
    hessian = phi.hessian(q)
    w = phi.gradient(target) - phi.gradient(q)
    a = np.linalg.solve(basis.T @ hessian @ basis, basis.T @ w)
    return basis @ a


def pythagorean_check(phi: GeneratingFunction, p, q, r) -> PythagoreanResult:
    """
    Compare D[r:q] + D[q:p] with D[r:p] (Bregman divergences of phi).

    The angle at q is measured between the dual geodesic from q towards p and
    the primal geodesic from q towards r, in the Riemannian metric -Hess phi(q).
    """
    p, q, r = as_interior(p), as_interior(q), as_interior(r)
    for (a, b), names in zip(((p, q), (q, r), (p, r)), ("pq", "qr", "pr")):
        if np.allclose(a, b, rtol=0.0, atol=1e-15):
            raise CoincidentPointsError(f"points {names[0]} and {names[1]} coincide")

    rq, qp, rp = bregman(phi, r, q), bregman(phi, q, p), bregman(phi, r, p)
    delta = rq + qp - rp
    toward_p = dual_velocity_in_primal(phi, q, p)
    inner = riemannian_inner_product(phi, q, toward_p, r - q)

    tol = settings.PYTHAGOREAN_TOL
    sign_delta, sign_inner = _sign(delta, tol), _sign(inner, tol)
    return PythagoreanResult(
        bregman_rq=rq, bregman_qp=qp, bregman_rp=rp,
        delta=delta, inner_product=inner, angle_sign=sign_inner,
        inequality_holds=delta >= -tol,
        equality=sign_delta == 0,
        consistent=sign_delta == sign_inner,
    )


class RebalancingComparison(BaseModel):
    value_a: float
    value_b: float
    difference: float
    better: str


def rebalancing_comparison(phi: GeneratingFunction, p, q, r, scheme: GenerationScheme) -> RebalancingComparison:
    """
    Additive strategy traded (a) once from p straight to r, or (b) with an
    intermediate rebalance at q. b - a equals D[r:q] + D[q:p] - D[r:p].
    """
    if scheme.tag is not SchemeTag.ADDITIVE:
        raise UnsupportedSchemeError("rebalancing comparison is implemented for additive generation only")
    additive = GenerationScheme.additive(phi, scheme.v0)
    direct = run_strategy(additive, MarketPath([p, r])).values.final_value
    via_q = run_strategy(additive, MarketPath([p, q, r])).values.final_value

    difference = via_q - direct
    tie = abs(difference) <= settings.MONOTONICITY_SLACK
    better = "tie" if tie else ("b" if difference > 0 else "a")
    return RebalancingComparison(value_a=direct, value_b=via_q, difference=difference, better=better)


def scale_ode_residual(g: Union[ScaleFunction, Callable[[float], float]], x: float) -> float:
    """g'(x) g'''(x) - 2 g''(x)^2; zero exactly on the affine and shifted-log families."""
    if not isinstance(g, ScaleFunction):
        g = CallbackScale(getattr(g, "__name__", "g"), g)
    if not x > g.domain_lower_bound():
        raise InvalidScaleFunctionError(f"x={x} is outside the domain of {g.name}")
    return ode_residual(g, x)


def transport_samples(phi: GeneratingFunction, sources) -> List[TransportSample]:
    """The two generated transport samples of phi: (log-dot, T) and (inner product, grad phi)."""
    return [
        TransportSample.from_map(sources, lambda x: multiplicative_transport_map(phi, x)),
        TransportSample.from_map(sources, phi.gradient),
    ]
