"""
Bregman, L- and L^(alpha)-divergences of a generating function and their
local quadratic (Riemannian) structure.

Every divergence is written D[q : p], the divergence of q from the base point p.
"""
import enum
import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from app.core.config import settings
from app.core.exceptions import ConcavityError, DimensionMismatchError, ExponentialConcavityError
from app.engine.genfun import GeneratingFunction, as_interior
from app.utils.dto.base import ArrayModel, readonly_array
from app.utils.logger import get_logger
from app.utils.metrics import divergence_domain_errors
from app.utils.numerics import tangent_basis

logger = get_logger("engine.divergence")


class DivergenceTag(str, enum.Enum):
    L = "L"
    BREGMAN = "Bregman"
    L_ALPHA = "L_alpha"


class SignConvention(str, enum.Enum):
    # "printed" adds phi(q) - phi(p) instead of subtracting it; only for sensitivity checks
    CORRECTED = "corrected"
    PRINTED = "printed"


def _gap(phi: GeneratingFunction, q: np.ndarray, p: np.ndarray) -> Tuple[float, float]:
    """(grad phi(p) . (q - p), phi(q) - phi(p))."""
    return float(phi.gradient(p) @ (q - p)), phi.value(q) - phi.value(p)


def _points(q, p) -> Tuple[np.ndarray, np.ndarray]:
    q, p = as_interior(q), as_interior(p)
    if q.shape != p.shape:
        raise DimensionMismatchError(f"dimension mismatch: {q.shape[0]} vs {p.shape[0]}")
    return q, p


def _guard_nonnegative(value: float, kind: str, scale: float) -> float:
    if value < -settings.NONNEG_TOL * max(1.0, scale):
        divergence_domain_errors.labels(kind=kind).inc()
        raise ConcavityError(f"{kind} divergence is negative ({value:.3e}); the generating function is not concave enough")
    return value


def _guard_log_argument(increment: float, kind: str) -> None:
    if not 1.0 + increment > 0.0:
        divergence_domain_errors.labels(kind=kind).inc()
        raise ExponentialConcavityError(
            f"log argument 1 + {increment:.6g} is not positive in the {kind} divergence")


def bregman(phi: GeneratingFunction, q, p) -> float:
    """grad phi(p) . (q - p) - (phi(q) - phi(p))."""
    q, p = _points(q, p)
    linear, drift = _gap(phi, q, p)
    return _guard_nonnegative(linear - drift, "bregman", abs(linear) + abs(drift))


def l_divergence(phi: GeneratingFunction, q, p) -> float:
    """log(1 + grad phi(p) . (q - p)) - (phi(q) - phi(p))."""
    q, p = _points(q, p)
    linear, drift = _gap(phi, q, p)
    _guard_log_argument(linear, "l")
    value = math.log1p(linear) - drift
    return _guard_nonnegative(value, "l", abs(linear) + abs(drift))


def l_alpha(phi: GeneratingFunction, alpha: float, q, p,
            convention: SignConvention = SignConvention.CORRECTED) -> float:
    """(1/alpha) log(1 + alpha grad phi(p) . (q - p)) - (phi(q) - phi(p))."""
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    q, p = _points(q, p)
    linear, drift = _gap(phi, q, p)
    _guard_log_argument(alpha * linear, "l_alpha")
    log_term = math.log1p(alpha * linear) / alpha
    if SignConvention(convention) is SignConvention.PRINTED:
        return log_term + drift
    return _guard_nonnegative(log_term - drift, "l_alpha", abs(linear) + abs(drift))


def excess_growth(pi: Sequence[float], q, p) -> float:
    """log(pi . (q/p)) - pi . log(q/p): the L-divergence of the constant-weighted portfolio pi."""
    q, p = _points(q, p)
    pi = np.asarray(pi, dtype=float)
    ratio = q / p
    support = pi > 0.0
    return float(math.log(pi @ ratio) - pi[support] @ np.log(ratio[support]))


def equal_weight_l_alpha(alpha: float, q, p) -> float:
    """Closed form of the L^(alpha)-divergence of phi(p) = (1/n) sum log p_i."""
    q, p = _points(q, p)
    ratio = q / p
    return float(math.log1p(alpha * (ratio.mean() - 1.0)) / alpha - np.log(ratio).mean())


class DivergenceKind(BaseModel):
    """Which divergence of which generating function."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    tag: DivergenceTag
    phi: GeneratingFunction
    alpha: float = 1.0
    convention: SignConvention = SignConvention.CORRECTED

    @model_validator(mode="after")
    def _admissible(self):
        if self.alpha <= 0:
            raise ValueError(f"alpha must be positive, got {self.alpha}")
        if self.tag is DivergenceTag.L and self.phi.declared_alpha_max < 1.0:
            raise ValueError(f"{self.phi.name} is not declared exponentially concave (alpha_max={self.phi.declared_alpha_max})")
        if self.tag is DivergenceTag.L_ALPHA and self.alpha > self.phi.declared_alpha_max:
            raise ValueError(f"alpha={self.alpha} exceeds the declared range {self.phi.declared_alpha_max} of {self.phi.name}")
        return self

    @classmethod
    def l(cls, phi: GeneratingFunction) -> "DivergenceKind":
        return cls(tag=DivergenceTag.L, phi=phi)

    @classmethod
    def bregman(cls, phi: GeneratingFunction) -> "DivergenceKind":
        return cls(tag=DivergenceTag.BREGMAN, phi=phi)

    @classmethod
    def l_alpha(cls, phi: GeneratingFunction, alpha: float,
                convention: SignConvention = SignConvention.CORRECTED) -> "DivergenceKind":
        return cls(tag=DivergenceTag.L_ALPHA, phi=phi, alpha=alpha, convention=convention)

    @property
    def curvature_alpha(self) -> float:
        """Weight of the rank-one gradient term in the metric (0 for Bregman)."""
        if self.tag is DivergenceTag.BREGMAN:
            return 0.0
        return 1.0 if self.tag is DivergenceTag.L else self.alpha

    def evaluate(self, q, p) -> float:
        if self.tag is DivergenceTag.BREGMAN:
            return bregman(self.phi, q, p)
        if self.tag is DivergenceTag.L:
            return l_divergence(self.phi, q, p)
        return l_alpha(self.phi, self.alpha, q, p, self.convention)

    def __str__(self) -> str:
        suffix = f"({self.alpha:g})" if self.tag is DivergenceTag.L_ALPHA else ""
        return f"{self.tag.value}{suffix}[{self.phi.name}]"


def divergence(kind: DivergenceKind, q, p) -> float:
    return kind.evaluate(q, p)


class MetricMatrix(ArrayModel):
    """g_ij(p) of the quadratic approximation D[p + eps v : p] = eps^2/2 v^T G v + O(eps^3)."""

    entries: np.ndarray

    @classmethod
    def of(cls, entries: np.ndarray) -> "MetricMatrix":
        return cls(entries=readonly_array(0.5 * (entries + entries.T), ndim=2))

    def quadratic_form(self, u, v=None) -> float:
        u = np.asarray(u, dtype=float)
        v = u if v is None else np.asarray(v, dtype=float)
        return float(u @ self.entries @ v)

    def tangent_eigenvalues(self) -> np.ndarray:
        basis = tangent_basis(self.entries.shape[0])
        return np.linalg.eigvalsh(basis.T @ self.entries @ basis)

    def is_positive_on_tangent(self, strict: bool = False) -> bool:
        lowest = float(self.tangent_eigenvalues().min())
        scale = max(1.0, float(np.abs(self.entries).max()))
        return lowest > 0.0 if strict else lowest >= -settings.NONNEG_TOL * scale


def metric_matrix(kind: DivergenceKind, p) -> MetricMatrix:
    """-Hess phi(p) for Bregman, -(Hess phi(p) + alpha grad phi grad phi^T) for L and L^(alpha)."""
    p = as_interior(p)
    entries = -kind.phi.hessian(p)
    alpha = kind.curvature_alpha
    if alpha:
        g = kind.phi.gradient(p)
        entries = entries - alpha * np.outer(g, g)
    return MetricMatrix.of(entries)


class OrderBehaviour(str, enum.Enum):
    EXACT = "exact"  # residuals at rounding level, no cubic term
    CUBIC = "cubic"
    CANCELLING = "cancelling"  # cubic coefficient too small to dominate at the sampled scales
    MISMATCH = "mismatch"  # residual of second order: metric does not match the divergence


class QuadraticOrderResult(BaseModel):
    eps: List[float]
    residuals: List[float]
    ratios: List[float]
    # c3, c4, c5 of the signed residual c3 eps^3 + c4 eps^4 + c5 eps^5 (empty when exact)
    coefficients: List[float] = []
    behaviour: OrderBehaviour

    @property
    def in_band(self) -> bool:
        """Smallest-pair halving ratio within [6, 10], the cubic signature."""
        return bool(self.ratios) and 6.0 <= self.ratios[-1] <= 10.0

    @property
    def excluded(self) -> bool:
        return self.behaviour is OrderBehaviour.CANCELLING

    @property
    def passed(self) -> bool:
        if self.behaviour is OrderBehaviour.EXACT:
            return True
        return self.behaviour is OrderBehaviour.CUBIC and self.in_band

    @property
    def reason(self) -> Optional[str]:
        if self.behaviour is OrderBehaviour.CANCELLING:
            c3, c4, c5 = self.coefficients
            return f"cubic coefficient {c3:.3g} is dominated by quartic {c4:.3g} / quintic {c5:.3g} terms"
        if self.behaviour is OrderBehaviour.MISMATCH:
            return f"residual {self.residuals[-1]:.3g} is of second order in eps"
        if self.behaviour is OrderBehaviour.CUBIC and not self.in_band:
            return f"halving ratio {self.ratios[-1]:.3g} outside [6, 10]"
        return None


# quartic and quintic terms at the second-smallest eps, relative to the cubic one;
# below this the last halving ratio is confined to [6.6, 9.6]
CUBIC_DOMINANCE = 0.125
# residual / (eps^2 |form|) above this means the quadratic term itself is off
SECOND_ORDER_SLACK = 0.1


def _higher_order_fit(eps: np.ndarray, signed: np.ndarray) -> np.ndarray:
    """Coefficients c3, c4, c5 of the signed residuals, fitted in units of eps[0]."""
    t = eps / eps[0]
    basis = np.vstack([t ** 3, t ** 4, t ** 5]).T
    scaled = np.linalg.lstsq(basis, signed, rcond=None)[0]
    return scaled / eps[0] ** np.arange(3, 6)


def quadratic_order_ratio(kind: DivergenceKind, p, v,
                          eps: Sequence[float] = (1e-2, 5e-3, 2.5e-3),
                          metric: Optional[MetricMatrix] = None) -> QuadraticOrderResult:
    """Residuals |D[p + eps v : p] - eps^2/2 v^T G v|, their halving ratios and the sample's behaviour."""
    if len(eps) < 3:
        raise ValueError(f"need at least three eps values, got {len(eps)}")
    p = as_interior(p)
    v = np.asarray(v, dtype=float)
    metric = metric or metric_matrix(kind, p)
    form = metric.quadratic_form(v)

    signed = np.array([kind.evaluate(p + e * v, p) - 0.5 * e * e * form for e in eps])
    residuals = [float(abs(r)) for r in signed]
    ratios = [a / b if b > 0 else math.inf for a, b in zip(residuals, residuals[1:])]
    result = dict(eps=list(eps), residuals=residuals, ratios=ratios)

    scale = max(1.0, abs(form))
    if residuals[-1] <= 1e-13 * scale:
        return QuadraticOrderResult(**result, behaviour=OrderBehaviour.EXACT)
    if residuals[-1] > SECOND_ORDER_SLACK * eps[-1] ** 2 * scale:
        return QuadraticOrderResult(**result, behaviour=OrderBehaviour.MISMATCH)

    c3, c4, c5 = (float(c) for c in _higher_order_fit(np.asarray(eps, dtype=float), signed))
    h = eps[-2]
    dominant = abs(c4) * h + abs(c5) * h * h <= CUBIC_DOMINANCE * abs(c3)
    behaviour = OrderBehaviour.CUBIC if dominant else OrderBehaviour.CANCELLING
    return QuadraticOrderResult(**result, coefficients=[c3, c4, c5], behaviour=behaviour)
