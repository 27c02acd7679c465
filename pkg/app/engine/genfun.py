"""
Generating functions phi on the simplex: evaluation, gradients, Hessians and
alpha-exponential-concavity verification.

Formulas are evaluated on the ambient positive orthant, so gradients and
Hessians are the ambient Euclidean ones.
"""
import math
from abc import ABC, abstractmethod
from typing import Any, Callable, Dict, List, Optional, Sequence

import numpy as np
from pydantic import BaseModel

from app.core.config import settings
from app.core.exceptions import SimplexDomainError
from app.utils.logger import get_logger
from app.utils.numerics import central_gradient, central_hessian, random_simplex_points, tangent_basis

logger = get_logger("engine.genfun")


def as_interior(p) -> np.ndarray:
    """Coerce to a float vector and reject points on or outside the boundary."""
    x = np.asarray(p, dtype=float)
    if x.ndim != 1 or x.shape[0] < 2:
        raise SimplexDomainError(f"expected a vector with n >= 2 components, got shape {x.shape}")
    bad = np.argwhere(~(x > 0.0))
    if bad.size:
        raise SimplexDomainError("generating functions are only defined on the interior", index=int(bad[0][0]))
    return x


class GeneratingFunction(ABC):
    """Smooth function phi with a declared range of exponential concavity."""

    name: str = "phi"
    declared_alpha_max: float = 0.0
    strictly_concave: bool = True

    @abstractmethod
    def value(self, x: np.ndarray) -> float:
        pass

    @abstractmethod
    def gradient(self, x: np.ndarray) -> np.ndarray:
        pass

    def hessian(self, x: np.ndarray) -> np.ndarray:
        """Finite-difference Hessian of the analytic gradient; builtins override it."""
        logger.warning(f"No analytic Hessian for {self.name}; using finite differences")
        return _fd_hessian_from_gradient(self.gradient, x, settings.FD_HESSIAN_STEP)

    def has_analytic_hessian(self) -> bool:
        return type(self).hessian is not GeneratingFunction.hessian

    def inverse_gradient(self, y: np.ndarray) -> Optional[np.ndarray]:
        """Closed-form inverse of the ambient gradient map, when known."""
        return None

    def scaled(self, alpha: float) -> "GeneratingFunction":
        return ScaledFunction(self, alpha)

    def params(self) -> Dict[str, Any]:
        return {}

    def __repr__(self) -> str:
        args = ", ".join(f"{k}={v!r}" for k, v in self.params().items())
        return f"{type(self).__name__}({args})"


def _fd_hessian_from_gradient(gradient: Callable[[np.ndarray], np.ndarray], x: np.ndarray, h: float) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    n = x.shape[0]
    hess = np.empty((n, n))
    for j in range(n):
        step = np.zeros(n)
        step[j] = h
        hess[:, j] = (gradient(x + step) - gradient(x - step)) / (2.0 * h)
    return 0.5 * (hess + hess.T)


class CrossEntropy(GeneratingFunction):
    """phi(p) = sum_i pi_i log p_i; multiplicatively generates the constant-weighted portfolio pi."""

    name = "cross_entropy"
    declared_alpha_max = 1.0

    def __init__(self, pi: Sequence[float]):
        pi = np.array(pi, dtype=float)
        if pi.ndim != 1 or pi.shape[0] < 2:
            raise SimplexDomainError(f"cross entropy needs a weight vector with n >= 2, got shape {pi.shape}")
        negative = np.argwhere(pi < 0.0)
        if negative.size:
            raise SimplexDomainError("cross entropy weights must be nonnegative", index=int(negative[0][0]))
        if abs(pi.sum() - 1.0) > settings.RENORMALIZE_TOL:
            raise SimplexDomainError(f"cross entropy weights sum to {pi.sum()}, not 1")
        pi.setflags(write=False)
        self.pi = pi
        self.strictly_concave = bool(np.all(pi > 0.0))

    @classmethod
    def equal_weight(cls, n: int) -> "CrossEntropy":
        return cls(np.full(n, 1.0 / n))

    def params(self) -> Dict[str, Any]:
        return {"pi": self.pi.tolist()}

    def value(self, x):
        x = as_interior(x)
        support = self.pi > 0.0
        return float(self.pi[support] @ np.log(x[support]))

    def gradient(self, x):
        x = as_interior(x)
        return self.pi / x

    def hessian(self, x):
        x = as_interior(x)
        return np.diag(-self.pi / x ** 2)

    def inverse_gradient(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(self.pi <= 0.0) or np.any(y <= 0.0):
            return None
        return self.pi / y


class NegHalfSqNorm(GeneratingFunction):
    """phi(p) = -|p|^2 / 2; its Bregman divergence is half the squared Euclidean distance."""

    name = "neg_half_sq_norm"
    declared_alpha_max = 1.0

    def value(self, x):
        x = as_interior(x)
        return float(-0.5 * x @ x)

    def gradient(self, x):
        x = as_interior(x)
        return -x

    def hessian(self, x):
        x = as_interior(x)
        return -np.eye(x.shape[0])

    def inverse_gradient(self, y):
        return -np.asarray(y, dtype=float)


class Diversity(GeneratingFunction):
    """phi(p) = (1/lam) log sum_i p_i^lam with 0 < lam < 1 (diversity-weighted portfolio)."""

    name = "diversity"
    declared_alpha_max = 1.0

    def __init__(self, lam: float):
        if not 0.0 < lam < 1.0:
            raise ValueError(f"diversity exponent must lie in (0, 1), got {lam}")
        self.lam = float(lam)

    def params(self) -> Dict[str, Any]:
        return {"lam": self.lam}

    def value(self, x):
        x = as_interior(x)
        return float(math.log(np.sum(x ** self.lam)) / self.lam)

    def gradient(self, x):
        x = as_interior(x)
        return x ** (self.lam - 1.0) / np.sum(x ** self.lam)

    def hessian(self, x):
        x = as_interior(x)
        s = np.sum(x ** self.lam)
        g = x ** (self.lam - 1.0)
        return np.diag((self.lam - 1.0) * x ** (self.lam - 2.0) / s) - self.lam * np.outer(g, g) / s ** 2

    def inverse_gradient(self, y):
        y = np.asarray(y, dtype=float)
        if np.any(y <= 0.0):
            return None
        # gradient is homogeneous of degree -1: x = k y^(1/(lam-1)) with k fixed by the normalizer
        power = 1.0 / (self.lam - 1.0)
        return y ** power / np.sum(y ** (self.lam * power))


class ScaledFunction(GeneratingFunction):
    """alpha * phi."""

    def __init__(self, base: GeneratingFunction, alpha: float):
        if alpha <= 0:
            raise ValueError(f"scale factor must be positive, got {alpha}")
        self.base = base
        self.alpha = float(alpha)
        self.name = f"{alpha:g}*{base.name}"
        self.declared_alpha_max = base.declared_alpha_max / self.alpha
        self.strictly_concave = base.strictly_concave

    def params(self) -> Dict[str, Any]:
        return {"base": self.base, "alpha": self.alpha}

    def value(self, x):
        return self.alpha * self.base.value(x)

    def gradient(self, x):
        return self.alpha * self.base.gradient(x)

    def hessian(self, x):
        return self.alpha * self.base.hessian(x)

    def has_analytic_hessian(self) -> bool:
        return self.base.has_analytic_hessian()

    def inverse_gradient(self, y):
        return self.base.inverse_gradient(np.asarray(y, dtype=float) / self.alpha)


class CallbackFunction(GeneratingFunction):
    """User-supplied generating function. Callbacks must be pure."""

    def __init__(self, name: str,
                 value_fn: Callable[[np.ndarray], float],
                 gradient_fn: Callable[[np.ndarray], np.ndarray],
                 hessian_fn: Optional[Callable[[np.ndarray], np.ndarray]] = None,
                 declared_alpha_max: float = 0.0,
                 strictly_concave: bool = True):
        self.name = name
        self._value_fn = value_fn
        self._gradient_fn = gradient_fn
        self._hessian_fn = hessian_fn
        self.declared_alpha_max = float(declared_alpha_max)
        self.strictly_concave = strictly_concave

    def params(self) -> Dict[str, Any]:
        return {"name": self.name}

    def value(self, x):
        return float(self._value_fn(as_interior(x)))

    def gradient(self, x):
        return np.asarray(self._gradient_fn(as_interior(x)), dtype=float)

    def hessian(self, x):
        if self._hessian_fn is None:
            return super().hessian(x)
        return np.asarray(self._hessian_fn(as_interior(x)), dtype=float)

    def has_analytic_hessian(self) -> bool:
        return self._hessian_fn is not None


# Factory pattern for the builtin catalog
class GeneratingFunctionFactory:
    def __init__(self):
        self.builders: Dict[str, Callable[..., GeneratingFunction]] = {
            "cross_entropy": self._cross_entropy,
            "neg_half_sq_norm": lambda **_: NegHalfSqNorm(),
            "diversity": self._diversity,
        }

    @staticmethod
    def _cross_entropy(pi: Optional[Sequence[float]] = None, n: Optional[int] = None, **_) -> CrossEntropy:
        if pi is not None:
            return CrossEntropy(pi)
        if n is None:
            raise ValueError("cross_entropy needs either pi or n")
        return CrossEntropy.equal_weight(n)

    @staticmethod
    def _diversity(lam: Optional[float] = None, **_) -> Diversity:
        if lam is None:
            raise ValueError("diversity needs lam")
        return Diversity(lam)

    def build(self, name: str, **params) -> GeneratingFunction:
        if name not in self.builders:
            raise ValueError(f"Unknown generating function: {name}")
        return self.builders[name](**params)

    def get_available_functions(self) -> List[str]:
        return list(self.builders.keys())


catalog = GeneratingFunctionFactory()


def eval(phi: GeneratingFunction, p) -> float:  # noqa: A001 - operation name
    """phi(p) at an interior point."""
    return phi.value(as_interior(p))


def gradient(phi: GeneratingFunction, p) -> np.ndarray:
    """Ambient Euclidean gradient of phi at an interior point."""
    return phi.gradient(as_interior(p))


def directional_derivatives(phi: GeneratingFunction, p) -> np.ndarray:
    """All D_{e_i - p} phi(p) = grad phi(p) . (e_i - p) at once."""
    x = as_interior(p)
    g = phi.gradient(x)
    return g - g @ x


def directional_derivative(phi: GeneratingFunction, p, i: int) -> float:
    """D_{e_i - p} phi(p) for a 0-based index i."""
    x = as_interior(p)
    if not 0 <= i < x.shape[0]:
        raise IndexError(f"index {i} out of range for n={x.shape[0]}")
    return float(directional_derivatives(phi, x)[i])


def check_gradient(phi: GeneratingFunction, p, h: Optional[float] = None) -> float:
    """Max absolute gap between the analytic gradient and central finite differences."""
    x = as_interior(p)
    numeric = central_gradient(phi.value, x, h or settings.FD_GRADIENT_STEP)
    return float(np.max(np.abs(numeric - phi.gradient(x))))


class ConcavityReport(BaseModel):
    passed: bool
    alpha: float
    samples: int
    kind: Optional[str] = None  # "midpoint" or "hessian"
    witness: Optional[List[List[float]]] = None
    margin: float = 0.0


def _tangent_curvature(f: Callable[[np.ndarray], float], x: np.ndarray, basis: np.ndarray) -> float:
    """Largest eigenvalue of the finite-difference Hessian of f restricted to the tangent space."""
    h = min(1e-3, 0.05 * float(x.min()))
    local = central_hessian(lambda y: f(x + basis @ y), np.zeros(basis.shape[1]), h)
    return float(np.max(np.linalg.eigvalsh(0.5 * (local + local.T))))


def check_alpha_exp_concavity(phi: GeneratingFunction, alpha: float, samples: int,
                              n: Optional[int] = None, seed: Optional[int] = None) -> ConcavityReport:
    """
    Sampling test of concavity of exp(alpha * phi): midpoint inequalities on random
    pairs plus the sign of the tangent-space Hessian at random points.
    Returns the first violating witness.
    """
    if alpha <= 0:
        raise ValueError(f"alpha must be positive, got {alpha}")
    if samples < 1:
        raise ValueError(f"samples must be >= 1, got {samples}")

    rng = np.random.default_rng(settings.DEFAULT_SEED if seed is None else seed)
    n = _dimension_of(phi, n)

    def big_phi(x: np.ndarray) -> float:
        return math.exp(alpha * phi.value(x))

    ps = random_simplex_points(rng, n, samples)
    qs = random_simplex_points(rng, n, samples)
    for p, q in zip(ps, qs):
        mid = 0.5 * (p + q)
        margin = big_phi(mid) - 0.5 * (big_phi(p) + big_phi(q))
        if margin < -settings.NONNEG_TOL:
            logger.info(f"Midpoint concavity of exp({alpha:g}*{phi.name}) fails by {-margin:.3e}")
            return ConcavityReport(passed=False, alpha=alpha, samples=samples, kind="midpoint",
                                   witness=[p.tolist(), q.tolist()], margin=float(margin))

    # Hessian test points stay off the boundary, where difference quotients of exp(alpha phi) blow up
    basis = tangent_basis(n)
    for x in random_simplex_points(rng, n, samples, floor=min(0.05, 0.5 / n)):
        top = _tangent_curvature(big_phi, x, basis)
        scale = max(abs(big_phi(x)), 1e-300)
        if top > 1e-7 * scale:
            logger.info(f"Tangent Hessian of exp({alpha:g}*{phi.name}) has eigenvalue {top:.3e}")
            return ConcavityReport(passed=False, alpha=alpha, samples=samples, kind="hessian",
                                   witness=[x.tolist()], margin=float(-top))

    return ConcavityReport(passed=True, alpha=alpha, samples=samples)


def _dimension_of(phi: GeneratingFunction, n: Optional[int]) -> int:
    base = phi.base if isinstance(phi, ScaledFunction) else phi
    if isinstance(base, CrossEntropy):
        if n is not None and n != base.pi.shape[0]:
            raise ValueError(f"{phi.name} is defined for n={base.pi.shape[0]}, not n={n}")
        return base.pi.shape[0]
    if n is None:
        return 3
    if n < 2:
        raise ValueError(f"dimension must be >= 2, got {n}")
    return int(n)
