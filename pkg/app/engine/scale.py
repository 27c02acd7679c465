"""
Scale functions g: strictly increasing transforms of the value in which a
pathwise decomposition becomes additive.

Only the affine family g(x) = c1 x + c2 and the shifted logarithms
g(x) = c2 log(c1 + x) + c3 solve g' g''' = 2 (g'')^2.
"""
import math
from abc import ABC, abstractmethod
from typing import Callable, Optional

from app.core.exceptions import InvalidScaleFunctionError


class ScaleFunction(ABC):
    name: str = "g"

    @abstractmethod
    def value(self, x: float) -> float:
        pass

    @abstractmethod
    def d1(self, x: float) -> float:
        pass

    @abstractmethod
    def d2(self, x: float) -> float:
        pass

    @abstractmethod
    def d3(self, x: float) -> float:
        pass

    def domain_lower_bound(self) -> float:
        """Values at or below this bound are outside the domain of g."""
        return -math.inf

    def in_domain(self, x: float) -> bool:
        return x > self.domain_lower_bound()

    def __call__(self, x: float) -> float:
        return self.value(x)


class LinearScale(ScaleFunction):
    """g(x) = c1 x + c2 with c1 > 0."""

    name = "linear"

    def __init__(self, c1: float = 1.0, c2: float = 0.0):
        if c1 <= 0:
            raise InvalidScaleFunctionError(f"linear scale needs c1 > 0, got {c1}")
        self.c1, self.c2 = float(c1), float(c2)

    def value(self, x):
        return self.c1 * x + self.c2

    def d1(self, x):
        return self.c1

    def d2(self, x):
        return 0.0

    def d3(self, x):
        return 0.0


class ShiftedLogScale(ScaleFunction):
    """g(x) = c2 log(c1 + x) + c3 with c1 >= 0, c2 > 0, defined for x > -c1."""

    name = "shifted_log"

    def __init__(self, c1: float = 0.0, c2: float = 1.0, c3: float = 0.0):
        if c1 < 0 or c2 <= 0:
            raise InvalidScaleFunctionError(f"shifted log scale needs c1 >= 0 and c2 > 0, got c1={c1}, c2={c2}")
        self.c1, self.c2, self.c3 = float(c1), float(c2), float(c3)

    def domain_lower_bound(self) -> float:
        return -self.c1

    def value(self, x):
        return self.c2 * math.log(self.c1 + x) + self.c3

    def d1(self, x):
        return self.c2 / (self.c1 + x)

    def d2(self, x):
        return -self.c2 / (self.c1 + x) ** 2

    def d3(self, x):
        return 2.0 * self.c2 / (self.c1 + x) ** 3


class PowerScale(ScaleFunction):
    """g(x) = x^k on x > 0 (foil unless k = 1)."""

    name = "power"

    def __init__(self, k: float):
        if k <= 0:
            raise InvalidScaleFunctionError(f"power scale needs k > 0, got {k}")
        self.k = float(k)

    def domain_lower_bound(self) -> float:
        return 0.0

    def value(self, x):
        return x ** self.k

    def d1(self, x):
        return self.k * x ** (self.k - 1.0)

    def d2(self, x):
        return self.k * (self.k - 1.0) * x ** (self.k - 2.0)

    def d3(self, x):
        return self.k * (self.k - 1.0) * (self.k - 2.0) * x ** (self.k - 3.0)


class ExpScale(ScaleFunction):
    """g(x) = e^x (foil)."""

    name = "exp"

    def value(self, x):
        return math.exp(x)

    d1 = d2 = d3 = value


class CallbackScale(ScaleFunction):
    """A user scale function; missing derivatives come from central differences."""

    def __init__(self, name: str, fn: Callable[[float], float],
                 d1: Optional[Callable[[float], float]] = None,
                 d2: Optional[Callable[[float], float]] = None,
                 d3: Optional[Callable[[float], float]] = None,
                 h: float = 1e-3):
        self.name = name
        self._fn = fn
        self._derivatives = (d1, d2, d3)
        self.h = h

    def value(self, x):
        return float(self._fn(x))

    def _fd(self, order: int, x: float) -> float:
        h, f = self.h, self._fn
        if order == 1:
            return (f(x + h) - f(x - h)) / (2 * h)
        if order == 2:
            return (f(x + h) - 2 * f(x) + f(x - h)) / h ** 2
        return (f(x + 2 * h) - 2 * f(x + h) + 2 * f(x - h) - f(x - 2 * h)) / (2 * h ** 3)

    def _derivative(self, order: int, x: float) -> float:
        exact = self._derivatives[order - 1]
        return float(exact(x)) if exact is not None else self._fd(order, x)

    def d1(self, x):
        return self._derivative(1, x)

    def d2(self, x):
        return self._derivative(2, x)

    def d3(self, x):
        return self._derivative(3, x)


def ode_residual(g: ScaleFunction, x: float) -> float:
    """g'(x) g'''(x) - 2 g''(x)^2; rejects points where g is not increasing."""
    slope = g.d1(x)
    if not slope > 0:
        raise InvalidScaleFunctionError(f"{g.name} is not strictly increasing at x={x} (g'={slope})")
    return slope * g.d3(x) - 2.0 * g.d2(x) ** 2


def log_scale() -> ShiftedLogScale:
    return ShiftedLogScale(0.0, 1.0, 0.0)


def identity_scale() -> LinearScale:
    return LinearScale(1.0, 0.0)


def alpha_c_scale(alpha: float, C: float) -> ShiftedLogScale:
    """(1/alpha) log(C + x)."""
    if alpha <= 0:
        raise InvalidScaleFunctionError(f"alpha must be positive, got {alpha}")
    return ShiftedLogScale(C, 1.0 / alpha, 0.0)
