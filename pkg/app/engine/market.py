"""
Simplex arithmetic, market paths, value processes and self-financing machinery.

All values are relative to the market portfolio. Time is a 0-based integer
index; a path with T+1 points has T trading steps.
"""
from typing import Iterable, Optional, Sequence, Union

import numpy as np
from pydantic import field_validator

from app.core.config import settings
from app.core.exceptions import DimensionMismatchError, SelfFinancingError, SimplexDomainError
from app.utils.dto.base import ArrayModel, readonly_array
from app.utils.logger import get_logger

logger = get_logger("engine.market")


def _validated_simplex_rows(weights: np.ndarray) -> np.ndarray:
    """Check (and if needed renormalize) rows of strictly positive weights summing to 1."""
    if weights.shape[-1] < 2:
        raise SimplexDomainError(f"simplex points need at least 2 components, got {weights.shape[-1]}")
    if not np.all(np.isfinite(weights)):
        raise SimplexDomainError("simplex point has non-finite components")
    nonpositive = np.argwhere(weights <= 0.0)
    if nonpositive.size:
        raise SimplexDomainError("simplex point must be strictly positive", index=int(nonpositive[0][-1]))

    gap = np.abs(weights.sum(axis=-1) - 1.0)
    worst = float(np.max(gap))
    if worst <= settings.SIMPLEX_TOL:
        return weights
    if worst <= settings.RENORMALIZE_TOL:
        logger.warning(f"Renormalizing weights off the simplex by {worst:.3e}")
        return weights / weights.sum(axis=-1, keepdims=True)
    raise SimplexDomainError(f"weights sum to 1 +/- {worst:.3e}, beyond tolerance {settings.RENORMALIZE_TOL:g}")


class SimplexPoint(ArrayModel):
    """A point of the open unit simplex (market or portfolio weights)."""

    weights: np.ndarray

    def __init__(self, weights: Union[Sequence[float], np.ndarray], **kwargs):
        array = np.array(weights, dtype=float)
        if array.ndim != 1:
            raise SimplexDomainError(f"simplex point must be a vector, got shape {array.shape}")
        super().__init__(weights=_validated_simplex_rows(array), **kwargs)

    @field_validator("weights", mode="before")
    @classmethod
    def _freeze(cls, value):
        return readonly_array(value, ndim=1)

    @classmethod
    def barycenter(cls, n: int) -> "SimplexPoint":
        return cls(np.full(n, 1.0 / n))

    @property
    def n(self) -> int:
        return self.weights.shape[0]

    def __len__(self) -> int:
        return self.n

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.weights, dtype=dtype)


class TangentVector(ArrayModel):
    """A vector tangent to the simplex: components sum to zero."""

    components: np.ndarray

    @field_validator("components", mode="before")
    @classmethod
    def _check_tangent(cls, value):
        array = readonly_array(value, ndim=1)
        if abs(array.sum()) > settings.SIMPLEX_TOL * max(1.0, float(np.max(np.abs(array), initial=0.0))):
            raise ValueError(f"tangent vector components sum to {array.sum():.3e}, not 0")
        return array

    def __init__(self, components: Union[Sequence[float], np.ndarray], **kwargs):
        super().__init__(components=components, **kwargs)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.components, dtype=dtype)


class ShareVector(ArrayModel):
    """Numbers of shares held in each stock (may be negative)."""

    shares: np.ndarray

    @field_validator("shares", mode="before")
    @classmethod
    def _freeze(cls, value):
        return readonly_array(value, ndim=1)

    def __init__(self, shares: Union[Sequence[float], np.ndarray], **kwargs):
        super().__init__(shares=shares, **kwargs)

    def __array__(self, dtype=None, copy=None):
        return np.asarray(self.shares, dtype=dtype)


class ValueSeries(ArrayModel):
    """Relative value process V(0), ..., V(T)."""

    values: np.ndarray
    flagged_step: Optional[int] = None

    @field_validator("values", mode="before")
    @classmethod
    def _freeze(cls, value):
        array = readonly_array(value, ndim=1)
        if array.shape[0] < 1:
            raise ValueError("value series is empty")
        return array

    @property
    def initial_value(self) -> float:
        return float(self.values[0])

    @property
    def final_value(self) -> float:
        return float(self.values[-1])

    def __len__(self) -> int:
        return self.values.shape[0]


class MarketPath(ArrayModel):
    """Market weights mu(0), ..., mu(T) on the open simplex."""

    points: np.ndarray

    def __init__(self, points: Union[Sequence[Sequence[float]], np.ndarray], **kwargs):
        array = np.array(points, dtype=float)
        if array.ndim != 2 or array.shape[0] < 1:
            raise SimplexDomainError(f"market path must be a non-empty (T+1) x n matrix, got shape {array.shape}")
        super().__init__(points=_validated_simplex_rows(array), **kwargs)

    @field_validator("points", mode="before")
    @classmethod
    def _freeze(cls, value):
        return readonly_array(value, ndim=2)

    @classmethod
    def from_points(cls, points: Iterable[Union[SimplexPoint, Sequence[float]]]) -> "MarketPath":
        return cls(np.vstack([np.asarray(p, dtype=float) for p in points]))

    @property
    def n(self) -> int:
        return self.points.shape[1]

    @property
    def steps(self) -> int:
        return self.points.shape[0] - 1

    @property
    def times(self) -> np.ndarray:
        return np.arange(self.points.shape[0])

    def __len__(self) -> int:
        return self.points.shape[0]

    def __getitem__(self, t: int) -> SimplexPoint:
        return SimplexPoint(self.points[t])

    def increments(self) -> np.ndarray:
        return np.diff(self.points, axis=0)

    def suffix(self, start: int) -> "MarketPath":
        """The path restricted to times start, ..., T (re-indexed from 0)."""
        if not 0 <= start < len(self):
            raise IndexError(f"start {start} outside path of length {len(self)}")
        return MarketPath(self.points[start:])


PointLike = Union[SimplexPoint, Sequence[float], np.ndarray]
SharesLike = Union[ShareVector, Sequence[float], np.ndarray]


def _vector(x) -> np.ndarray:
    return np.asarray(x, dtype=float)


def _share_matrix(shares) -> np.ndarray:
    if isinstance(shares, np.ndarray):
        matrix = np.asarray(shares, dtype=float)
    else:
        matrix = np.vstack([_vector(s) for s in shares])
    if matrix.ndim != 2:
        raise DimensionMismatchError(f"share sequence must be a matrix, got shape {matrix.shape}")
    return matrix


def _check_dims(*vectors: np.ndarray) -> int:
    sizes = {v.shape[-1] for v in vectors}
    if len(sizes) != 1:
        raise DimensionMismatchError(f"dimension mismatch: {sorted(sizes)}")
    return sizes.pop()


def market_weights_from_caps(caps: Sequence[float]) -> SimplexPoint:
    """mu_i = caps_i / sum(caps)."""
    caps = _vector(caps)
    bad = np.argwhere(~(caps > 0.0))
    if bad.size:
        index = int(bad[0][0])
        raise SimplexDomainError(f"capitalization must be strictly positive, got {caps[index]}", index=index)
    return SimplexPoint(caps / caps.sum())


def market_path_from_caps(caps: np.ndarray) -> MarketPath:
    """Row-wise market weights of a (T+1) x n capitalization matrix."""
    caps = np.asarray(caps, dtype=float)
    bad = np.argwhere(~(caps > 0.0))
    if bad.size:
        row, col = (int(i) for i in bad[0])
        raise SimplexDomainError(f"capitalization at time {row} must be strictly positive", index=col)
    return MarketPath(caps / caps.sum(axis=1, keepdims=True))


def value_step(eta: SharesLike, mu_now: PointLike, mu_next: PointLike, v_now: float) -> float:
    """V(t+1) = V(t) + eta(t) . (mu(t+1) - mu(t))."""
    eta, mu_now, mu_next = _vector(eta), _vector(mu_now), _vector(mu_next)
    _check_dims(eta, mu_now, mu_next)
    return float(v_now + eta @ (mu_next - mu_now))


def weights_from_strategy(eta: SharesLike, mu: PointLike, v: float, strict: bool = False) -> np.ndarray:
    """Portfolio weights pi_i = eta_i mu_i / V (may be negative for long-short strategies)."""
    eta, mu = _vector(eta), _vector(mu)
    _check_dims(eta, mu)
    if v == 0:
        raise ZeroDivisionError("portfolio weights are undefined when the value is 0")
    pi = eta * mu / v
    gap = abs(pi.sum() - 1.0)
    if gap > settings.WEIGHT_SUM_TOL:
        message = f"weights sum to 1 +/- {gap:.3e}: eta . mu differs from the value"
        if strict:
            raise SelfFinancingError(message)
        logger.warning(message)
    return pi


def value_multiplicative(path: MarketPath, weight_sequence, v0: float) -> ValueSeries:
    """V(t) = v0 * prod_s pi(s) . (mu(s+1) / mu(s))."""
    if v0 <= 0:
        raise ValueError(f"initial value must be positive, got {v0}")
    if path.steps == 0:
        return ValueSeries(values=np.array([float(v0)]))
    weights = _share_matrix(weight_sequence)
    _check_dims(weights, path.points)
    if weights.shape[0] < path.steps:
        raise DimensionMismatchError(f"need {path.steps} weight vectors, got {weights.shape[0]}")
    weights = weights[: path.steps]

    gaps = np.abs(weights.sum(axis=1) - 1.0)
    if gaps.size and gaps.max() > settings.WEIGHT_SUM_TOL:
        step = int(np.argmax(gaps))
        raise SelfFinancingError(f"portfolio weights at step {step} sum to 1 +/- {gaps[step]:.3e}")

    ratios = path.points[1:] / path.points[:-1]
    factors = np.einsum("ij,ij->i", weights, ratios)
    values = v0 * np.concatenate([[1.0], np.cumprod(factors)])

    flagged = None
    nonpositive = np.flatnonzero(values <= 0.0)
    if nonpositive.size:
        flagged = int(nonpositive[0])
        logger.warning(f"Multiplicative value became nonpositive at step {flagged}; later weights are meaningless")
    return ValueSeries(values=values, flagged_step=flagged)


def value_from_shares(shares, path: MarketPath, v0: Optional[float] = None) -> ValueSeries:
    """Additive recursion V(t+1) = V(t) + eta(t) . (mu(t+1) - mu(t)); V(0) defaults to eta(0) . mu(0)."""
    matrix = _share_matrix(shares)
    _check_dims(matrix, path.points)
    if matrix.shape[0] < path.steps:
        raise DimensionMismatchError(f"need {path.steps} share vectors, got {matrix.shape[0]}")
    start = float(matrix[0] @ path.points[0]) if v0 is None else float(v0)
    gains = np.einsum("ij,ij->i", matrix[: path.steps], path.increments())
    return ValueSeries(values=start + np.concatenate([[0.0], np.cumsum(gains)]))


def self_financing_correction(raw_shares, path: MarketPath, C: float) -> list[ShareVector]:
    """Subtract the defect of self-financibility Q(t) and the constant C from every component."""
    raw = _share_matrix(raw_shares)
    _check_dims(raw, path.points)
    m = raw.shape[0]
    if m > len(path):
        raise DimensionMismatchError(f"{m} share vectors for a path of {len(path)} points")
    mu = path.points[:m]

    book = np.einsum("ij,ij->i", raw, mu)
    step_gains = np.einsum("ij,ij->i", raw[:-1], mu[1:] - mu[:-1])
    traded = np.concatenate([[0.0], np.cumsum(step_gains)])
    defect = book - book[0] - traded

    corrected = raw - defect[:, None] - C
    return [ShareVector(row) for row in corrected]


def check_self_financing(shares, path: MarketPath) -> float:
    """max_t |eta(t) . mu(t+1) - eta(t+1) . mu(t+1)| over the aligned steps."""
    matrix = _share_matrix(shares)
    _check_dims(matrix, path.points)
    m = min(matrix.shape[0], len(path))
    if m < 2:
        return 0.0
    mu_next = path.points[1:m]
    before = np.einsum("ij,ij->i", matrix[: m - 1], mu_next)
    after = np.einsum("ij,ij->i", matrix[1:m], mu_next)
    return float(np.max(np.abs(before - after)))
