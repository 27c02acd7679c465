"""
Multiplicative, additive and (alpha, C)-generated trading strategies, their
runs over market paths, and pathwise value decompositions.

Multiplicative generation is executed as the (1, 0) point of the (alpha, C)
family; the portfolio-weight formulation is kept for cross-checks.
"""
import enum
import math
import time
from typing import List, NamedTuple, Optional, Tuple

import numpy as np
from pydantic import BaseModel, ConfigDict, model_validator

from app.core.config import settings
from app.core.exceptions import (
    DegenerateTangentError,
    ExponentialConcavityError,
    NonPositiveValueError,
    UnsupportedSchemeError,
)
from app.engine.divergence import DivergenceKind, SignConvention
from app.engine.genfun import GeneratingFunction, as_interior, directional_derivatives
from app.engine.market import MarketPath, ShareVector, ValueSeries, value_step
from app.engine.scale import ScaleFunction, alpha_c_scale, identity_scale, log_scale
from app.utils.dto.base import ArrayModel, readonly_array
from app.utils.dto.records import BacktestRecord
from app.utils.logger import get_logger, log_strategy_run
from app.utils.metrics import decomposition_residual, strategy_run_duration, strategy_runs_total

logger = get_logger("engine.strategy")


class SchemeTag(str, enum.Enum):
    MULTIPLICATIVE = "multiplicative"
    ADDITIVE = "additive"
    ALPHA_C = "alpha_c"


class GenerationScheme(BaseModel):
    """How shares are generated from phi, plus the initial relative value."""

    model_config = ConfigDict(frozen=True, arbitrary_types_allowed=True)

    tag: SchemeTag
    phi: GeneratingFunction
    alpha: Optional[float] = None
    C: float = 0.0
    v0: float = settings.DEFAULT_V0
    convention: SignConvention = SignConvention.CORRECTED

    @model_validator(mode="after")
    def _compatible(self):
        if self.tag is SchemeTag.MULTIPLICATIVE:
            if self.phi.declared_alpha_max < 1.0:
                raise ValueError(f"{self.phi.name} is not declared exponentially concave")
            if self.v0 <= 0:
                raise ValueError(f"multiplicative generation needs v0 > 0, got {self.v0}")
        elif self.tag is SchemeTag.ALPHA_C:
            if self.alpha is None or self.alpha <= 0:
                raise ValueError(f"alpha_c generation needs alpha > 0, got {self.alpha}")
            if self.alpha > self.phi.declared_alpha_max:
                raise ValueError(f"alpha={self.alpha} exceeds the declared range {self.phi.declared_alpha_max} of {self.phi.name}")
            if self.C < 0:
                raise ValueError(f"C must be nonnegative, got {self.C}")
        return self

    @classmethod
    def multiplicative(cls, phi: GeneratingFunction, v0: float = settings.DEFAULT_V0) -> "GenerationScheme":
        return cls(tag=SchemeTag.MULTIPLICATIVE, phi=phi, v0=v0)

    @classmethod
    def additive(cls, phi: GeneratingFunction, v0: float = settings.DEFAULT_V0) -> "GenerationScheme":
        return cls(tag=SchemeTag.ADDITIVE, phi=phi, v0=v0)

    @classmethod
    def alpha_c(cls, phi: GeneratingFunction, alpha: float, C: float,
                v0: float = settings.DEFAULT_V0,
                convention: SignConvention = SignConvention.CORRECTED) -> "GenerationScheme":
        return cls(tag=SchemeTag.ALPHA_C, phi=phi, alpha=alpha, C=C, v0=v0, convention=convention)

    def with_v0(self, v0: float) -> "GenerationScheme":
        return type(self)(tag=self.tag, phi=self.phi, alpha=self.alpha, C=self.C, v0=v0,
                          convention=self.convention)

    @property
    def family_point(self) -> Optional[Tuple[float, float]]:
        """(alpha, C) inside the generalized family; None for additive generation."""
        if self.tag is SchemeTag.MULTIPLICATIVE:
            return 1.0, 0.0
        if self.tag is SchemeTag.ALPHA_C:
            return self.alpha, self.C
        return None

    @property
    def divergence_kind(self) -> DivergenceKind:
        if self.tag is SchemeTag.MULTIPLICATIVE:
            return DivergenceKind.l(self.phi)
        if self.tag is SchemeTag.ADDITIVE:
            return DivergenceKind.bregman(self.phi)
        return DivergenceKind.l_alpha(self.phi, self.alpha, self.convention)

    @property
    def scale(self) -> ScaleFunction:
        return scale_for_scheme(self)

    @property
    def label(self) -> str:
        if self.tag is SchemeTag.ALPHA_C:
            return f"alpha_c({self.alpha:g},{self.C:g})"
        return self.tag.value


def scale_for_scheme(scheme: GenerationScheme) -> ScaleFunction:
    """g with g(V(t)) - g(V(0)) = drift + cumulative divergence."""
    if scheme.tag is SchemeTag.MULTIPLICATIVE:
        return log_scale()
    if scheme.tag is SchemeTag.ADDITIVE:
        return identity_scale()
    if scheme.tag is SchemeTag.ALPHA_C:
        return alpha_c_scale(scheme.alpha, scheme.C)
    raise UnsupportedSchemeError(f"no scale function for {scheme.tag}")


# Portfolio maps

def multiplicative_portfolio_map(phi: GeneratingFunction, p) -> np.ndarray:
    """pi_i(p) = p_i (1 + D_{e_i - p} phi(p))."""
    p = as_interior(p)
    pi = p * (1.0 + directional_derivatives(phi, p))
    return _checked_weights(pi, phi)


def multiplicative_map_via_tangent_plane(phi: GeneratingFunction, p) -> np.ndarray:
    """Same map from the tangent hyperplane of Phi = exp(phi): pi_i proportional to c_i p_i."""
    p = as_interior(p)
    big_phi = math.exp(phi.value(p))
    grad_big_phi = big_phi * phi.gradient(p)
    c = grad_big_phi + big_phi - grad_big_phi @ p
    denominator = float(c @ p)
    if not denominator > 0.0:
        raise DegenerateTangentError(f"tangent plane of exp({phi.name}) gives sum c_j p_j = {denominator:.3e}")
    return _checked_weights(c * p / denominator, phi)


def _checked_weights(pi: np.ndarray, phi: GeneratingFunction) -> np.ndarray:
    if pi.min() < -settings.MAP_NEGATIVE_TOL:
        raise ExponentialConcavityError(
            f"portfolio map of {phi.name} has weight {pi.min():.3e} < 0; phi is not exponentially concave here")
    return pi


def multiplicative_weight_path(phi: GeneratingFunction, path: MarketPath) -> np.ndarray:
    """pi(mu(t)) for every t, one row per time."""
    return np.vstack([multiplicative_portfolio_map(phi, mu) for mu in path.points])


# Share rules

def additive_shares(phi: GeneratingFunction, mu, v: float) -> ShareVector:
    """eta_i = D_{e_i - mu} phi(mu) + v."""
    return ShareVector(directional_derivatives(phi, mu) + v)


def alpha_c_shares(phi: GeneratingFunction, alpha: float, C: float, mu, v: float) -> ShareVector:
    """eta_i = alpha (C + v) D_{e_i - mu} phi(mu) + v."""
    return ShareVector(alpha * (C + v) * directional_derivatives(phi, mu) + v)


def alpha_c_weights(phi: GeneratingFunction, alpha: float, C: float, mu, v: float) -> np.ndarray:
    """((C + v)/v) pi^(alpha)(mu) - (C/v) mu, with pi^(alpha) the multiplicative map of alpha phi."""
    if v == 0:
        raise ZeroDivisionError("portfolio weights are undefined when the value is 0")
    mu = as_interior(mu)
    scaled_map = mu * (1.0 + alpha * directional_derivatives(phi, mu))
    return (C + v) / v * scaled_map - C / v * mu


def shares_from_scale(g: ScaleFunction, phi: GeneratingFunction, mu, v: float) -> ShareVector:
    """eta_i = D_{e_i - mu} phi(mu) / g'(v) + v, the share rule behind any scale function g."""
    slope = g.d1(v)
    if not slope > 0:
        raise NonPositiveValueError(f"scale function {g.name} has g'({v:g}) = {slope:g}")
    return ShareVector(directional_derivatives(phi, mu) / slope + v)


def equal_weight_sweep_shares(alpha: float, mu, v: float) -> ShareVector:
    """eta_i = (1 + alpha v)(1/(n mu_i) - 1) + v: the (alpha, 1/alpha) strategy of the equal-weight cross entropy."""
    mu = as_interior(mu)
    return ShareVector((1.0 + alpha * v) * (1.0 / (mu.shape[0] * mu) - 1.0) + v)


def equal_weight_sweep_weights(alpha: float, mu, v: float) -> np.ndarray:
    """Weights of equal_weight_sweep_shares: long (1 + alpha v)/v of the equal-weight portfolio, short the market."""
    if v == 0:
        raise ZeroDivisionError("portfolio weights are undefined when the value is 0")
    mu = as_interior(mu)
    n = mu.shape[0]
    return (1.0 + alpha * v) / v / n - (1.0 + alpha * v - v) / v * mu


def scheme_shares(scheme: GenerationScheme, mu, v: float) -> ShareVector:
    point = scheme.family_point
    if point is None:
        return additive_shares(scheme.phi, mu, v)
    return alpha_c_shares(scheme.phi, point[0], point[1], mu, v)


# Runs

class StrategyState(ArrayModel):
    eta: np.ndarray
    value: float
    time: int
    # False once V <= -C under (alpha, C)-generation; the decomposition stops there
    in_domain: bool = True

    def __init__(self, eta, value: float, time: int, in_domain: bool = True, **kwargs):
        super().__init__(eta=readonly_array(eta, ndim=1), value=value, time=time, in_domain=in_domain, **kwargs)

    @property
    def shares(self) -> ShareVector:
        return ShareVector(self.eta)


class StrategyRun(NamedTuple):
    states: List[StrategyState]
    values: ValueSeries


def run_strategy(scheme: GenerationScheme, path: MarketPath) -> StrategyRun:
    """Alternate eta(t) = shares(mu(t), V(t)) and V(t+1) = V(t) + eta(t) . (mu(t+1) - mu(t))."""
    label = scheme.tag.value
    started = time.perf_counter()
    try:
        run = _run(scheme, path)
    except Exception:
        strategy_runs_total.labels(scheme=label, status="failed").inc()
        raise
    strategy_runs_total.labels(scheme=label, status="completed").inc()
    strategy_run_duration.labels(scheme=label).observe(time.perf_counter() - started)
    log_strategy_run(logger, scheme.label, path.steps, path.n, run.values.final_value)
    return run


def _run(scheme: GenerationScheme, path: MarketPath) -> StrategyRun:
    point = scheme.family_point
    floor = -point[1] if point is not None else -math.inf
    states: List[StrategyState] = []
    values = [float(scheme.v0)]
    v = float(scheme.v0)
    warned = False

    for t, mu in enumerate(path.points):
        if scheme.tag is SchemeTag.MULTIPLICATIVE and v <= 0:
            raise NonPositiveValueError("multiplicative value is not positive; portfolio weights are undefined", step=t)
        in_domain = v > floor
        if not in_domain and not warned:
            logger.warning(f"{scheme.label}: value {v:.6g} <= -C at step {t}; decomposition is undefined from here")
            warned = True

        eta = np.asarray(scheme_shares(scheme, mu, v))
        states.append(StrategyState(eta, v, t, in_domain))
        if t == path.steps:
            break

        mu_next = path.points[t + 1]
        # (alpha, C) runs may cross -C and get truncated later; multiplicative runs cannot continue
        if scheme.tag is SchemeTag.MULTIPLICATIVE:
            growth = float(scheme.phi.gradient(mu) @ (mu_next - mu))
            if not 1.0 + growth > settings.LOG_ARG_FLOOR:
                raise ExponentialConcavityError(
                    f"1 + grad phi . dmu = {1.0 + growth:.3e} at or below {settings.LOG_ARG_FLOOR:g}", step=t)
        v = value_step(eta, mu, mu_next, v)
        values.append(v)

    return StrategyRun(states=states, values=ValueSeries(values=np.asarray(values)))


# Decomposition

class DecompositionReport(ArrayModel):
    """g(V(t)) - g(V(0)) against phi(mu(t)) - phi(mu(0)) plus accumulated divergence."""

    scheme: str
    times: np.ndarray
    values: np.ndarray
    mu: np.ndarray
    lhs_series: np.ndarray
    drift_series: np.ndarray
    # divergence_increments[s] = D[mu(s+1) : mu(s)]
    divergence_increments: np.ndarray
    cumulative_divergence: np.ndarray
    residual_series: np.ndarray
    residual: float
    relative_residual: float
    truncated_at: Optional[int] = None

    @property
    def truncated(self) -> bool:
        return self.truncated_at is not None

    def to_records(self) -> List[BacktestRecord]:
        steps = np.concatenate([[0.0], self.divergence_increments])
        return [
            BacktestRecord(
                t=int(self.times[k]),
                mu=self.mu[k].tolist(),
                value=float(self.values[k]),
                drift=float(self.drift_series[k]),
                div_step=float(steps[k]),
                div_cum=float(self.cumulative_divergence[k]),
                residual=float(self.residual_series[k]),
            )
            for k in range(self.times.shape[0])
        ]


def _scale_difference(scale: ScaleFunction, values: np.ndarray) -> np.ndarray:
    g = np.array([scale.value(float(v)) for v in values])
    return g - g[0]


def decompose(scheme: GenerationScheme, path: MarketPath, run: Optional[StrategyRun] = None) -> DecompositionReport:
    """Check g(V(t)) - g(V(0)) = phi(mu(t)) - phi(mu(0)) + sum_{s<t} D[mu(s+1) : mu(s)] along the run."""
    run = run or run_strategy(scheme, path)
    values = run.values.values

    truncated_at = None
    stop = len(values)
    outside = [s.time for s in run.states if not s.in_domain]
    if outside:
        truncated_at = outside[0]
        stop = truncated_at
        logger.warning(f"{scheme.label}: decomposition truncated at step {truncated_at} (V <= -C)")
    if stop == 0:
        raise NonPositiveValueError("value starts at or below -C; no decomposition is defined", step=0)

    mu = path.points[:stop]
    kept = values[:stop]
    kind = scheme.divergence_kind
    phi_values = np.array([scheme.phi.value(m) for m in mu])
    increments = np.array([kind.evaluate(mu[s + 1], mu[s]) for s in range(stop - 1)])

    lhs = _scale_difference(scheme.scale, kept)
    drift = phi_values - phi_values[0]
    cumulative = np.concatenate([[0.0], np.cumsum(increments)])
    residual_series = lhs - drift - cumulative

    residual = float(np.max(np.abs(residual_series)))
    scale = max(1.0, float(np.max(np.abs(lhs))), float(np.max(np.abs(drift))), float(np.max(cumulative)))
    relative = residual / scale
    decomposition_residual.labels(scheme=scheme.tag.value).set(relative)
    if relative > settings.DECOMPOSITION_TOL:
        logger.warning(f"{scheme.label}: decomposition residual {relative:.3e} exceeds {settings.DECOMPOSITION_TOL:g}")

    return DecompositionReport(
        scheme=scheme.label,
        times=path.times[:stop],
        values=kept,
        mu=mu,
        lhs_series=lhs,
        drift_series=drift,
        divergence_increments=increments,
        cumulative_divergence=cumulative,
        residual_series=residual_series,
        residual=residual,
        relative_residual=relative,
        truncated_at=truncated_at,
    )
