"""Prometheus metrics for strategy runs, sweeps and verification checks"""
from prometheus_client import REGISTRY, Counter, Gauge, Histogram, write_to_textfile

from app.utils.logger import get_logger

logger = get_logger("utils.metrics")

# Strategy metrics
strategy_runs_total = Counter(
    'fgp_strategy_runs_total',
    'Total number of strategy runs',
    ['scheme', 'status']  # completed, failed
)

strategy_run_duration = Histogram(
    'fgp_strategy_run_duration_seconds',
    'Time spent running a strategy over a path',
    ['scheme'],
    buckets=[0.001, 0.005, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0]
)

decomposition_residual = Gauge(
    'fgp_decomposition_residual',
    'Relative residual of the latest pathwise decomposition',
    ['scheme']
)

# Divergence metrics
divergence_domain_errors = Counter(
    'fgp_divergence_domain_errors_total',
    'Total number of divergence evaluations rejected by a domain guard',
    ['kind']
)

# Sweep metrics
sweep_jobs_in_flight = Gauge(
    'fgp_sweep_jobs_in_flight',
    'Number of sweep jobs currently running'
)

# Verification metrics
verification_checks_total = Counter(
    'fgp_verification_checks_total',
    'Total number of verification checks run',
    ['check', 'status']  # pass, fail
)


def write_metrics_file(path: str) -> None:
    """Dump the default registry in text exposition format (textfile collector)."""
    write_to_textfile(path, REGISTRY)
    logger.info(f"Metrics written to {path}")
