from typing import List, Optional, Sequence, Tuple

from app.core.exceptions import ConfigError
from app.engine.genfun import GeneratingFunction, catalog
from app.engine.market import MarketPath
from app.engine.strategy import GenerationScheme, SchemeTag, decompose, run_strategy
from app.services.data_service import DataService, PriceTable
from app.utils.dto.config import RunConfig
from app.utils.dto.records import BacktestSeries, SeriesSummary, SweepResult
from app.utils.logger import get_logger
from app.workers.pool import SweepWorkerPool

logger = get_logger("services.backtest")

REFERENCE_LABEL = "reference"


def alpha_label(alpha: float) -> str:
    return f"alpha_{alpha:g}"


class BacktestService:

    def __init__(self, data_service: Optional[DataService] = None, pool: Optional[SweepWorkerPool] = None):
        self.data_service = data_service or DataService()
        self.pool = pool or SweepWorkerPool()

    def build_phi(self, config: RunConfig, n: int) -> GeneratingFunction:
        if config.phi == "cross_entropy":
            if config.phi_pi is not None and len(config.phi_pi) != n:
                raise ConfigError(f"phi_pi has {len(config.phi_pi)} weights for {n} assets")
            return catalog.build("cross_entropy", pi=config.phi_pi, n=n)
        if config.phi == "diversity":
            return catalog.build("diversity", lam=config.phi_lambda)
        return catalog.build(config.phi)

    def prepare_path(self, config: RunConfig, table: PriceTable) -> MarketPath:
        if config.normalize_barycenter:
            table = self.data_service.normalize_to_barycenter(table)
        return self.data_service.market_path(table)

    def scheme_for_alpha(self, config: RunConfig, phi: GeneratingFunction, alpha: float) -> GenerationScheme:
        # alpha = 0 is the additive end of the (alpha, 1/alpha) family
        if alpha == 0:
            return GenerationScheme.additive(phi, config.v0)
        return GenerationScheme.alpha_c(phi, alpha, config.resolve_c(alpha), config.v0)

    def schemes(self, config: RunConfig, phi: GeneratingFunction,
                alphas: Optional[Sequence[float]] = None) -> List[Tuple[str, GenerationScheme]]:
        if config.scheme == SchemeTag.MULTIPLICATIVE.value:
            return [(SchemeTag.MULTIPLICATIVE.value, GenerationScheme.multiplicative(phi, config.v0))]
        if config.scheme == SchemeTag.ADDITIVE.value:
            return [(SchemeTag.ADDITIVE.value, GenerationScheme.additive(phi, config.v0))]
        alphas = list(alphas) if alphas is not None else config.alphas
        return [(alpha_label(a), self.scheme_for_alpha(config, phi, a)) for a in alphas]

    def run_series(self, label: str, scheme: GenerationScheme, path: MarketPath) -> BacktestSeries:
        run = run_strategy(scheme, path)
        report = decompose(scheme, path, run)
        point = scheme.family_point
        summary = SeriesSummary(
            label=label,
            scheme=scheme.tag.value,
            alpha=point[0] if point else None,
            C=point[1] if point else None,
            steps=path.steps,
            initial_value=run.values.initial_value,
            final_value=run.values.final_value,
            residual=report.residual,
            relative_residual=report.relative_residual,
            truncated_at=report.truncated_at,
        )
        return BacktestSeries(summary=summary, records=report.to_records())

    def run_backtest(self, config: RunConfig, table: PriceTable) -> BacktestSeries:
        """Single-scheme backtest; an alpha list with more than one entry belongs to run_sweep."""
        path = self.prepare_path(config, table)
        phi = self.build_phi(config, path.n)
        schemes = self.schemes(config, phi)
        if len(schemes) != 1:
            raise ConfigError(f"run expects exactly one alpha, got {len(schemes)}; use sweep")
        label, scheme = schemes[0]
        return self.run_series(label, scheme, path)

    def run_sweep(self, config: RunConfig, table: PriceTable,
                  alphas: Optional[Sequence[float]] = None) -> SweepResult:
        """One series per alpha plus the multiplicatively generated reference, run concurrently."""
        if config.scheme != SchemeTag.ALPHA_C.value:
            raise ConfigError(f"sweeps run the alpha_c scheme, config has scheme={config.scheme}")
        path = self.prepare_path(config, table)
        phi = self.build_phi(config, path.n)
        labelled = self.schemes(config, phi, alphas)
        if not labelled:
            raise ConfigError("sweep needs at least one alpha")
        labelled.append((REFERENCE_LABEL, GenerationScheme.multiplicative(phi, config.v0)))

        jobs = [(label, lambda label=label, scheme=scheme: self.run_series(label, scheme, path))
                for label, scheme in labelled]
        series = self.pool.run_sync(jobs)

        ranked = sorted(series, key=lambda s: (-s.summary.final_value, s.summary.label))
        order = [s.summary.label for s in ranked]
        logger.info(f"Sweep ending values, largest first: {', '.join(order)}")
        return SweepResult(series=series, final_value_order=order)


backtest_service = BacktestService()


def run_backtest(config: RunConfig, table: PriceTable) -> BacktestSeries:
    return backtest_service.run_backtest(config, table)
