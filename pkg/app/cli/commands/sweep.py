from pathlib import Path
from typing import Optional

import typer

from app.cli.commands.run import summary_table
from app.cli.common import console, dump_metrics, exit_on_error
from app.core.config import settings
from app.services.backtest_service import BacktestService
from app.services.data_service import DataService
from app.services.report_service import ReportService
from app.utils.dto.config import RunConfig, parse_float_list
from app.workers.pool import SweepWorkerPool


@exit_on_error
def sweep(
    alphas: str = typer.Option("0,0.25,0.5,0.75,1", "--alphas", help="comma separated alpha values; 0 means additive"),
    config: Optional[Path] = typer.Option(None, "--config", help="key=value run configuration"),
    data: Path = typer.Option(Path(settings.SAMPLE_DATA_PATH), "--data", help="price CSV"),
    out: Path = typer.Option(Path("sweep"), "--out", help="output directory, one report per series"),
    fmt: str = typer.Option("csv", "--format", help="csv or json"),
    workers: int = typer.Option(settings.SWEEP_WORKERS, "--workers", min=1, help="concurrent series"),
    metrics_file: Optional[str] = typer.Option(None, "--metrics-file", help="write Prometheus metrics here"),
):
    """Run the (alpha, C)-generated strategies for every alpha plus the multiplicative reference."""
    overrides = {"alpha": alphas, "format": fmt, "scheme": "alpha_c"}
    run_config = RunConfig.from_file(config, **overrides) if config else RunConfig.model_validate(overrides)

    table = DataService().ingest_csv(data)
    service = BacktestService(pool=SweepWorkerPool(workers))
    result = service.run_sweep(run_config, table, parse_float_list(alphas))
    paths = ReportService().emit_sweep(result, out, run_config.format)

    console.print(summary_table([s.summary for s in result.series], title="alpha sweep"))
    console.print(f"ending values, largest first: {' > '.join(result.final_value_order)}")
    console.print(f"{len(paths)} reports written to {out}")
    dump_metrics(metrics_file)
