from pathlib import Path
from typing import Optional

import typer
from rich.table import Table

from app.cli.common import console, dump_metrics, exit_on_error
from app.core.config import settings
from app.core.exceptions import ConfigError
from app.services.backtest_service import BacktestService
from app.services.data_service import DataService
from app.services.report_service import ReportService
from app.utils.dto.config import RunConfig
from app.utils.dto.records import SeriesSummary


def summary_table(summaries: list[SeriesSummary], title: str) -> Table:
    table = Table(title=title)
    for column in ("series", "scheme", "alpha", "C", "steps", "V(0)", "V(T)", "residual", "truncated"):
        table.add_column(column, justify="right" if column not in ("series", "scheme") else "left")
    for s in summaries:
        table.add_row(
            s.label, s.scheme,
            "-" if s.alpha is None else f"{s.alpha:g}",
            "-" if s.C is None else f"{s.C:g}",
            str(s.steps), f"{s.initial_value:.6g}", f"{s.final_value:.6g}",
            f"{s.relative_residual:.2e}",
            "-" if s.truncated_at is None else str(s.truncated_at),
        )
    return table


@exit_on_error
def run(
    config: Path = typer.Option(..., "--config", help="key=value run configuration"),
    data: Path = typer.Option(Path(settings.SAMPLE_DATA_PATH), "--data", help="price CSV (date column + one column per asset)"),
    out: Optional[Path] = typer.Option(None, "--out", help="report path (overrides `output` in the config)"),
    fmt: Optional[str] = typer.Option(None, "--format", help="csv or json (overrides `format` in the config)"),
    metrics_file: Optional[str] = typer.Option(None, "--metrics-file", help="write Prometheus metrics here"),
):
    """Backtest one generated strategy and write its per-step decomposition."""
    run_config = RunConfig.from_file(config, format=fmt, output=str(out) if out else None)
    if not run_config.output:
        raise ConfigError("no output path: pass --out or set `output` in the config")

    table = DataService().ingest_csv(data)
    series = BacktestService().run_backtest(run_config, table)
    path = ReportService().emit_report(series.records, run_config.output, run_config.format)

    console.print(summary_table([series.summary], title=f"{table.T} periods, {table.n} assets"))
    console.print(f"report written to {path}")
    dump_metrics(metrics_file)
