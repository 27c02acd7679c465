from typing import Optional

import typer
from rich.table import Table

from app.cli.common import EXIT_VERIFICATION_FAILED, console, dump_metrics, err_console, exit_on_error
from app.core.config import settings
from app.services.verification_service import VerificationService
from app.utils.dto.report import VerificationSummary


def checks_table(summary: VerificationSummary) -> Table:
    table = Table(title=f"verification suite, seed {summary.seed}")
    table.add_column("check")
    table.add_column("status")
    table.add_column("cases", justify="right")
    table.add_column("worst margin", justify="right")
    table.add_column("detail", overflow="fold")
    for check in summary.checks:
        status = "[green]PASS[/green]" if check.passed else "[bold red]FAIL[/bold red]"
        table.add_row(check.name, status, str(check.count), f"{check.worst_margin:.3e}", check.detail or "")
    return table


@exit_on_error
def verify(
    seed: int = typer.Option(settings.DEFAULT_SEED, "--seed", help="seed of every random draw in the suite"),
    concavity_alpha: Optional[float] = typer.Option(
        None, "--concavity-alpha", help="also require exp(alpha phi) concave for the two-asset equal-weight cross entropy"),
    flip_l_alpha_sign: bool = typer.Option(
        False, "--flip-l-alpha-sign", hidden=True, help="debug: evaluate L^(alpha) with +(phi(q) - phi(p))"),
    metrics_file: Optional[str] = typer.Option(None, "--metrics-file", help="write Prometheus metrics here"),
):
    """Run the seeded property suite; exit status 2 when any check fails."""
    summary = VerificationService().verify_suite(seed, flip_l_alpha_sign=flip_l_alpha_sign,
                                                 concavity_alpha=concavity_alpha)
    console.print(checks_table(summary))
    dump_metrics(metrics_file)
    if not summary.passed:
        err_console.print(f"[bold red]failed:[/bold red] {', '.join(summary.failed_checks)}")
        raise typer.Exit(code=EXIT_VERIFICATION_FAILED)
    console.print("all checks passed")
