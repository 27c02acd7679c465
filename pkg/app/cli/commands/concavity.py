from typing import Optional

import typer

from app.cli.common import EXIT_VERIFICATION_FAILED, console, exit_on_error
from app.core.config import settings
from app.engine.genfun import catalog, check_alpha_exp_concavity
from app.utils.dto.config import parse_float_list


@exit_on_error
def concavity(
    phi: str = typer.Option("cross_entropy", "--phi", help=f"one of {', '.join(catalog.get_available_functions())}"),
    alpha: float = typer.Option(1.0, "--alpha", help="test concavity of exp(alpha phi)"),
    n: Optional[int] = typer.Option(None, "--n", min=2, help="number of assets (default len(pi), else 2)"),
    pi: Optional[str] = typer.Option(None, "--pi", help="cross entropy weights, comma separated (default equal)"),
    lam: Optional[float] = typer.Option(None, "--lambda", help="diversity exponent in (0, 1)"),
    samples: int = typer.Option(1000, "--samples", min=1, help="random pairs and points to test"),
    seed: int = typer.Option(settings.DEFAULT_SEED, "--seed"),
):
    """Sample the simplex for violations of alpha-exponential concavity."""
    weights = parse_float_list(pi)
    if weights and n is not None and n != len(weights):
        raise ValueError(f"--n {n} does not match {len(weights)} weights in --pi")
    if n is None:
        n = len(weights) if weights else 2
    function = catalog.build(phi, pi=weights, n=n, lam=lam)
    report = check_alpha_exp_concavity(function, alpha, samples, n=n, seed=seed)
    if report.passed:
        console.print(f"exp({alpha:g} * {function.name}) passed {samples} samples "
                      f"(declared alpha_max {function.declared_alpha_max:g})")
        return
    console.print(f"[bold red]exp({alpha:g} * {function.name}) is not concave[/bold red]: "
                  f"{report.kind} test, margin {report.margin:.3e}")
    for point in report.witness:
        console.print("  witness " + ", ".join(f"{w:.6f}" for w in point))
    raise typer.Exit(code=EXIT_VERIFICATION_FAILED)
