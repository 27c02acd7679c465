import typer

from app.cli.commands import concavity, run, sweep, verify


def include_commands(cli: typer.Typer) -> None:
    cli.command(name="run", help="Backtest one generated strategy on a price table")(run.run)
    cli.command(name="sweep", help="Sweep alpha over the (alpha, 1/alpha) family")(sweep.sweep)
    cli.command(name="verify", help="Run the seeded verification suite")(verify.verify)
    cli.command(name="concavity", help="Check alpha-exponential concavity of a builtin")(concavity.concavity)
