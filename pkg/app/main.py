import typer

from app.cli import router
from app.core.config import settings
from app.utils.logger import setup_logging

app = typer.Typer(name="fgp", help=f"{settings.PROJECT_NAME}: functionally generated trading strategies",
                  no_args_is_help=True, add_completion=False)


@app.callback()
def configure(
    log_level: str = typer.Option(settings.LOG_LEVEL, "--log-level", help="DEBUG, INFO, WARNING or ERROR"),
    json_logs: bool = typer.Option(settings.LOG_JSON, "--json-logs", help="structured JSON log lines on stderr"),
):
    setup_logging(level=log_level, file=settings.LOG_TO_FILE, json_format=json_logs, log_dir=settings.LOG_DIR)


router.include_commands(app)


def main() -> None:
    app()


if __name__ == "__main__":
    main()
