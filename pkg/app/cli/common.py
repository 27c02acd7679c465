"""Shared CLI plumbing: consoles, error-to-exit-code mapping, metrics dump."""
from functools import wraps
from typing import Optional

import typer
from pydantic import ValidationError
from rich.console import Console

from app.core.exceptions import FGPError
from app.utils.logger import get_logger
from app.utils.metrics import write_metrics_file

logger = get_logger("cli")

console = Console()
err_console = Console(stderr=True)

EXIT_OK = 0
EXIT_INVALID = 1
EXIT_VERIFICATION_FAILED = 2


def exit_on_error(func):
    """Map engine, validation, arithmetic and I/O errors to exit status 1."""

    @wraps(func)
    def wrapper(*args, **kwargs):
        try:
            return func(*args, **kwargs)
        except (FGPError, ValidationError, ValueError, ArithmeticError, OSError) as e:
            logger.debug(f"{func.__name__} failed", exc_info=True)
            err_console.print(f"[bold red]error:[/bold red] {e}")
            raise typer.Exit(code=EXIT_INVALID)

    return wrapper


def dump_metrics(path: Optional[str]) -> None:
    if path:
        write_metrics_file(path)
