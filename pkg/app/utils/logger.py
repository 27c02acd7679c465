"""
Centralized logging configuration for the functional portfolio engine.

Every module asks for a named logger through `get_logger`. The root logger
is configured once from `settings` (level, JSON output, optional rotating
files); the CLI may reconfigure it through `setup_logging`.
"""

import json
import logging
import logging.handlers
import sys
from datetime import datetime, timezone
from pathlib import Path
from typing import Optional

from app.core.config import settings

_RESERVED_ATTRS = {
    'name', 'msg', 'args', 'levelname', 'levelno', 'pathname', 'filename', 'module',
    'exc_info', 'exc_text', 'stack_info', 'lineno', 'funcName', 'created', 'msecs',
    'relativeCreated', 'thread', 'threadName', 'processName', 'process', 'taskName',
    'getMessage',
}


class ColoredFormatter(logging.Formatter):
    """Console formatter that colors the level name."""

    COLORS = {
        'DEBUG': '\033[36m',
        'INFO': '\033[32m',
        'WARNING': '\033[33m',
        'ERROR': '\033[31m',
        'CRITICAL': '\033[35m',
        'RESET': '\033[0m',
    }

    def format(self, record):
        original = record.levelname
        color = self.COLORS.get(original, self.COLORS['RESET'])
        record.levelname = f"{color}{original}{self.COLORS['RESET']}"
        try:
            return super().format(record)
        finally:
            record.levelname = original


class JSONFormatter(logging.Formatter):
    """JSON formatter for structured logging."""

    def format(self, record):
        log_entry = {
            'timestamp': datetime.now(timezone.utc).isoformat().replace('+00:00', 'Z'),
            'level': record.levelname,
            'logger': record.name,
            'message': record.getMessage(),
            'module': record.module,
            'function': record.funcName,
            'line': record.lineno,
        }

        if record.exc_info:
            log_entry['exception'] = self.formatException(record.exc_info)

        for key, value in record.__dict__.items():
            if key not in _RESERVED_ATTRS:
                log_entry[key] = value

        return json.dumps(log_entry, ensure_ascii=False, default=str)


class LoggerConfig:
    """Centralized logger configuration."""

    def __init__(self):
        self.config = {
            'level': logging.INFO,
            'console': True,
            'file': False,
            'json_format': False,
            'log_dir': 'logs',
            'max_file_size': 10 * 1024 * 1024,
            'backup_count': 5,
            'log_file': 'fgp.log',
            'error_file': 'fgp-error.log',
        }

    def configure(self,
                  level: str = 'INFO',
                  console: bool = True,
                  file: bool = False,
                  json_format: bool = False,
                  log_dir: Optional[str] = None,
                  log_file: Optional[str] = None,
                  error_file: Optional[str] = None,
                  max_file_size: int = 10 * 1024 * 1024,
                  backup_count: int = 5) -> None:
        """
        Configure the logging system.

        Args:
            level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)
            console: Enable console logging (stderr)
            file: Enable rotating file logging
            json_format: Use JSON format for structured logging
            log_dir: Directory for log files
            log_file: Custom log file name
            error_file: Custom error log file name
            max_file_size: Maximum file size before rotation
            backup_count: Number of backup files to keep
        """
        self.config.update({
            'level': getattr(logging, level.upper()),
            'console': console,
            'file': file,
            'json_format': json_format,
            'log_dir': log_dir or self.config['log_dir'],
            'log_file': log_file or self.config['log_file'],
            'error_file': error_file or self.config['error_file'],
            'max_file_size': max_file_size,
            'backup_count': backup_count,
        })

        root_logger = logging.getLogger()
        root_logger.handlers.clear()
        root_logger.setLevel(self.config['level'])

        plain_format = '%(asctime)s - %(name)s - %(levelname)s - %(message)s'

        if self.config['console']:
            console_handler = logging.StreamHandler(sys.stderr)
            console_handler.setLevel(self.config['level'])
            if self.config['json_format']:
                console_handler.setFormatter(JSONFormatter())
            else:
                console_handler.setFormatter(ColoredFormatter(plain_format, datefmt='%Y-%m-%d %H:%M:%S'))
            root_logger.addHandler(console_handler)

        if self.config['file']:
            log_dir = Path(self.config['log_dir'])
            log_dir.mkdir(parents=True, exist_ok=True)

            file_handler = logging.handlers.RotatingFileHandler(
                log_dir / self.config['log_file'],
                maxBytes=self.config['max_file_size'],
                backupCount=self.config['backup_count'],
            )
            file_handler.setLevel(self.config['level'])

            error_handler = logging.handlers.RotatingFileHandler(
                log_dir / self.config['error_file'],
                maxBytes=self.config['max_file_size'],
                backupCount=self.config['backup_count'],
            )
            error_handler.setLevel(logging.ERROR)

            if self.config['json_format']:
                file_handler.setFormatter(JSONFormatter())
                error_handler.setFormatter(JSONFormatter())
            else:
                file_handler.setFormatter(logging.Formatter(plain_format, datefmt='%Y-%m-%d %H:%M:%S'))
                error_handler.setFormatter(logging.Formatter(
                    plain_format + '\n%(pathname)s:%(lineno)d',
                    datefmt='%Y-%m-%d %H:%M:%S',
                ))

            root_logger.addHandler(file_handler)
            root_logger.addHandler(error_handler)

    def get_logger(self, name: str) -> logging.Logger:
        return logging.getLogger(name)


logger_config = LoggerConfig()


def setup_logging(level: str = 'INFO',
                  console: bool = True,
                  file: bool = False,
                  json_format: bool = False,
                  **kwargs) -> None:
    """Setup logging configuration. See `LoggerConfig.configure`."""
    logger_config.configure(
        level=level,
        console=console,
        file=file,
        json_format=json_format,
        **kwargs,
    )


def get_logger(name: str) -> logging.Logger:
    """Get a logger instance (name is usually a dotted module path)."""
    return logger_config.get_logger(name)


def log_strategy_run(logger: logging.Logger, scheme: str, steps: int, n_assets: int,
                     final_value: float, **extra):
    """Log a completed strategy run."""
    logger.info(f"Strategy {scheme} ran {steps} steps on {n_assets} assets, final value {final_value:.6g}",
                extra=extra)


def log_verification_check(logger: logging.Logger, check: str, passed: bool, count: int,
                           worst_margin: float, **extra):
    """Log the outcome of one verification check."""
    status = "PASS" if passed else "FAIL"
    message = f"Check {check}: {status} over {count} cases (worst margin {worst_margin:.3e})"
    if passed:
        logger.info(message, extra=extra)
    else:
        logger.warning(message, extra=extra)


def log_report_write(logger: logging.Logger, path: str, fmt: str, rows: int, **extra):
    """Log a report write."""
    logger.info(f"Wrote {rows} {fmt} records to {path}", extra=extra)


setup_logging(
    level=settings.LOG_LEVEL,
    file=settings.LOG_TO_FILE,
    json_format=settings.LOG_JSON,
    log_dir=settings.LOG_DIR,
)
