"""
Centralized logging system for ReceiptForge

Logs always go to stderr; stdout is reserved for JSON result lines.
"""
import json
import logging
import sys
import traceback
from datetime import datetime, timezone
from logging.handlers import RotatingFileHandler
from pathlib import Path
from typing import Dict, Optional

from .settings import Settings

_EXTRA_FIELDS = ("stage", "sample_id", "action", "duration", "error_type", "operation")


class JSONFormatter(logging.Formatter):
    """Custom JSON formatter for structured logging"""

    def format(self, record: logging.LogRecord) -> str:
        """Format log record as JSON"""
        log_entry = {
            "timestamp": datetime.now(timezone.utc).isoformat().replace("+00:00", "Z"),
            "level": record.levelname,
            "logger": record.name,
            "message": record.getMessage(),
            "module": record.module,
            "function": record.funcName,
            "line": record.lineno,
            "process_id": record.process,
        }

        if record.exc_info:
            log_entry["exception"] = {
                "type": record.exc_info[0].__name__ if record.exc_info[0] else None,
                "message": str(record.exc_info[1]) if record.exc_info[1] else None,
                "traceback": traceback.format_exception(*record.exc_info),
            }

        for field in _EXTRA_FIELDS:
            if hasattr(record, field):
                log_entry[field] = getattr(record, field)

        return json.dumps(log_entry, ensure_ascii=False, default=str)


class TextFormatter(logging.Formatter):
    """Custom text formatter for human-readable logs"""

    def __init__(self):
        super().__init__(
            fmt='%(asctime)s | %(levelname)-8s | %(name)-28s | %(message)s',
            datefmt='%Y-%m-%d %H:%M:%S',
        )

    def format(self, record: logging.LogRecord) -> str:
        """Format log record as text with extra context"""
        message = super().format(record)
        extra_parts = []
        for field in _EXTRA_FIELDS:
            if not hasattr(record, field):
                continue
            value = getattr(record, field)
            if field == "duration":
                extra_parts.append(f"duration={value:.3f}s")
            else:
                extra_parts.append(f"{field}={value}")
        if extra_parts:
            message = f"{message} | {' | '.join(extra_parts)}"
        return message


class ForgeLogger:
    """Centralized logger for ReceiptForge"""

    def __init__(self):
        self._loggers: Dict[str, logging.Logger] = {}
        self._configured = False

    def configure(self, settings: Settings) -> None:
        """Setup logging configuration"""
        formatter: logging.Formatter
        if settings.log_format == "json":
            formatter = JSONFormatter()
        else:
            formatter = TextFormatter()

        level = logging.DEBUG if settings.debug else getattr(logging, settings.log_level)

        root_logger = logging.getLogger("receiptforge")
        root_logger.setLevel(level)
        root_logger.handlers.clear()
        root_logger.propagate = False

        console_handler = logging.StreamHandler(sys.stderr)
        console_handler.setLevel(level)
        console_handler.setFormatter(formatter)
        root_logger.addHandler(console_handler)

        if settings.log_file:
            log_file = Path(settings.log_file)
            log_file.parent.mkdir(parents=True, exist_ok=True)
            file_handler = RotatingFileHandler(
                log_file,
                maxBytes=10 * 1024 * 1024,  # 10MB
                backupCount=settings.log_retention,
                encoding='utf-8',
            )
            file_handler.setLevel(level)
            file_handler.setFormatter(formatter)
            root_logger.addHandler(file_handler)

        self._setup_metrics_logger(formatter, settings.debug)
        self._configured = True

    def _setup_metrics_logger(self, formatter: logging.Formatter, enabled: bool) -> None:
        """Setup performance metrics logger"""
        metrics_logger = logging.getLogger('receiptforge.metrics')
        metrics_logger.setLevel(logging.INFO if enabled else logging.WARNING)
        metrics_logger.propagate = False
        metrics_logger.handlers.clear()

        metrics_handler = logging.StreamHandler(sys.stderr)
        metrics_handler.setFormatter(formatter)
        metrics_logger.addHandler(metrics_handler)

    def get_logger(self, name: str) -> logging.Logger:
        """Get logger instance"""
        if not name.startswith("receiptforge"):
            name = f"receiptforge.{name}"
        if name not in self._loggers:
            self._loggers[name] = logging.getLogger(name)
        return self._loggers[name]

    def get_metrics_logger(self) -> logging.Logger:
        """Get performance metrics logger"""
        return logging.getLogger('receiptforge.metrics')


# Global logger instance
forge_logger = ForgeLogger()


def configure_logging(settings: Settings) -> None:
    """Apply logging settings (called once by the CLI)"""
    forge_logger.configure(settings)


def get_logger(name: str) -> logging.Logger:
    """Get logger instance"""
    return forge_logger.get_logger(name)


def get_metrics_logger() -> logging.Logger:
    """Get performance metrics logger"""
    return forge_logger.get_metrics_logger()


def log_performance(logger: logging.Logger, operation: str, duration: float, **kwargs):
    """Log performance metrics"""
    logger.debug(f"Performance: {operation}", extra={
        'action': 'performance',
        'operation': operation,
        'duration': duration,
        **kwargs,
    })


def log_stage(logger: logging.Logger, stage: str, sample_id: Optional[str], message: str, **kwargs):
    """Log a pipeline stage event with its sample context"""
    logger.info(message, extra={
        'action': 'stage',
        'stage': stage,
        'sample_id': sample_id or '-',
        **kwargs,
    })

