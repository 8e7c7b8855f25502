import sys
import logging
from typing import Any, Dict, Optional

from loguru import logger as loguru_logger

from core.config.env_loader import config_loader

_FORMAT = "{time:YYYY-MM-DD HH:mm:ss} - {name} - {level} - {message}"
_configured = False


class InterceptHandler(logging.Handler):
    """Route standard-library log records into loguru sinks."""

    def emit(self, record: logging.LogRecord) -> None:
        try:
            level = loguru_logger.level(record.levelname).name
        except ValueError:
            level = record.levelno
        loguru_logger.opt(exception=record.exc_info).bind(name=record.name).log(level, record.getMessage())


def _size_to_rotation(max_size: Any) -> str:
    text = str(max_size).strip().upper()
    for unit in ("KB", "MB", "GB"):
        if text.endswith(unit):
            return f"{text[:-len(unit)].strip()} {unit}"
    return f"{text} B"


def configure_logging(level: Optional[str] = None, settings: Optional[Dict[str, Any]] = None) -> None:
    """
    Configure loguru sinks from the logging configuration and bridge the
    standard-library root logger into them.

    Library modules only call logging.getLogger(__name__); this function is
    called once by the command line (and may be called again to change level).

    Args:
        level: Optional level override (e.g., 'debug', 'warning')
        settings: Optional logging settings (default: the 'logging' config section)
    """
    global _configured
    if settings is None:
        settings = config_loader.get_settings("logging")
    level_name = (level or settings.get("level", "info")).upper()

    loguru_logger.remove()
    console = settings.get("console", {})
    if console.get("enabled", True):
        loguru_logger.add(sys.stderr, level=level_name, format=_FORMAT,
                          colorize=bool(console.get("colored", True)))

    file_settings = settings.get("file", {})
    if file_settings.get("enabled", False):
        loguru_logger.add(file_settings.get("path", "logs/ising_conc.log"),
                          level=level_name, format=_FORMAT,
                          rotation=_size_to_rotation(file_settings.get("max_size", "10MB")),
                          retention=int(file_settings.get("backup_count", 5)))

    logging.basicConfig(handlers=[InterceptHandler()], level=level_name, force=True)
    _configured = True
    logging.getLogger(__name__).debug(f"Logging configured at level {level_name}")


def is_configured() -> bool:
    return _configured
