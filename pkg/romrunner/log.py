import logging
import sys
from logging.handlers import RotatingFileHandler
from pathlib import Path

from config import settings
from logfire import LogfireLoggingHandler

LOG_PATH = settings.log_dir
LOG_PATH.mkdir(parents=True, exist_ok=True)

# Loggers of the numerical modules (`core.pgp`, `core.grassmann`, ...) hang off this one.
CORE_LOGGER = "core"


def init_logger(
    logger_name: str,
    log_path: Path = LOG_PATH,
    filename: str | None = None,
    log_level: int | str = logging.INFO,
    add_logfire_handler: bool = True,
) -> logging.Logger:
    logger = logging.getLogger(logger_name)
    logger.setLevel(log_level)
    if logger.handlers:
        return logger
    formatter = logging.Formatter(
        "%(levelname)s: %(asctime)s: %(name)s: %(lineno)s | %(message)s"
    )
    streamhandler = logging.StreamHandler(sys.stdout)
    streamhandler.setFormatter(formatter)
    logger.addHandler(streamhandler)
    if filename is not None:
        filehandler = RotatingFileHandler(
            filename=log_path / filename, maxBytes=10 * 1024 * 1024, backupCount=10
        )
        filehandler.setFormatter(formatter)
        logger.addHandler(filehandler)

    if settings.logfire_token and add_logfire_handler:
        logger.addHandler(LogfireLoggingHandler())

    return logger


def share_handlers(source: logging.Logger, name: str) -> logging.Logger:
    """Send records of logger ``name`` through the handlers of ``source``."""
    target = logging.getLogger(name)
    target.setLevel(source.level)
    for handler in source.handlers:
        if handler not in target.handlers:
            target.addHandler(handler)
    return target


app_logger = init_logger(
    logger_name="ROM-LOGS", filename=settings.log_filename, log_level=settings.log_level
)
core_logger = share_handlers(app_logger, CORE_LOGGER)
app_logger.debug("Logger initialized for %s", "ROM-LOGS")
