import logging
import logging.handlers
from pathlib import Path
from typing import Union

# Handlers added by attach_run_log carry this attribute
_RUN_LOG = "_cis_run_log"


def setup_logger(name: str = "src", level: str = "INFO") -> logging.Logger:
    """
    Setup the package logger with a console handler.

    Args:
        name: Logger name. Configuring the package root ("src") covers every
              module logger created with logging.getLogger(__name__).
        level: Logging level (DEBUG, INFO, WARNING, ERROR, CRITICAL)

    Returns:
        Configured logger instance
    """
    logger = logging.getLogger(name)

    # Prevent duplicate handlers
    if logger.handlers:
        return logger

    # Set logging level
    log_level = getattr(logging, level.upper(), logging.INFO)
    logger.setLevel(log_level)

    logger.addHandler(_console_handler(log_level))
    return logger


def _formatter() -> logging.Formatter:
    # Create formatter
    return logging.Formatter(
        fmt='%(asctime)s - %(name)s - %(levelname)s - %(message)s',
        datefmt='%Y-%m-%d %H:%M:%S'
    )


def _console_handler(log_level: int) -> logging.Handler:
    # Console handler
    console_handler = logging.StreamHandler()
    console_handler.setLevel(log_level)
    console_handler.setFormatter(_formatter())
    return console_handler


def _rotating(path: Path, log_level: int) -> logging.Handler:
    handler = logging.handlers.RotatingFileHandler(
        filename=path,
        maxBytes=10*1024*1024,  # 10MB
        backupCount=5,
        encoding='utf-8'
    )
    handler.setLevel(log_level)
    handler.setFormatter(_formatter())
    setattr(handler, _RUN_LOG, True)
    return handler


def attach_run_log(logger: logging.Logger, log_dir: Union[str, Path]) -> Path:
    """
    Send the logger's records to `cis.log` and its errors to `error.log` under
    `log_dir`, replacing the files of any earlier run in this process.

    Returns:
        The log directory
    """
    for handler in [h for h in logger.handlers if getattr(h, _RUN_LOG, False)]:
        logger.removeHandler(handler)
        handler.close()

    log_path = Path(log_dir)
    log_path.mkdir(parents=True, exist_ok=True)
    log_level = logger.level or logging.INFO

    # File handler with rotation
    logger.addHandler(_rotating(log_path / "cis.log", log_level))

    # Error file handler
    logger.addHandler(_rotating(log_path / "error.log", logging.ERROR))

    logger.debug(f"Logging run to {log_path}")
    return log_path
