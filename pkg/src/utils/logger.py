"""
Logging Utility

Console and rotating-file logging for simulator runs. Every record passing
through the simulator's handlers carries the current run context
(experiment name and seed) so interleaved logs of sweep runs stay readable.
"""

import logging
import logging.handlers
import sys
from pathlib import Path
from typing import Dict, Optional

CONSOLE_FORMAT = '%(asctime)s | %(levelname)s | %(run)s | %(name)s | %(message)s'
FILE_FORMAT = '%(asctime)s | %(levelname)s | %(run)s | %(name)s | %(funcName)s:%(lineno)d | %(message)s'
DATE_FORMAT = '%Y-%m-%d %H:%M:%S'


class ColoredFormatter(logging.Formatter):
    """Level names coloured for terminals."""

    COLORS = {
        'DEBUG': '\033[36m',
        'INFO': '\033[32m',
        'WARNING': '\033[33m',
        'ERROR': '\033[31m',
        'CRITICAL': '\033[35m',
        'RESET': '\033[0m'
    }

    def format(self, record):
        color = self.COLORS.get(record.levelname, self.COLORS['RESET'])
        # copy so the file handler still sees the plain level name
        record = logging.makeLogRecord(record.__dict__)
        record.levelname = f"{color}{record.levelname}{self.COLORS['RESET']}"
        return super().format(record)


class RunContextFilter(logging.Filter):
    """Stamps ``record.run`` with the active experiment label."""

    def __init__(self):
        super().__init__()
        self.label = "-"

    def filter(self, record: logging.LogRecord) -> bool:
        record.run = self.label
        return True


class SimulatorLogger:
    """Process-wide logging state for the simulator."""

    _loggers: Dict[str, logging.Logger] = {}
    _context = RunContextFilter()
    _initialized = False

    @classmethod
    def setup_logging(
        cls,
        log_level: str = "INFO",
        log_file: Optional[str] = None,
        max_file_size: int = 10 * 1024 * 1024,
        backup_count: int = 5,
        enable_console: bool = True,
        enable_colors: bool = True,
        force: bool = False
    ):
        """
        Configure the root logger.

        Args:
            log_level: DEBUG, INFO, WARNING, ERROR or CRITICAL
            log_file: Rotating log file; its directory is created
            max_file_size: Bytes before the file rotates
            backup_count: Rotated files kept
            enable_console: Log to stderr
            enable_colors: Colour level names when stderr is a terminal
            force: Replace handlers of an earlier call

        Raises:
            ValueError: Unknown log level
        """
        if cls._initialized and not force:
            return

        level = logging.getLevelName(log_level.upper())
        if not isinstance(level, int):
            raise ValueError(f"unknown log level: {log_level}")

        root_logger = logging.getLogger()
        root_logger.setLevel(level)
        root_logger.handlers.clear()

        # stderr keeps stdout free for command output
        if enable_console:
            console_handler = logging.StreamHandler(sys.stderr)
            colored = enable_colors and getattr(sys.stderr, 'isatty', lambda: False)()
            formatter_class = ColoredFormatter if colored else logging.Formatter
            console_handler.setFormatter(formatter_class(CONSOLE_FORMAT, datefmt=DATE_FORMAT))
            console_handler.setLevel(level)
            console_handler.addFilter(cls._context)
            root_logger.addHandler(console_handler)

        if log_file:
            Path(log_file).parent.mkdir(parents=True, exist_ok=True)
            file_handler = logging.handlers.RotatingFileHandler(
                log_file,
                maxBytes=max_file_size,
                backupCount=backup_count,
                encoding='utf-8'
            )
            file_handler.setFormatter(logging.Formatter(FILE_FORMAT, datefmt=DATE_FORMAT))
            file_handler.setLevel(logging.DEBUG)
            file_handler.addFilter(cls._context)
            root_logger.addHandler(file_handler)

        cls._initialized = True

    @classmethod
    def set_run_context(cls, experiment_name: Optional[str], seed: Optional[int] = None):
        if experiment_name is None:
            cls._context.label = "-"
        elif seed is None:
            cls._context.label = experiment_name
        else:
            cls._context.label = f"{experiment_name}#{seed}"

    @classmethod
    def get_logger(cls, name: str) -> logging.Logger:
        if name not in cls._loggers:
            cls._loggers[name] = logging.getLogger(name)
        return cls._loggers[name]


def get_logger(name: str) -> logging.Logger:
    """Logger for a module, typically ``get_logger(__name__)``."""
    return SimulatorLogger.get_logger(name)


def set_run_context(experiment_name: Optional[str], seed: Optional[int] = None):
    """Label subsequent log records with an experiment; ``None`` clears it."""
    SimulatorLogger.set_run_context(experiment_name, seed)


def setup_logging(log_level: str = "INFO", log_file: Optional[str] = None, **kwargs):
    """Configure logging once; see ``SimulatorLogger.setup_logging``."""
    SimulatorLogger.setup_logging(log_level=log_level, log_file=log_file, **kwargs)
