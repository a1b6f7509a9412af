"""Logging methods/helpers."""

import logging
import sys
from types import MappingProxyType  # Immutable dict

from colorlog import ColoredFormatter


LOGGER_ROOT = 'levyfluid'
TRACE_LOG_LEVEL = logging.DEBUG - 5

LOG_LEVEL_STR_TO_INT = MappingProxyType({
    'NOTSET': logging.NOTSET,
    'TRACE': TRACE_LOG_LEVEL,
    'DEBUG': logging.DEBUG,
    'INFO': logging.INFO,
    'WARNING': logging.WARNING,
    'ERROR': logging.ERROR,
    'CRITICAL': logging.CRITICAL
})

_FILE_FORMAT = ('%(asctime)s | %(name)s | '
                '%(levelname)s:%(lineno)s | '
                '%(message)s')
_COLOR_FORMAT = ('%(asctime)s | %(name)s | '
                 '%(log_color)s%(levelname)s%(reset)s:%(lineno)s | '
                 '%(log_color)s%(message)s%(reset)s')


def add_logging_level(level_name: str, level_num: int,
                      method_name: str | None = None):
    """Register a new logging level on the logging module and Logger class.

    After the call, logging.<LEVEL_NAME> holds level_num, and both
    logging.<method_name>() and Logger.<method_name>() emit at that level.
    If method_name is None, level_name.lower() is used.

    Registering the same level twice (e.g. on a package re-import inside a
    spawned worker) is a no-op as long as the number matches.

    Args:
        level_name: name of the level, e.g. 'TRACE'.
        level_num: numeric value of the level.
        method_name: name of the convenience method.

    Raises:
        AttributeError if the name is already taken by something else.
    """
    method_name = method_name or level_name.lower()

    if getattr(logging, level_name, None) == level_num and \
            hasattr(logging.getLoggerClass(), method_name):
        return
    for owner, attr in ((logging, level_name), (logging, method_name),
                        (logging.getLoggerClass(), method_name)):
        if hasattr(owner, attr):
            raise AttributeError(f"{attr} already defined in {owner}")

    def log_for_level(self, message, *args, **kwargs):
        if self.isEnabledFor(level_num):
            self._log(level_num, message, args, **kwargs)

    def log_to_root(message, *args, **kwargs):
        logging.log(level_num, message, *args, **kwargs)

    logging.addLevelName(level_num, level_name)
    setattr(logging, level_name, level_num)
    setattr(logging.getLoggerClass(), method_name, log_for_level)
    setattr(logging, method_name, log_to_root)


def set_up_logging(log_file: str | None = None, log_to_stdout: bool = True,
                   log_level: str | int = logging.INFO):
    """Set up logging for the levyfluid logger tree.

    Args:
        log_file: a file path to save the process log. Default is None.
        log_to_stdout: whether or not we print to stderr as well. Default is
            True.
        log_level: the log level to use, as a string or int. Default is INFO.
    """
    root = logging.getLogger(LOGGER_ROOT)

    if root.hasHandlers():  # Delete existing handlers before adding ours
        root.handlers.clear()

    if isinstance(log_level, str):
        log_level = LOG_LEVEL_STR_TO_INT[log_level.upper()]

    root.setLevel(log_level)

    handlers = []
    if log_file:
        handler = logging.FileHandler(log_file)
        handler.setFormatter(logging.Formatter(_FILE_FORMAT))
        handlers.append(handler)
    if log_to_stdout:
        handler = logging.StreamHandler(sys.stderr)
        handler.setFormatter(ColoredFormatter(_COLOR_FORMAT))
        handlers.append(handler)
    for handler in handlers:
        handler.setLevel(log_level)
        root.addHandler(handler)
