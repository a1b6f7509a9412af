"""Fluctuation theory and reflection for Lévy-driven tree fluid networks.

Importing the package registers the TRACE log level, so every module may
call logger.trace().
"""

from .utils import log

log.add_logging_level("TRACE", log.TRACE_LOG_LEVEL)
