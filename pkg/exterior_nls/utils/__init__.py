"""
Utility functions and helpers
"""

from .logging_setup import setup_logging, create_run_logger, RunLoggerAdapter
from .formatters import format_duration, format_number
from .gridio import GridFormatError, read_field, write_field

__all__ = [
   'setup_logging', 'create_run_logger', 'RunLoggerAdapter',
   'format_duration', 'format_number',
   'GridFormatError', 'read_field', 'write_field',
]
