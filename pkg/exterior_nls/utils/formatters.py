"""
Formatting helpers for tables and summaries
"""

import math
from typing import Optional, Sequence, Union


def format_duration(seconds: Union[int, float, None]) -> str:
   """
   Wall-clock duration as a short string

   Returns:
      e.g. "850ms", "12.4s", "3m 20s", "1h 5m"
   """
   if seconds is None:
      return "N/A"
   try:
      seconds = float(seconds)
   except (ValueError, TypeError):
      return "N/A"
   if seconds < 0 or not math.isfinite(seconds):
      return "N/A"

   if seconds < 1.0:
      return f"{seconds * 1000:.0f}ms"
   if seconds < 60.0:
      return f"{seconds:.1f}s"

   total = int(seconds)
   hours = total // 3600
   minutes = (total % 3600) // 60
   secs = total % 60
   if hours > 0:
      return f"{hours}h {minutes}m" if minutes > 0 else f"{hours}h"
   return f"{minutes}m {secs}s" if secs > 0 else f"{minutes}m"


def format_number(value: Optional[float], digits: int = 4) -> str:
   """
   Numeric cell for tables

   Scientific notation outside [1e-3, 1e4), fixed otherwise.
   """
   if value is None:
      return "N/A"
   try:
      value = float(value)
   except (ValueError, TypeError):
      return "N/A"
   if math.isnan(value):
      return "nan"
   if math.isinf(value):
      return "inf" if value > 0 else "-inf"
   if value == 0.0:
      return "0"
   magnitude = abs(value)
   if magnitude < 1e-3 or magnitude >= 1e4:
      return f"{value:.{digits - 1}e}"
   return f"{value:.{digits}g}"


def format_vector(values: Optional[Sequence[float]], digits: int = 3) -> str:
   """(a, b, c) with each entry through format_number"""
   if values is None:
      return "N/A"
   return "(" + ", ".join(format_number(v, digits) for v in values) + ")"


def format_status(passed: Optional[bool]) -> str:
   if passed is None:
      return "N/A"
   return "PASS" if passed else "FAIL"


def truncate_string(text: str, max_length: int, suffix: str = "...") -> str:
   """
   Truncate string to maximum length

   Args:
      text: String to truncate
      max_length: Maximum length
      suffix: Suffix to add if truncated
   """
   if len(text) <= max_length:
      return text
   return text[:max_length - len(suffix)] + suffix
