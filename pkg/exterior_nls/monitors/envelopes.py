"""
Check reports and the book of frozen implicit constants
"""

import os
import math
import logging
import threading
from dataclasses import dataclass, asdict
from typing import Dict, List, Optional, Sequence

import numpy as np
import pandas as pd
import yaml


logger = logging.getLogger(__name__)

CHECK_COLUMNS = ['name', 'lhs', 'rhs', 'fitted_constant', 'pass']


@dataclass
class CheckReport:
   """
   One acceptance check: lhs <= fitted_constant * rhs

   Plain tolerance checks leave fitted_constant at 1.
   """

   name: str
   lhs: float
   rhs: float
   fitted_constant: float = 1.0
   passed: bool = True

   def to_row(self) -> Dict[str, object]:
      row = asdict(self)
      row['pass'] = row.pop('passed')
      return row


def bound_check(name: str, lhs: float, rhs: float) -> CheckReport:
   """lhs <= rhs"""
   return CheckReport(name=name, lhs=float(lhs), rhs=float(rhs), passed=bool(lhs <= rhs))


def lower_bound_check(name: str, value: float, floor: float) -> CheckReport:
   """value >= floor, recorded as floor <= value"""
   return CheckReport(name=name, lhs=float(floor), rhs=float(value), passed=bool(value >= floor))


def monotone_check(name: str, values: Sequence[float], decreasing: bool = True,
                   rel_tol: float = 0.0) -> CheckReport:
   """
   Successive values strictly decrease (or increase)

   lhs holds the worst step ratio, rhs is 1.
   """
   v = np.asarray(values, dtype=float)
   if v.size < 2:
      return CheckReport(name=name, lhs=0.0, rhs=1.0, passed=True)
   with np.errstate(divide='ignore', invalid='ignore'):
      steps = v[1:] / v[:-1] if decreasing else v[:-1] / v[1:]
   worst = float(np.nanmax(steps)) if np.any(np.isfinite(steps)) else math.inf
   return CheckReport(name=name, lhs=worst, rhs=1.0, passed=bool(worst < 1.0 + rel_tol))


def reports_to_dataframe(reports: List[CheckReport]) -> pd.DataFrame:
   """Rows in the checks.csv schema"""
   return pd.DataFrame([r.to_row() for r in reports], columns=CHECK_COLUMNS)


class ConstantBook:
   """
   Implicit constants fitted by calibration runs and frozen for the rest

   fit() stores margin * max(lhs / rhs) under a name; check() only reads,
   so a name no calibration run has fitted fails its check. The book is a
   flat YAML mapping name -> constant.
   """

   def __init__(self, path: Optional[str] = None, margin: float = 1.5):
      self.path = path
      self.margin = margin
      self.constants: Dict[str, float] = {}
      self._lock = threading.Lock()
      self._dirty = False
      self.load()

   def load(self) -> None:
      if not self.path or not os.path.exists(self.path):
         return
      try:
         with open(self.path, 'r') as f:
            data = yaml.safe_load(f) or {}
      except (OSError, yaml.YAMLError) as e:
         logger.error(f"Failed to read calibration file {self.path}: {e}")
         return
      self.constants = {str(k): float(v) for k, v in data.items()}
      logger.debug(f"Loaded {len(self.constants)} frozen constants from {self.path}")

   def save(self) -> None:
      if not self.path:
         return
      with self._lock:
         if not self._dirty:
            return
         directory = os.path.dirname(self.path)
         if directory:
            os.makedirs(directory, exist_ok=True)
         with open(self.path, 'w') as f:
            yaml.safe_dump({k: float(v) for k, v in sorted(self.constants.items())}, f,
                           default_flow_style=False)
         self._dirty = False

   def get(self, name: str) -> Optional[float]:
      with self._lock:
         return self.constants.get(name)

   def freeze(self, name: str, value: float) -> None:
      """Store a constant as measured, without the margin"""
      with self._lock:
         self.constants[name] = float(value)
         self._dirty = True
      logger.info(f"Froze constant {name} = {float(value):.4e}")

   def fit(self, name: str, lhs, rhs, margin: Optional[float] = None) -> CheckReport:
      """
      Freeze C = margin * max(lhs / rhs), replacing an earlier value

      The report fails, and nothing is stored, when a ratio is not finite.
      """
      lhs, rhs, ratios, worst = _pairs(lhs, rhs)
      fitted = float(ratios[worst]) * (self.margin if margin is None else float(margin))
      if not math.isfinite(fitted):
         logger.warning(f"Cannot fit {name}: ratio {ratios[worst]} at rhs={rhs[worst]:.4e}")
         return CheckReport(name=name, lhs=float(lhs[worst]), rhs=float(rhs[worst]),
                            fitted_constant=fitted, passed=False)
      with self._lock:
         previous = self.constants.get(name)
         self.constants[name] = fitted
         self._dirty = True
      if previous is not None and previous != fitted:
         logger.info(f"Refitted constant {name}: {previous:.4e} -> {fitted:.4e}")
      else:
         logger.info(f"Froze constant {name} = {fitted:.4e}")
      return CheckReport(name=name, lhs=float(lhs[worst]), rhs=float(rhs[worst]),
                         fitted_constant=fitted, passed=True)

   def check(self, name: str, lhs, rhs) -> CheckReport:
      """
      lhs <= C * rhs with the frozen C, elementwise for array inputs

      The report carries the worst-case pair. Without a frozen C the check
      fails with fitted_constant NaN.
      """
      lhs, rhs, ratios, worst = _pairs(lhs, rhs)
      constant = self.get(name)
      if constant is None:
         logger.warning(f"No frozen constant for {name}; run a calibration scenario first")
         return CheckReport(name=name, lhs=float(lhs[worst]), rhs=float(rhs[worst]),
                            fitted_constant=math.nan, passed=False)

      passed = bool(np.all(lhs <= constant * rhs * (1.0 + 1e-12)))
      if not passed:
         logger.warning(f"Check {name} exceeds frozen constant {constant:.4e}: "
                        f"ratio {ratios[worst]:.4e}")
      return CheckReport(name=name, lhs=float(lhs[worst]), rhs=float(rhs[worst]),
                         fitted_constant=float(constant), passed=passed)


def _pairs(lhs, rhs):
   """Flattened inputs, their ratios (inf where rhs vanishes under positive lhs) and the worst index"""
   lhs = np.atleast_1d(np.asarray(lhs, dtype=float)).ravel()
   rhs = np.atleast_1d(np.asarray(rhs, dtype=float)).ravel()
   with np.errstate(divide='ignore', invalid='ignore'):
      ratios = np.where(rhs > 0.0, lhs / rhs, np.where(lhs > 0.0, np.inf, 0.0))
   ratios = np.where(np.isnan(ratios), np.inf, ratios)
   return lhs, rhs, ratios, int(np.argmax(ratios))
