"""
Shared machinery of the built-in scenarios
"""

import logging
import math
import time
from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from typing import Any, Dict, List, Optional

import numpy as np
import pandas as pd

from ..config import ScenarioConfig, ScenarioKind, SolverConfig
from ..models.body import ConvexBody
from ..models.grid import Grid, GridField
from ..models.trace import RunTrace
from ..monitors.envelopes import CheckReport, ConstantBook, bound_check, monotone_check
from ..monitors.morawetz import local_smoothing_table, smoothing_probes, translated_probes
from ..utils.logging_setup import create_run_logger


SCALAR_COLUMNS = ['t', 'mass', 'energy', 'F', 'potential_term']
PACKET_COLUMNS = ['n1', 'n2', 'n3', 'class', 't_c', 'abs_c', 'residual_sup']


@dataclass
class ScenarioResult:
   """Everything a scenario run produced"""

   name: str
   kind: str
   checks: List[CheckReport] = field(default_factory=list)
   scalars: Optional[pd.DataFrame] = None
   packets: Optional[pd.DataFrame] = None
   tables: Dict[str, pd.DataFrame] = field(default_factory=dict)
   fields: Dict[str, GridField] = field(default_factory=dict)
   summary: Dict[str, Any] = field(default_factory=dict)
   flags: List[str] = field(default_factory=list)
   elapsed: float = 0.0
   strict: bool = False

   @property
   def failed_checks(self) -> List[CheckReport]:
      return [c for c in self.checks if not c.passed]

   @property
   def passed(self) -> bool:
      """All checks pass; in strict mode monitor flags fail the run too"""
      if self.failed_checks:
         return False
      return not (self.strict and self.flags)


def l2_distance(a: np.ndarray, b: np.ndarray, where: Optional[np.ndarray] = None) -> float:
   """Discrete L2 norm of a - b over the selected cells (unscaled)"""
   d = np.asarray(a) - np.asarray(b)
   if where is not None:
      d = d[where]
   return float(np.sqrt(np.sum(np.abs(d) ** 2)))


def relative_l2(a: np.ndarray, b: np.ndarray, where: Optional[np.ndarray] = None) -> float:
   """||a - b|| / ||b|| over the selected cells"""
   ref = np.asarray(b) if where is None else np.asarray(b)[where]
   norm = float(np.sqrt(np.sum(np.abs(ref) ** 2)))
   if norm == 0.0:
      return math.inf if l2_distance(a, b, where) > 0.0 else 0.0
   return l2_distance(a, b, where) / norm


def box_around(lower: np.ndarray, upper: np.ndarray, spacing: float, minimum: int = 8) -> Dict[str, Any]:
   """Cell count and origin of the smallest grid covering [lower, upper]"""
   lower = np.asarray(lower, dtype=float)
   upper = np.asarray(upper, dtype=float)
   dims = [max(int(math.ceil((u - l) / spacing)) + 1, minimum) for l, u in zip(lower, upper)]
   center = 0.5 * (lower + upper)
   origin = center - 0.5 * spacing * (np.asarray(dims) - 1)
   return {'dims': dims, 'origin': origin}


class BaseScenario(ABC):
   """
   Base class for scenarios

   Subclasses implement execute() and record their checks, tables, fields
   and summary values through the helpers below.
   """

   kind: ScenarioKind = None

   def __init__(self, cfg: ScenarioConfig, settings: Optional[SolverConfig] = None,
                book: Optional[ConstantBook] = None):
      self.cfg = cfg
      self.settings = settings or SolverConfig()
      self.book = book or ConstantBook()
      self.rng = np.random.default_rng(int(cfg.seed))
      self.logger = create_run_logger(f"exterior_nls.scenarios.{cfg.kind}", scenario=cfg.name)
      self.result = ScenarioResult(name=cfg.name, kind=cfg.kind, strict=bool(cfg.strict))

   @abstractmethod
   def execute(self) -> None:
      """Run the experiment, filling self.result"""
      pass

   def run(self) -> ScenarioResult:
      start = time.perf_counter()
      self.logger.info(f"Starting {self.cfg.kind}")
      self.execute()
      self.result.elapsed = time.perf_counter() - start
      failed = len(self.result.failed_checks)
      self.logger.info(f"Finished in {self.result.elapsed:.1f}s: {len(self.result.checks)} checks, "
                       f"{failed} failed, {len(self.result.flags)} flags")
      return self.result

   # Recording helpers

   def add_check(self, report: CheckReport) -> CheckReport:
      self.result.checks.append(report)
      if not report.passed:
         self.logger.warning(f"Check {report.name} failed: lhs={report.lhs:.4e}, "
                             f"rhs={report.rhs:.4e}, C={report.fitted_constant:.4e}")
      return report

   def bound(self, name: str, lhs: float, rhs: float) -> CheckReport:
      return self.add_check(bound_check(name, lhs, rhs))

   def monotone(self, name: str, values, decreasing: bool = True) -> CheckReport:
      return self.add_check(monotone_check(name, values, decreasing=decreasing))

   def fitted(self, name: str, lhs, rhs, label: Optional[str] = None) -> CheckReport:
      """lhs <= C rhs with C frozen in the calibration book under name"""
      report = self.book.check(name, lhs, rhs)
      if label:
         report.name = label
      return self.add_check(report)

   def local_smoothing_checks(self, trace: RunTrace, path: np.ndarray, scale: float) -> pd.DataFrame:
      """
      Local smoothing ratios at random (z, R), z on the sampled packet path and R in units of scale

      The probes are measured again with each z moved by 5R; the largest
      moved ratio must stay within twice the largest original one.
      """
      count = int(self.cfg.param('smoothing_probes', 20))
      probes = smoothing_probes(self.rng, path, scale, count)
      table = local_smoothing_table(trace, probes)
      moved = local_smoothing_table(trace, translated_probes(probes, self.rng, 5.0))
      self.result.tables['local_smoothing'] = table
      self.result.tables['local_smoothing_translated'] = moved

      self.fitted("local_smoothing", table['lhs'].to_numpy(), table['rhs'].to_numpy())
      top = float(table['ratio'].max()) if len(table) else 0.0
      shifted = float(moved['ratio'].max()) if len(moved) else 0.0
      self.bound("local_smoothing_translation", shifted / top if top > 0.0 else 0.0, 2.0)
      return table

   def flag(self, message: str) -> None:
      self.result.flags.append(message)
      self.logger.warning(message)

   def flag_boundary_mass(self, series, label: str) -> None:
      worst = float(np.max(series)) if len(series) else 0.0
      self.result.summary[f'{label}_boundary_mass'] = worst
      if worst > self.settings.boundary_mass_flag:
         self.flag(f"{label}: boundary mass {worst:.3e} exceeds {self.settings.boundary_mass_flag:.1e}")

   # Configuration helpers

   def body(self) -> ConvexBody:
      return ConvexBody.from_spec(self.cfg.obstacle.to_dict())

   def spacing_for(self, sigma: float) -> float:
      """Grid spacing: explicit value or sigma / points_per_sigma"""
      if self.cfg.grid.spacing is not None:
         return float(self.cfg.grid.spacing)
      return sigma / float(self.cfg.grid.points_per_sigma)

   def time_step(self, default: float) -> float:
      return float(self.cfg.time.dt) if self.cfg.time.dt is not None else default

   def empty_grid(self, spacing: float, center: Optional[np.ndarray] = None) -> Grid:
      dims = [int(d) for d in self.cfg.grid.dims]
      origin = None
      if center is not None:
         origin = np.asarray(center, dtype=float) - 0.5 * spacing * (np.asarray(dims) - 1)
      return Grid.empty(dims, spacing, origin)
