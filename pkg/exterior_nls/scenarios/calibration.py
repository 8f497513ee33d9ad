"""
calibration: reference runs that freeze the implicit constants

The Morawetz, local smoothing, heat kernel and frame coefficient bounds
hold with constants nobody writes down. This scenario measures them once
on reference data, stores margin * (largest ratio) in the calibration
book and leaves checking to the other scenarios, which only read it.

  morawetz              quintic runs of the nls-morawetz setup, one per amplitude
  local_smoothing       free Gaussian of the same width and momentum, closed form
  heat_envelope         heat column next to parameters.heat_obstacle; freezes c too
  coefficient_envelope  decompositions of parameters.decomposition_profile
                        along the epsilon ladder; freezes the tail constant too
"""

import math
from typing import Optional

import numpy as np
import pandas as pd

from ..beams import free_packet_eval
from ..config import ConfigError, ScenarioKind
from ..models.body import ConvexBody
from ..models.grid import Grid
from ..models.trace import RunTrace
from ..monitors.envelopes import CheckReport, lower_bound_check
from ..monitors.heat_envelope import heat_envelope_check
from ..monitors.morawetz import morawetz_inequality
from ..profiles import Profile
from ..solvers.gridsolver import rasterize
from .decomposition import (
   COEFFICIENT_ENVELOPE, DECOMPOSITION_TAIL, decomposition_ladder, ladder_tables, tail_reference
)
from .green import HEAT_DECAY, HEAT_PREFACTOR, heat_summary, probe_pair
from .nls_monitor import NLSMorawetzScenario, NLSSetup


PARTS = ('morawetz', 'local_smoothing', 'heat_envelope', 'coefficient_envelope')


class CalibrationScenario(NLSMorawetzScenario):
   """Fits every constant named in parameters.fit (default: all of them)"""

   kind = ScenarioKind.CALIBRATION

   def fitted(self, name: str, lhs, rhs, label: Optional[str] = None) -> CheckReport:
      """Freeze C = margin * max(lhs / rhs) under name"""
      margin = self.cfg.param('margin')
      report = self.book.fit(name, lhs, rhs, margin=None if margin is None else float(margin))
      report.name = label or f"{name}_fit"
      return self.add_check(report)

   def execute(self) -> None:
      cfg = self.cfg
      parts = [str(p) for p in cfg.param('fit', list(PARTS))]
      unknown = sorted(set(parts) - set(PARTS))
      if unknown:
         raise ConfigError(f"Unknown calibration parts {unknown}, expected some of {list(PARTS)}")

      if 'morawetz' in parts or 'local_smoothing' in parts:
         setup = self.setup()
         if 'morawetz' in parts:
            self._morawetz(setup)
         if 'local_smoothing' in parts:
            self._local_smoothing(setup)
      if 'heat_envelope' in parts:
         self._heat_envelope()
      if 'coefficient_envelope' in parts:
         self._coefficient_envelope()

      self.result.summary['constants'] = {
         name: self.book.get(name) for name in
         ('morawetz', 'local_smoothing', HEAT_PREFACTOR, HEAT_DECAY,
          COEFFICIENT_ENVELOPE, DECOMPOSITION_TAIL)
         if self.book.get(name) is not None
      }

   def _morawetz(self, setup: NLSSetup) -> None:
      """One constant covering every amplitude of the ladder"""
      cfg = self.cfg
      amplitudes = [float(a) for a in cfg.param('amplitudes', [cfg.param('amplitude', 1.0)])]
      rows = []
      for amplitude in amplitudes:
         _, trace = self.nls_run(setup, amplitude)
         report = morawetz_inequality(trace, setup.A, setup.body.diameter)
         energy = float(trace.scalars['energy'][0]) if 'energy' in trace.scalars else math.nan
         rows.append({'amplitude': amplitude, 'energy': energy, **report})
      table = pd.DataFrame(rows)
      self.result.tables['morawetz'] = table
      self.fitted("morawetz", table['lhs'].to_numpy(), table['rhs'].to_numpy())

   def _local_smoothing(self, setup: NLSSetup) -> None:
      """Closed-form free evolution sampled on boxes that follow the packet"""
      packet = setup.packet
      sigma = packet.sigma
      h = setup.spacing
      spreads = float(self.cfg.param('smoothing_spreads', 4.0))

      def grid_for(t: float) -> Grid:
         half = spreads * math.sqrt(sigma ** 4 + t * t) / sigma
         n = max(int(math.ceil(2.0 * half / h)) + 1, 8)
         center = packet.center + 2.0 * t * packet.xi
         return Grid.empty((n, n, n), h, center - 0.5 * h * (n - 1))

      count = max(setup.steps // setup.record_every, 1) + 1
      times = np.linspace(0.0, setup.horizon, count)
      trace = RunTrace.from_adaptive_evaluator(grid_for, lambda t, x: free_packet_eval(packet, t, x), times)
      self.local_smoothing_checks(trace, setup.path(), sigma)

   def _heat_envelope(self) -> None:
      """Heat column next to parameters.heat_obstacle (default: the configured obstacle)"""
      cfg = self.cfg
      spec = cfg.param('heat_obstacle')
      body = ConvexBody.from_spec(spec) if spec else self.body()
      h = float(cfg.param('heat_spacing', 0.1))
      dims = [int(d) for d in cfg.param('heat_dims', cfg.grid.dims)]
      center = np.asarray(body.center_hint, dtype=float)
      origin = center - 0.5 * h * (np.asarray(dims) - 1)
      grid = rasterize(body, dims, h, origin=origin, margin_cells=int(cfg.grid.margin_cells))
      y, _ = probe_pair(body, float(cfg.param('probe_gap', 0.5)))

      dt = h ** 2 / 4.0
      t = float(cfg.param('heat_time', 40.0 * dt))
      report = heat_envelope_check(grid, y, t, dt=dt, settings=self.settings)
      self.add_check(lower_bound_check("heat_envelope_dominated", report.dominated_fraction, 0.99))
      self.book.freeze(HEAT_DECAY, report.c)
      self.fitted(HEAT_PREFACTOR, report.prefactor, 1.0)
      self.result.summary['heat_envelope'] = heat_summary(report)

   def _coefficient_envelope(self) -> None:
      cfg = self.cfg
      profile = Profile.from_spec(cfg.param('decomposition_profile', {'kind': 'bump'}))
      rungs = decomposition_ladder(profile, cfg.epsilon_ladder, cfg.delta_rule)
      table, coefficients = ladder_tables(rungs)
      self.result.tables['decomposition'] = table
      self.fitted(COEFFICIENT_ENVELOPE, coefficients['abs_c'].to_numpy(),
                  coefficients['envelope'].to_numpy())
      self.fitted(DECOMPOSITION_TAIL, table['tail_mass'].to_numpy(), tail_reference(table))
