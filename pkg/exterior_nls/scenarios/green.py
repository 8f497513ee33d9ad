"""
green-ladder: resolvents of shrinking obstacles against the free box

For z < 0 the masked resolvent is a principal submatrix inverse of an
M-matrix, so 0 <= G_Omega <= G_free holds cellwise and G_Omega grows as
the obstacle shrinks. Heat kernel columns are checked against the
envelope constants frozen by a calibration run.
"""

from typing import Dict, List, Tuple

import numpy as np
import pandas as pd

from ..config import ScenarioKind
from ..models.body import ConvexBody
from ..models.grid import Grid
from ..monitors.envelopes import lower_bound_check
from ..monitors.heat_envelope import HeatEnvelopeReport, heat_envelope_check
from ..solvers.gridsolver import (
   free_copy, halfspace_grid, halfspace_resolvent_formula, rasterize, resolvent
)
from .base import BaseScenario


DEFAULT_ENERGIES = [-1.9, -1.5, -1.1]
DEFAULT_SCALES = [1.0, 0.5, 0.25]

# Calibration book names of the envelope prefactor C and decay rate c
HEAT_PREFACTOR = "heat_envelope"
HEAT_DECAY = "heat_envelope_c"


class GreenLadderScenario(BaseScenario):
   """Sandwich, shrinking-obstacle ladder, halfspace image formula and heat envelope"""

   kind = ScenarioKind.GREEN_LADDER

   def execute(self) -> None:
      cfg = self.cfg
      energies = [float(z) for z in cfg.param('energies', DEFAULT_ENERGIES)]
      scales = [float(s) for s in cfg.param('scales', DEFAULT_SCALES)]
      h = float(cfg.grid.spacing) if cfg.grid.spacing is not None else 0.1
      base = self.body()
      center = np.asarray(base.center_hint, dtype=float)
      y, x = probe_pair(base, float(cfg.param('probe_gap', 0.5)))

      box = self.empty_grid(h, center=center)
      free = free_copy(box)
      grids = [rasterize(base.scaled(s), cfg.grid.dims, h, origin=box.origin,
                         margin_cells=int(cfg.grid.margin_cells)) for s in scales]
      for s, grid in zip(scales, grids):
         if not grid.mask.any():
            self.flag(f"obstacle at scale {s:g} covers no cell center at h={h:g}")

      ix = free.index_of(x)
      rows = []
      for z in energies:
         run = self.logger.child(z=z)
         G_free = np.real(resolvent(free, z, y, self.settings).values)
         tol = 1e-7 * float(np.max(np.abs(G_free)))
         gaps: List[float] = []
         for s, grid in zip(scales, grids):
            G = np.real(resolvent(grid, z, y, self.settings).values)
            lower = float(np.min(G[grid.active]))
            excess = float(np.max((G - G_free)[grid.active]))
            self.bound(f"sandwich_lower_z_{z:g}_scale_{s:g}", -lower, tol)
            self.bound(f"sandwich_upper_z_{z:g}_scale_{s:g}", excess, tol)
            gap = abs(G_free[ix] - G[ix])
            gaps.append(gap)
            rows.append({
               'z': z, 'scale': s, 'masked_cells': int(grid.mask.sum()),
               'G_free_probe': float(G_free[ix]), 'G_obstacle_probe': float(G[ix]),
               'difference': gap, 'min_G': lower, 'max_excess': excess,
            })
            run.debug(f"scale={s:g}: |G_free - G| at probe = {gap:.4e}")
         self.monotone(f"ladder_decreasing_z_{z:g}", gaps)

      self.result.tables['ladder'] = pd.DataFrame(rows)
      self._halfspace_image(h, energies)
      if cfg.param("heat_envelope", True):
         self._heat_envelope(scales, grids, y)

   def _halfspace_image(self, h: float, energies: List[float]) -> None:
      """Discrete halfspace resolvent against G(x, y) - G(x, ybar)"""
      cfg = self.cfg
      grid = halfspace_grid(cfg.grid.dims, h, plane_index=4)
      y = grid.point_of(grid.index_of(cfg.param('image_source', [0.0, 0.0, 0.5])))
      ix = grid.index_of(cfg.param('image_probe', [0.0, 0.0, 1.5]))
      x = grid.point_of(ix)
      tolerance = float(cfg.param('image_tolerance', 0.05))
      rows = []
      for z in energies:
         G = np.real(resolvent(grid, z, y, self.settings).values)
         exact = float(np.real(halfspace_resolvent_formula(z, x, y)))
         error = abs(G[ix] - exact) / abs(exact)
         self.bound(f"halfspace_image_z_{z:g}", error, tolerance)
         rows.append({'z': z, 'grid': float(G[ix]), 'formula': exact, 'relative_error': error})
      self.result.tables['halfspace_image'] = pd.DataFrame(rows)

   def _heat_envelope(self, scales: List[float], grids: List[Grid], y: np.ndarray) -> None:
      """Heat kernel columns against the envelope with c and C frozen by calibration"""
      cfg = self.cfg
      h = grids[0].spacing
      dt = h ** 2 / 4.0
      t = float(cfg.param('heat_time', 40.0 * dt))
      c = self.book.get(HEAT_DECAY)
      checked = [float(s) for s in cfg.param('heat_scales', [scales[0], scales[-1]])]
      summary = {}
      for s, grid in zip(scales, grids):
         if s not in checked:
            continue
         report = heat_envelope_check(grid, y, t, dt=dt, settings=self.settings,
                                      c_ladder=None if c is None else [c])
         self.add_check(lower_bound_check(f"heat_envelope_dominated_scale_{s:g}",
                                          report.dominated_fraction, 0.99))
         self.fitted(HEAT_PREFACTOR, report.prefactor, 1.0, label=f"heat_envelope_scale_{s:g}")
         summary[f"{s:g}"] = heat_summary(report)
      self.result.summary['heat_envelope'] = summary


def probe_pair(body: ConvexBody, gap: float) -> Tuple[np.ndarray, np.ndarray]:
   """Source y and probe x on either side of the obstacle along e1"""
   center = np.asarray(body.center_hint, dtype=float)
   offset = body.bounding_radius + gap
   e1 = np.array([1.0, 0.0, 0.0])
   return center - offset * e1, center + offset * e1


def heat_summary(report: HeatEnvelopeReport) -> Dict[str, float]:
   return {
      't': report.t, 'steps': report.steps, 'c': report.c, 'prefactor': report.prefactor,
      'dominated_fraction': report.dominated_fraction, 'violations': report.violations,
      'max_ratio': report.max_ratio, 'cells': report.cells,
      'boundary_ratio': report.boundary_ratio, 'mass': report.mass,
   }
