"""
Heat kernel of the masked grid against the convex-exterior envelope

  k(t, x, y) <= C (d(x)/(sqrt t ^ diam) ^ 1)(d(y)/(sqrt t ^ diam) ^ 1) e^(-c|x-y|^2/t) t^(-3/2)
"""

import logging
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np
from scipy.ndimage import binary_dilation, distance_transform_edt

from ..config import SolverConfig
from ..geometry import distance
from ..models.body import ObstacleKind
from ..models.grid import Grid, GridField
from ..solvers.gridsolver import heat_kernel_formula, heat_step, point_source


logger = logging.getLogger(__name__)


@dataclass
class HeatEnvelopeReport:
   """Fitted envelope of one heat kernel column"""

   t: float
   steps: int
   c: float
   prefactor: float
   dominated_fraction: float
   violations: int
   max_ratio: float
   cells: int
   boundary_ratio: float
   mass: float

   @property
   def passed(self) -> bool:
      return self.c > 0.0 and self.dominated_fraction >= 0.99


def distance_field(grid: Grid) -> np.ndarray:
   """d(x) at cell centers; exact for spheres, Euclidean distance to the mask otherwise"""
   if grid.body is not None and grid.body.kind == ObstacleKind.SPHERE:
      return np.asarray(distance(grid.body, grid.centers()), dtype=float)
   if grid.mask.any():
      return distance_transform_edt(grid.active) * grid.spacing
   return np.full(grid.dims, np.inf)


def heat_kernel_column(grid: Grid, y: Sequence[float], t: float, dt: Optional[float] = None,
                       settings: Optional[SolverConfig] = None) -> GridField:
   """
   Evolve delta_y / h^3 by heat steps up to time t

   dt defaults to h^2 / 4, inside the positivity range of the scheme.
   """
   dt = grid.spacing ** 2 / 4.0 if dt is None else dt
   steps = max(int(math.ceil(t / dt)), 1)
   dt = t / steps
   f = point_source(grid, y)
   for _ in range(steps):
      f = heat_step(f, dt, settings)
   return f


def heat_envelope_check(grid: Grid, y: Sequence[float], t: float, dt: Optional[float] = None,
                        settings: Optional[SolverConfig] = None,
                        c_ladder: Optional[Sequence[float]] = None,
                        floor: float = 1e-6, tail_limit: float = 2.0) -> HeatEnvelopeReport:
   """
   Fit c and the prefactor so the envelope dominates the discrete kernel

   For c descending from 1/4 the prefactor is the 99% quantile of
   k / envelope over active cells with k > floor * max k. The first c whose
   largest ratio stays within tail_limit times that quantile is kept.

   Raises:
      ValueError: If t < 10 dt
   """
   dt = grid.spacing ** 2 / 4.0 if dt is None else dt
   if t < 10.0 * dt:
      raise ValueError(f"t={t} must be at least 10 dt = {10.0 * dt}")

   column = heat_kernel_column(grid, y, t, dt, settings)
   k = np.real(column.values)
   steps = max(int(math.ceil(t / dt)), 1)

   x = grid.centers()
   d = distance_field(grid)
   diam = grid.body.diameter if grid.body is not None else math.inf
   scale = min(math.sqrt(t), diam)
   factor = np.minimum(d / scale, 1.0)
   fy = factor[grid.index_of(y)]

   sampled = grid.active & (k > floor * k.max())
   r2 = np.sum((x - np.asarray(y, dtype=float)) ** 2, axis=-1)

   ladder = list(c_ladder) if c_ladder is not None else [0.25 - 0.01 * i for i in range(21)]
   chosen = None
   for c in ladder:
      env = factor * fy * np.exp(-c * r2 / t) * t ** -1.5
      ratios = k[sampled] / env[sampled]
      q99 = float(np.quantile(ratios, 0.99, method="higher"))
      top = float(ratios.max())
      if top <= tail_limit * q99:
         chosen = (c, q99, ratios)
         break
   if chosen is None:
      logger.warning(f"No c in the ladder keeps the envelope tail within {tail_limit}x")
      chosen = (ladder[-1], q99, ratios)
   c, q99, ratios = chosen

   adjacent = grid.active & binary_dilation(grid.mask)
   if adjacent.any():
      free = heat_kernel_formula(t, x[adjacent], y)
      boundary_ratio = float(np.max(k[adjacent] / free / np.maximum(factor[adjacent], 1e-300)))
   else:
      boundary_ratio = 0.0

   report = HeatEnvelopeReport(
      t=float(t),
      steps=steps,
      c=float(c),
      prefactor=q99,
      dominated_fraction=float(np.mean(ratios <= q99 * (1.0 + 1e-12))),
      violations=int(np.sum(ratios > q99 * (1.0 + 1e-12))),
      max_ratio=float(ratios.max()),
      cells=int(sampled.sum()),
      boundary_ratio=boundary_ratio,
      mass=float(grid.cell_volume * k.sum())
   )
   logger.debug(f"Heat envelope at t={t:.4e}: c={report.c:.3f}, prefactor={report.prefactor:.3e}")
   return report
