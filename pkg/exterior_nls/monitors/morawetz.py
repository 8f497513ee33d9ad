"""
Morawetz functional and local smoothing quadratures
"""

import math
from typing import Dict, Sequence, Tuple

import numpy as np
import pandas as pd
from scipy.integrate import trapezoid

from ..models.grid import Grid, GridField
from ..models.trace import RunTrace
from .conservation import gradient, gradient_norm, mass


class MonitorError(Exception):
   """Base exception for monitors"""
   pass


class OriginOutsideObstacle(MonitorError):
   """The Morawetz weight needs the origin inside the obstacle"""
   pass


def _smoothstep(s: np.ndarray) -> np.ndarray:
   s = np.clip(s, 0.0, 1.0)
   return s * s * s * (10.0 - 15.0 * s + 6.0 * s * s)


def _smoothstep_slope(s: np.ndarray) -> np.ndarray:
   inside = (s > 0.0) & (s < 1.0)
   return np.where(inside, 30.0 * s * s * (1.0 - s) ** 2, 0.0)


def bump(s: np.ndarray) -> np.ndarray:
   """phi = 1 on [0, 1], 0 beyond 2, C^2 in between"""
   return 1.0 - _smoothstep(np.asarray(s, dtype=float) - 1.0)


def weight_gradient(x: np.ndarray, R: float) -> np.ndarray:
   """
   grad a for a(x) = |x| phi(|x| / R)

   Equals x / |x| on |x| <= R and vanishes for |x| >= 2R.
   """
   x = np.asarray(x, dtype=float)
   r = np.linalg.norm(x, axis=-1)
   s = r / R
   radial = bump(s) - s * _smoothstep_slope(s - 1.0)
   with np.errstate(divide='ignore', invalid='ignore'):
      unit = np.where(r[..., None] > 0.0, x / r[..., None], 0.0)
   return unit * radial[..., None]


def _require_origin_inside(grid: Grid) -> None:
   rel = -grid.origin / grid.spacing
   inside_box = np.all(rel >= 0.0) and np.all(rel <= np.asarray(grid.dims) - 1)
   if not inside_box or not grid.mask[grid.index_of((0.0, 0.0, 0.0))]:
      raise OriginOutsideObstacle("The origin must be an obstacle cell for the Morawetz weight")


def morawetz(f: GridField, R: float) -> Tuple[float, float]:
   """
   F = int Im(conj(u) grad u) . grad a and int_{|x|<=R} |u|^6 / |x|

   Raises:
      OriginOutsideObstacle: If the origin is not a masked cell
   """
   grid = f.grid
   _require_origin_inside(grid)
   x = grid.centers()
   active = grid.active

   momentum = np.imag(np.conj(f.values)[..., None] * gradient(f))
   F = grid.cell_volume * float(np.sum((momentum * weight_gradient(x, R)).sum(axis=-1)[active]))

   r = np.linalg.norm(x, axis=-1)
   ball = active & (r <= R)
   potential = grid.cell_volume * float(np.sum(np.abs(f.values[ball]) ** 6 / r[ball]))
   return F, potential


def morawetz_inequality(trace: RunTrace, A: float, diameter: float) -> Dict[str, float]:
   """
   int_I int_{|x| <= A|I|^(1/2)} |u|^6 / |x| against A |I|^(1/2)

   Raises:
      ValueError: If A < 1 or A |I|^(1/2) < diameter
   """
   length = trace.duration
   radius = A * math.sqrt(length)
   if A < 1.0:
      raise ValueError(f"A must be >= 1, got {A}")
   if radius < diameter * (1.0 - 1e-12):
      raise ValueError(f"A|I|^(1/2) = {radius:.4g} is below the obstacle diameter {diameter:.4g}")

   potentials = [morawetz(trace.field_at(i), radius)[1] for i in range(len(trace))]
   lhs = float(trapezoid(potentials, trace.times))
   return {'lhs': lhs, 'rhs': radius, 'ratio': lhs / radius, 'radius': radius}


def local_smoothing(trace: RunTrace, z: Sequence[float], R: float) -> float:
   """int_I int |grad u|^2 <(x - z) / R>^-3 dx dt"""
   if len(trace) < 2:
      return 0.0
   z = np.asarray(z, dtype=float)
   values = []
   weight, grid = None, None
   for i in range(len(trace)):
      f = trace.field_at(i)
      if f.grid is not grid:
         grid = f.grid
         d = (f.grid.centers() - z) / R
         weight = (1.0 + np.sum(d * d, axis=-1)) ** -1.5
      density = np.sum(np.abs(gradient(f)) ** 2, axis=-1)
      values.append(f.grid.cell_volume * float(np.sum((density * weight)[f.grid.active])))
   return float(trapezoid(values, trace.times))


def local_smoothing_report(trace: RunTrace, z: Sequence[float], R: float) -> Dict[str, float]:
   """Left side with the ratio to R ||u0||_2 ||grad u0||_2"""
   lhs = local_smoothing(trace, z, R)
   u0 = trace.field_at(0)
   rhs = R * math.sqrt(mass(u0)) * gradient_norm(u0)
   return {'lhs': lhs, 'rhs': rhs, 'ratio': lhs / rhs if rhs > 0.0 else 0.0}


PROBE_COLUMNS = ['z1', 'z2', 'z3', 'R']


def smoothing_probes(rng: np.random.Generator, path: np.ndarray, scale: float, count: int,
                     radii: Tuple[float, float] = (0.5, 8.0)) -> np.ndarray:
   """
   Random (z, R) rows along a sampled packet path

   z is uniform in the parameter of the polyline through the rows of
   path and R is log-uniform in scale * radii. For a packet moving along
   the path the largest ratio at each R is attained on it.
   """
   path = np.atleast_2d(np.asarray(path, dtype=float))
   if len(path) == 1:
      z = np.repeat(path, count, axis=0)
   else:
      s = rng.uniform(0.0, len(path) - 1, size=count)
      k = np.minimum(s.astype(int), len(path) - 2)
      z = path[k] + (s - k)[:, None] * (path[k + 1] - path[k])
   R = scale * np.exp(rng.uniform(math.log(radii[0]), math.log(radii[1]), size=count))
   return np.column_stack([z, R])


def translated_probes(probes: np.ndarray, rng: np.random.Generator, factor: float = 5.0) -> np.ndarray:
   """Each z moved by factor * R in a random direction, R kept"""
   probes = np.asarray(probes, dtype=float)
   direction = rng.normal(size=(len(probes), 3))
   direction /= np.linalg.norm(direction, axis=1, keepdims=True)
   moved = probes.copy()
   moved[:, :3] += factor * probes[:, 3:4] * direction
   return moved


def local_smoothing_table(trace: RunTrace, probes: np.ndarray) -> pd.DataFrame:
   """
   local_smoothing_report for many (z, R) rows in one pass over the trace

   Columns z1, z2, z3, R, lhs, rhs, ratio.
   """
   probes = np.atleast_2d(np.asarray(probes, dtype=float))
   count = len(probes)
   values = np.zeros((len(trace), count))
   weights, grid = None, None
   for i in range(len(trace)):
      f = trace.field_at(i)
      if f.grid is not grid:
         grid = f.grid
         x = grid.centers()[grid.active]
         weights = []
         for z1, z2, z3, R in probes:
            d = (x - np.array([z1, z2, z3])) / R
            weights.append((1.0 + np.sum(d * d, axis=-1)) ** -1.5)
      density = np.sum(np.abs(gradient(f)) ** 2, axis=-1)[grid.active]
      values[i] = [grid.cell_volume * float(np.sum(density * w)) for w in weights]

   if len(trace) >= 2:
      lhs = trapezoid(values, trace.times, axis=0)
   else:
      lhs = np.zeros(count)
   u0 = trace.field_at(0)
   rhs = probes[:, 3] * math.sqrt(mass(u0)) * gradient_norm(u0)
   with np.errstate(divide='ignore', invalid='ignore'):
      ratio = np.where(rhs > 0.0, lhs / rhs, 0.0)
   table = pd.DataFrame(probes, columns=PROBE_COLUMNS)
   table['lhs'] = lhs
   table['rhs'] = rhs
   table['ratio'] = ratio
   return table
