"""
Strichartz norms and scattering size of run traces
"""

import math
from typing import Optional

import numpy as np
from scipy.integrate import quad, trapezoid
from scipy.special import erfc

from ..models.grid import GridField
from ..models.trace import RunTrace


def is_admissible(q: float, r: float, tol: float = 1e-12) -> bool:
   """2/q + 3/r = 3/2 with 2 <= q <= inf"""
   return q >= 2.0 and abs(2.0 / q + 3.0 / r - 1.5) <= tol


def lebesgue_norm(f: GridField, r: float) -> float:
   """Discrete L^r_x norm"""
   if math.isinf(r):
      return float(np.max(np.abs(f.values)))
   return float((f.grid.cell_volume * np.sum(np.abs(f.values) ** r)) ** (1.0 / r))


def spatial_norms(trace: RunTrace, r: float) -> np.ndarray:
   return np.array([lebesgue_norm(trace.field_at(i), r) for i in range(len(trace))])


def strichartz_norm(trace: RunTrace, q: float, r: float) -> float:
   """
   ||u||_{L^q_t L^r_x} with the trapezoid rule in time

   A single-snapshot trace has zero length and gives 0.
   """
   if q < 1.0 or r < 1.0:
      raise ValueError(f"Exponents must be >= 1, got q={q}, r={r}")
   if len(trace) < 2:
      return 0.0
   norms = spatial_norms(trace, r)
   return float(trapezoid(norms ** q, trace.times) ** (1.0 / q))


def scattering_size(trace: RunTrace) -> float:
   """
   int int |u|^10 dx dt over the trace interval

   Kept as the integral itself, not its tenth root, so that it is additive
   over adjacent intervals.
   """
   if len(trace) < 2:
      return 0.0
   return float(trapezoid(spatial_norms(trace, 10.0) ** 10, trace.times))


def gaussian_lebesgue_power(sigma: float, t: float, r: float,
                            wall_offset: Optional[float] = None) -> float:
   """
   int |u(t)|^r dx for the free normalized Gaussian packet of width sigma

   With wall_offset = s the integral is restricted to the far side of a
   plane at signed distance s from the packet center (x3 <= c3 - s), which
   is the image term seen in the halfspace.
   """
   a2 = sigma ** 4 + t * t
   amp = (2.0 * math.pi) ** -0.75 * sigma ** 1.5 * a2 ** -0.75
   beta = r * sigma ** 2 / (4.0 * a2)
   full = amp ** r * (math.pi / beta) ** 1.5
   if wall_offset is None:
      return full
   return full * 0.5 * float(erfc(math.sqrt(beta) * wall_offset))


def gaussian_strichartz_norm(sigma: float, q: float, r: float, horizon: float,
                             center3: Optional[float] = None, xi3: float = 0.0) -> float:
   """
   Semi-analytic ||u||_{L^q_t L^r_x([0, T])} for a free Gaussian packet

   When center3 is given, the spatial norm is taken over {x3 <= 0} for a
   packet whose center moves as center3 + 2 xi3 t.
   """
   def integrand(t: float) -> float:
      offset = None if center3 is None else center3 + 2.0 * xi3 * t
      return gaussian_lebesgue_power(sigma, t, r, offset) ** (q / r)

   value, _ = quad(integrand, 0.0, horizon, epsabs=0.0, epsrel=1e-12, limit=200)
   return value ** (1.0 / q)
