"""
Analytic initial profiles psi supported in the unit ball
"""

from typing import Callable, Sequence, Optional
from dataclasses import dataclass, field
from enum import Enum
from functools import lru_cache

import numpy as np

from .models.grid import GridField
from .utils.gridio import interpolate_field, read_field


class ProfileKind(Enum):
   """Built-in profile shapes"""
   GAUSSIAN = "gaussian"
   BUMP = "bump"
   SMOOTHED_INDICATOR = "smoothed_indicator"
   POLY_GAUSSIAN = "poly_gaussian"
   FILE = "file"


@lru_cache(maxsize=8)
def load_profile_field(path: str) -> GridField:
   """Stored unit-scale profile, read once per path"""
   return read_field(path)


def _transition(t: np.ndarray) -> np.ndarray:
   """C-infinity step from 0 (t <= 0) to 1 (t >= 1)"""
   t = np.clip(t, 0.0, 1.0)
   with np.errstate(divide='ignore', over='ignore'):
      a = np.where(t > 0.0, np.exp(-1.0 / np.where(t > 0.0, t, 1.0)), 0.0)
      b = np.where(t < 1.0, np.exp(-1.0 / np.where(t < 1.0, 1.0 - t, 1.0)), 0.0)
   return a / (a + b)


def smooth_cutoff(r: np.ndarray, inner: float, outer: float) -> np.ndarray:
   """1 for r <= inner, 0 for r >= outer, smooth in between"""
   return 1.0 - _transition((r - inner) / (outer - inner))


@dataclass(frozen=True)
class Profile:
   """
   Unit-scale profile psi with optional carrier momentum k0

   The built-in shapes vanish outside the unit ball about the origin. A
   file profile is the grid field stored at path, read in unit-scale
   coordinates and interpolated trilinearly; it is zero outside the
   stored box and its support is whatever the file holds.
   """

   kind: ProfileKind = ProfileKind.GAUSSIAN
   width: float = 0.3
   momentum: Sequence[float] = field(default=(0.0, 0.0, 0.0))
   path: Optional[str] = None

   @classmethod
   def from_spec(cls, spec: dict) -> 'Profile':
      kind = ProfileKind(spec.get('kind', 'gaussian'))
      path = spec.get('path')
      if kind == ProfileKind.FILE and not path:
         raise ValueError("Profile kind 'file' needs a path")
      return cls(
         kind=kind,
         width=float(spec.get('width', 0.3)),
         momentum=tuple(float(k) for k in spec.get('momentum', (0.0, 0.0, 0.0))),
         path=str(path) if path else None
      )

   def __call__(self, y: np.ndarray) -> np.ndarray:
      y = np.asarray(y, dtype=float)
      r = np.linalg.norm(y, axis=-1)

      if self.kind == ProfileKind.FILE:
         shape = interpolate_field(load_profile_field(self.path), y)
      elif self.kind == ProfileKind.BUMP:
         inside = r < 1.0
         safe = np.where(inside, 1.0 - r * r, 1.0)
         shape = np.where(inside, np.exp(1.0 - 1.0 / safe), 0.0)
      elif self.kind == ProfileKind.SMOOTHED_INDICATOR:
         shape = smooth_cutoff(r, 0.5, 1.0)
      else:
         shape = np.exp(-r * r / (2.0 * self.width ** 2)) * smooth_cutoff(r, 0.7, 1.0)
         if self.kind == ProfileKind.POLY_GAUSSIAN:
            shape = shape * (1.0 + y[..., 0] + 0.5 * y[..., 1] * y[..., 2])

      k0 = np.asarray(self.momentum, dtype=float)
      if np.any(k0):
         return shape * np.exp(1j * (y @ k0))
      return shape.astype(complex)

   def scaled(self, epsilon: float, center: Optional[Sequence[float]] = None) -> Callable[[np.ndarray], np.ndarray]:
      """psi_eps(x) = eps^(-3/2) psi((x - center) / eps)"""
      c = np.zeros(3) if center is None else np.asarray(center, dtype=float)

      def psi_eps(x: np.ndarray) -> np.ndarray:
         return epsilon ** -1.5 * self((np.asarray(x, dtype=float) - c) / epsilon)

      return psi_eps

   def halfspace_data(self, epsilon: float, delta: float) -> Callable[[np.ndarray], np.ndarray]:
      """psi_{eps,delta}(x) = eps^(-3/2) psi((x - delta e3) / eps)"""
      return self.scaled(epsilon, center=(0.0, 0.0, delta))
