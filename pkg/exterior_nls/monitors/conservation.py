"""
Mass and energy of grid fields
"""

from typing import Sequence, Tuple

import numpy as np

from ..models.grid import GridField


def mass(f: GridField) -> float:
   """h^3 sum |u|^2"""
   return float(f.grid.cell_volume * np.sum(np.abs(f.values) ** 2))


def _forward_differences(values: np.ndarray, spacing: float) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
   """Differences across every cell face, the zero exterior of the box included"""
   padded = np.pad(values, 1)
   out = []
   for k in range(3):
      inner = tuple(slice(None) if j == k else slice(1, -1) for j in range(3))
      out.append(np.diff(padded, axis=k)[inner] / spacing)
   return tuple(out)


def kinetic_energy(f: GridField) -> float:
   """
   1/2 int |grad u|^2 as 1/2 h^3 sum over faces |D+ u|^2

   Faces between an active cell and a masked cell (or the box exterior)
   carry the one-sided difference to the Dirichlet value, so this equals
   1/2 h^3 Re <u, -Delta_h u>.
   """
   total = sum(float(np.sum(np.abs(d) ** 2)) for d in _forward_differences(f.values, f.grid.spacing))
   return 0.5 * f.grid.cell_volume * total


def potential_energy(f: GridField) -> float:
   """1/6 int |u|^6"""
   return f.grid.cell_volume * float(np.sum(np.abs(f.values) ** 6)) / 6.0


def energy(f: GridField) -> float:
   """E(u) = int 1/2 |grad u|^2 + 1/6 |u|^6"""
   return kinetic_energy(f) + potential_energy(f)


def gradient(f: GridField) -> np.ndarray:
   """Centered-difference gradient, shape dims + (3,)"""
   return np.stack(np.gradient(f.values, f.grid.spacing), axis=-1)


def gradient_norm(f: GridField) -> float:
   """||grad u||_2 from the face differences"""
   return float(np.sqrt(2.0 * kinetic_energy(f)))


def relative_drift(series: Sequence[float]) -> float:
   """max |s_k - s_0| / |s_0|"""
   s = np.asarray(series, dtype=float)
   if s.size == 0 or s[0] == 0.0:
      return 0.0
   return float(np.max(np.abs(s - s[0])) / abs(s[0]))


def gaussian_energy(sigma: float, xi: Sequence[float] = (0.0, 0.0, 0.0),
                    amplitude: float = 1.0) -> float:
   """
   Energy of amplitude times the normalized Gaussian packet of width sigma
   and momentum xi

   A^2 / 2 (3 / (4 sigma^2) + |xi|^2) + A^6 (2 pi sigma^2)^(-3) 3^(-3/2) / 6
   """
   xi = np.asarray(xi, dtype=float)
   kinetic = 0.5 * amplitude ** 2 * (3.0 / (4.0 * sigma ** 2) + float(xi @ xi))
   sixth = amplitude ** 6 * (2.0 * np.pi * sigma ** 2) ** -3 * 3.0 ** -1.5
   return kinetic + sixth / 6.0
