"""
Gaussian frame parameters and wave packet decompositions
"""

from typing import Tuple, Iterator
from dataclasses import dataclass, field
import math

import numpy as np


@dataclass(frozen=True)
class FrameParams:
   """Scales of the Gaussian frame built for data of size epsilon at distance delta"""

   epsilon: float
   delta: float
   sigma: float
   L: float

   @property
   def log(self) -> float:
      """log(1/epsilon)"""
      return math.log(1.0 / self.epsilon)

   @property
   def loglog(self) -> float:
      """log log(1/epsilon)"""
      return math.log(self.log)

   @property
   def lower_frequency(self) -> float:
      """Smallest admissible |n|/L"""
      return 1.0 / (self.epsilon * self.loglog)

   @property
   def upper_frequency(self) -> float:
      """Largest admissible |n|/L"""
      return self.loglog / self.epsilon

   @property
   def default_window(self) -> int:
      """Componentwise index window covering the admissible shell"""
      return int(math.ceil(self.L * self.upper_frequency))

   @property
   def periodization_leakage(self) -> float:
      """exp(-pi^2 L^2 / 4 sigma^2)"""
      return math.exp(-(math.pi * self.L) ** 2 / (4.0 * self.sigma ** 2))


@dataclass(frozen=True, eq=False)
class Decomposition:
   """
   Coefficients c_n on the index box |n_i| <= window

   coeffs and admissible are arrays of shape (2w+1,)*3; entry [i, j, k]
   holds index n = (i-w, j-w, k-w).
   """

   params: FrameParams
   window: int
   coeffs: np.ndarray
   admissible: np.ndarray
   residual_l2: float
   tail_bound: float

   # Sampling grid of the cube the coefficients were computed on
   samples: int = 0
   psi_norm: float = 0.0
   center: np.ndarray = field(default_factory=lambda: np.zeros(3))

   @property
   def offset(self) -> int:
      return self.window

   def index_arrays(self) -> np.ndarray:
      """All indices in the window, shape (2w+1, 2w+1, 2w+1, 3)"""
      r = np.arange(-self.window, self.window + 1)
      n1, n2, n3 = np.meshgrid(r, r, r, indexing='ij')
      return np.stack([n1, n2, n3], axis=-1)

   def coefficient(self, n: Tuple[int, int, int]) -> complex:
      """c_n, zero outside the window"""
      idx = tuple(int(k) + self.window for k in n)
      if any(i < 0 or i > 2 * self.window for i in idx):
         return 0j
      return complex(self.coeffs[idx])

   def admissible_indices(self, floor: float = 0.0) -> np.ndarray:
      """Admissible indices with |c_n| > floor * max|c_n|, shape (M, 3)"""
      mask = self.admissible.copy()
      if floor > 0.0 and np.any(mask):
         mags = np.abs(self.coeffs)
         mask &= mags > floor * mags[self.admissible].max()
      return self.index_arrays()[mask]

   def iter_admissible(self, floor: float = 0.0) -> Iterator[Tuple[Tuple[int, int, int], complex]]:
      """Yield (n, c_n) over the admissible set"""
      for n in self.admissible_indices(floor):
         key = (int(n[0]), int(n[1]), int(n[2]))
         yield key, self.coefficient(key)

   def xi(self, n: Tuple[int, int, int]) -> np.ndarray:
      """Packet momentum n / L"""
      return np.asarray(n, dtype=float) / self.params.L
