"""
Free Gaussian packets and curvature-matched reflected beams
"""

from typing import Tuple, Optional
from dataclasses import dataclass, field

import numpy as np

from .frame import FrameParams
from .ray import RayEvent


@dataclass(frozen=True, eq=False)
class FreePacket:
   """
   Frame element gamma_n translated to center and evolved by the free flow

   Frame packets carry xi = n / L and width sigma from params. Standalone
   Gaussian data sets width and momentum directly.
   """

   params: Optional[FrameParams]
   n: Tuple[int, int, int] = (0, 0, 0)
   coeff: complex = 1.0 + 0j
   center: np.ndarray = field(default_factory=lambda: np.zeros(3))
   width: float = 0.0
   momentum: Optional[np.ndarray] = None

   @property
   def xi(self) -> np.ndarray:
      if self.momentum is not None:
         return np.asarray(self.momentum, dtype=float)
      return np.asarray(self.n, dtype=float) / self.params.L

   @property
   def sigma(self) -> float:
      return self.width if self.width > 0.0 else self.params.sigma

   def amplitude(self) -> float:
      """Peak modulus at t = 0, (2 pi sigma^2)^(-3/4)"""
      return (2.0 * np.pi * self.sigma ** 2) ** -0.75

   def peak_modulus(self, t: float) -> float:
      """|u(t, center + 2 xi t)| = (2 pi)^(-3/4) sigma^(3/2) (sigma^4 + t^2)^(-3/4)"""
      s = self.sigma
      return (2.0 * np.pi) ** -0.75 * s ** 1.5 * (s ** 4 + t * t) ** -0.75

   def with_center(self, center) -> 'FreePacket':
      return FreePacket(params=self.params, n=self.n, coeff=self.coeff,
                        center=np.asarray(center, dtype=float), width=self.width,
                        momentum=self.momentum)


@dataclass(frozen=True, eq=False)
class ReflectedBeam:
   """
   Reflected Gaussian beam v_n launched at the collision of an entering packet

   Matrices B, SigmaInv and Sigma are expressed in the (tau, gamma, nu)
   frame of the collision point. eigvecs holds the real orthonormal
   eigenbasis of B (columns ordered like eigvals_B) and mu the
   corresponding eigenvalues of SigmaInv.
   """

   packet: FreePacket
   event: RayEvent
   eta: np.ndarray
   B: np.ndarray
   SigmaInv: np.ndarray
   Sigma: np.ndarray
   detSigma_sqrt: complex
   eigvals_B: np.ndarray
   eigvecs: np.ndarray
   mu: np.ndarray

   @property
   def t_c(self) -> float:
      return float(self.event.t_c)

   @property
   def x_c(self) -> np.ndarray:
      return self.event.x_c

   @property
   def world_eigvecs(self) -> np.ndarray:
      """Eigenbasis of B in world coordinates"""
      return self.event.frame.basis @ self.eigvecs

   def center(self, t) -> np.ndarray:
      """Beam center x(t) = x_c + 2 eta (t - t_c)"""
      s = np.asarray(t, dtype=float) - self.t_c
      return self.x_c + 2.0 * s[..., None] * self.eta


@dataclass
class CovarianceReport:
   """Covariance envelope comparison of a reflected beam at one time"""

   t: float
   re_quadratic_min: float
   re_quadratic_envelope: float
   max_norm: float
   max_norm_envelope: float
   det_factor: float
   det_envelope: float

   @property
   def positive(self) -> bool:
      return self.re_quadratic_min > 0.0
