"""
Ray event data structure
"""

from typing import Dict, Any, Optional
from dataclasses import dataclass, field
from enum import Enum

import numpy as np

from .body import BoundaryFrame, ConvexBody


class RayClass(Enum):
   """Classification of a packet ray against the obstacle"""
   MISSING = "missing"
   NEAR_GRAZING = "near_grazing"
   ENTERING = "entering"


@dataclass(frozen=True, eq=False)
class RayEvent:
   """Outcome of tracing the ray t -> origin + 2 t xi"""

   ray_class: RayClass
   xi: np.ndarray
   origin: np.ndarray

   # Collision data (absent for missing rays)
   t_c: Optional[float] = None
   x_c: Optional[np.ndarray] = None

   # Entering rays only
   frame: Optional[BoundaryFrame] = None
   xi_components: Optional[np.ndarray] = None
   eta: Optional[np.ndarray] = None

   # Clearance and threshold diagnostics
   diagnostics: Dict[str, Any] = field(default_factory=dict)

   body: Optional[ConvexBody] = field(default=None, repr=False)

   def is_entering(self) -> bool:
      """Check if the ray enters with a non-grazing incidence"""
      return self.ray_class == RayClass.ENTERING

   def collides(self) -> bool:
      """Check if the ray meets the obstacle"""
      return self.t_c is not None

   @property
   def speed(self) -> float:
      """|xi|; the ray moves with velocity 2 xi"""
      return float(np.linalg.norm(self.xi))

   @property
   def incidence(self) -> Optional[float]:
      """|xi . nu| / |xi| at the collision point"""
      return self.diagnostics.get('incidence')

   def to_dict(self) -> Dict[str, Any]:
      """Flat record for tabular export"""
      return {
         'class': self.ray_class.value,
         'xi1': float(self.xi[0]),
         'xi2': float(self.xi[1]),
         'xi3': float(self.xi[2]),
         't_c': self.t_c,
         'incidence': self.incidence,
         'R1': self.frame.R1 if self.frame is not None else None,
         'R2': self.frame.R2 if self.frame is not None else None,
         'min_clearance_ratio': self.diagnostics.get('min_clearance_ratio'),
      }
