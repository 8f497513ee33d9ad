"""
Convex obstacle and boundary frame data structures
"""

from typing import Callable, Dict, Any, Optional, Sequence
from dataclasses import dataclass, field
from enum import Enum

import numpy as np


class ObstacleKind(Enum):
   """Built-in obstacle families"""
   SPHERE = "sphere"
   ELLIPSOID = "ellipsoid"
   SUPERELLIPSOID = "superellipsoid"


ScalarField = Callable[[np.ndarray], np.ndarray]


@dataclass(frozen=True, eq=False)
class ConvexBody:
   """
   Smooth strictly convex obstacle given as a level set

   The obstacle is {F <= 0}. All field callables accept arrays of shape
   (..., 3) and return (...), (..., 3) and (..., 3, 3) respectively.
   """

   kind: ObstacleKind
   level_fn: ScalarField
   grad_fn: ScalarField
   hess_fn: ScalarField
   bounding_radius: float
   center_hint: np.ndarray

   # Quadric matrix A for F = (x-c)^T A (x-c) - 1, when the body is one
   quadric: Optional[np.ndarray] = None

   # Construction parameters, used to rebuild scaled copies
   spec: Dict[str, Any] = field(default_factory=dict)

   @classmethod
   def sphere(cls, center: Sequence[float], radius: float) -> 'ConvexBody':
      """Sphere of the given radius"""
      body = cls._build(center, (radius, radius, radius), exponent=2, blend=0.0,
                        kind=ObstacleKind.SPHERE)
      body.spec['radius'] = float(radius)
      return body

   @classmethod
   def ellipsoid(cls, center: Sequence[float], semi_axes: Sequence[float]) -> 'ConvexBody':
      """Axis-aligned ellipsoid"""
      return cls._build(center, semi_axes, exponent=2, blend=0.0,
                        kind=ObstacleKind.ELLIPSOID)

   @classmethod
   def superellipsoid(cls, center: Sequence[float], semi_axes: Sequence[float],
                      exponent: int = 4, blend: float = 1.0) -> 'ConvexBody':
      """
      Blended superellipsoid sum(y_i^2 + blend * y_i^p) = 1 with y = (x-c)/a

      The quadratic part keeps the Hessian positive definite on the whole
      surface, so the body stays strictly convex for every even p >= 2.
      """
      if exponent < 2 or exponent % 2:
         raise ValueError(f"Superellipsoid exponent must be even and >= 2, got {exponent}")
      if blend < 0:
         raise ValueError(f"Superellipsoid blend must be non-negative, got {blend}")
      return cls._build(center, semi_axes, exponent=exponent, blend=blend,
                        kind=ObstacleKind.SUPERELLIPSOID)

   @classmethod
   def from_spec(cls, spec: Dict[str, Any]) -> 'ConvexBody':
      """Create a body from an obstacle specification block"""
      kind = ObstacleKind(spec.get('kind', 'sphere'))
      center = spec.get('center', (0.0, 0.0, 0.0))

      if kind == ObstacleKind.SPHERE:
         return cls.sphere(center, float(spec.get('radius', 1.0)))
      if kind == ObstacleKind.ELLIPSOID:
         return cls.ellipsoid(center, spec.get('semi_axes', (1.0, 1.0, 1.0)))
      return cls.superellipsoid(
         center,
         spec.get('semi_axes', (1.0, 1.0, 1.0)),
         exponent=int(spec.get('exponent', 4)),
         blend=float(spec.get('blend', 1.0))
      )

   @classmethod
   def _build(cls, center: Sequence[float], semi_axes: Sequence[float],
              exponent: int, blend: float, kind: ObstacleKind) -> 'ConvexBody':
      c = np.asarray(center, dtype=float).reshape(3)
      a = np.asarray(semi_axes, dtype=float).reshape(3)
      if np.any(a <= 0):
         raise ValueError(f"Semi-axes must be positive, got {a.tolist()}")
      p = int(exponent)
      w = float(blend)

      def level_fn(x: np.ndarray) -> np.ndarray:
         y = (np.asarray(x, dtype=float) - c) / a
         value = np.sum(y * y, axis=-1) - 1.0
         if w:
            value = value + w * np.sum(y ** p, axis=-1)
         return value

      def grad_fn(x: np.ndarray) -> np.ndarray:
         y = (np.asarray(x, dtype=float) - c) / a
         g = 2.0 * y
         if w:
            g = g + w * p * y ** (p - 1)
         return g / a

      def hess_fn(x: np.ndarray) -> np.ndarray:
         y = (np.asarray(x, dtype=float) - c) / a
         d = np.full(y.shape, 2.0)
         if w:
            d = d + w * p * (p - 1) * y ** (p - 2)
         d = d / (a * a)
         h = np.zeros(y.shape + (3,))
         for i in range(3):
            h[..., i, i] = d[..., i]
         return h

      quadric = np.diag(1.0 / (a * a)) if w == 0.0 else None

      spec = {
         'kind': kind.value,
         'center': c.tolist(),
         'semi_axes': a.tolist(),
         'exponent': p,
         'blend': w,
      }

      return cls(
         kind=kind,
         level_fn=level_fn,
         grad_fn=grad_fn,
         hess_fn=hess_fn,
         bounding_radius=float(np.max(a)),
         center_hint=c,
         quadric=quadric,
         spec=spec
      )

   def scaled(self, factor: float) -> 'ConvexBody':
      """Copy of this body shrunk or grown about its center"""
      spec = dict(self.spec)
      spec['semi_axes'] = [factor * s for s in spec['semi_axes']]
      if 'radius' in spec:
         spec['radius'] = factor * spec['radius']
      return ConvexBody.from_spec(spec)

   def contains(self, x: np.ndarray) -> np.ndarray:
      """True where x lies in the closed obstacle"""
      return self.level_fn(x) <= 0.0

   def boundary_tolerance(self, x: np.ndarray) -> float:
      """Scale-invariant tolerance on |F| for boundary points"""
      return 1e-10 * float(np.linalg.norm(self.grad_fn(x))) * self.bounding_radius

   @property
   def diameter(self) -> float:
      """Upper bound for diam of the obstacle"""
      return 2.0 * self.bounding_radius


@dataclass(frozen=True, eq=False)
class BoundaryFrame:
   """Principal frame (tau, gamma, nu) at a boundary point"""

   point: np.ndarray
   tau: np.ndarray
   gamma: np.ndarray
   normal: np.ndarray
   R1: float
   R2: float

   @property
   def basis(self) -> np.ndarray:
      """Columns tau, gamma, nu"""
      return np.column_stack([self.tau, self.gamma, self.normal])

   def to_frame(self, v: np.ndarray) -> np.ndarray:
      """World components to (tau, gamma, nu) components"""
      return np.asarray(v, dtype=float) @ self.basis

   def to_world(self, v: np.ndarray) -> np.ndarray:
      """(tau, gamma, nu) components to world components"""
      return np.asarray(v) @ self.basis.T

   def gram_error(self) -> float:
      """Distance of the frame Gram matrix from the identity"""
      p = self.basis
      return float(np.max(np.abs(p.T @ p - np.eye(3))))
