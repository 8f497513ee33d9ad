"""
Metric and differential queries on convex obstacles
"""

import logging
import math
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .models.body import ConvexBody, BoundaryFrame, ObstacleKind


logger = logging.getLogger(__name__)


class GeometryError(Exception):
   """Base exception for obstacle geometry failures"""
   pass


class NonConvergence(GeometryError):
   """Projection onto the boundary did not converge"""
   pass


class DegenerateCurvature(GeometryError):
   """Shape operator is not positive definite"""
   pass


def distance(body: ConvexBody, x: np.ndarray) -> np.ndarray:
   """
   Distance from x to the obstacle, zero inside

   Args:
      body: Obstacle
      x: Point of shape (3,) or array of points (..., 3)

   Returns:
      Distance as a float, or an array of shape (...)
   """
   x = np.asarray(x, dtype=float)
   if x.ndim == 1:
      return _point_distance(body, x)

   if body.kind == ObstacleKind.SPHERE:
      r = np.linalg.norm(x - body.center_hint, axis=-1) - body.spec['radius']
      return np.maximum(r, 0.0)

   flat = x.reshape(-1, 3)
   out = np.array([_point_distance(body, p) for p in flat])
   return out.reshape(x.shape[:-1])


def _point_distance(body: ConvexBody, x: np.ndarray) -> float:
   if body.level_fn(x) <= 0.0:
      return 0.0
   if body.kind == ObstacleKind.SPHERE:
      return max(float(np.linalg.norm(x - body.center_hint)) - body.spec['radius'], 0.0)
   return float(np.linalg.norm(x - nearest_boundary_point(body, x)))


def nearest_boundary_point(body: ConvexBody, x: np.ndarray, max_iter: int = 100) -> np.ndarray:
   """
   Project an exterior point onto the obstacle boundary

   Damped Newton on the conditions p - x + mu grad F(p) = 0, F(p) = 0,
   started from the boundary crossing of the segment center_hint -> x.

   Args:
      body: Obstacle
      x: Point strictly outside the obstacle
      max_iter: Newton iteration cap

   Returns:
      Boundary point x* with |x - x*| = distance(body, x)

   Raises:
      NonConvergence: If the final point fails the boundary or alignment test
   """
   x = np.asarray(x, dtype=float)
   if body.level_fn(x) <= 0.0:
      raise ValueError(f"Point {x.tolist()} is not outside the obstacle")

   if body.kind == ObstacleKind.SPHERE:
      d = x - body.center_hint
      return body.center_hint + body.spec['radius'] * d / np.linalg.norm(d)

   scale = max(1.0, float(np.linalg.norm(x - body.center_hint)))
   p = _ray_cast(body, x)
   g = body.grad_fn(p)
   mu = float(np.dot(x - p, g) / np.dot(g, g))

   def residual(p: np.ndarray, mu: float) -> np.ndarray:
      return np.concatenate([p - x + mu * body.grad_fn(p), [body.level_fn(p)]])

   r = residual(p, mu)
   for iteration in range(max_iter):
      g = body.grad_fn(p)
      jac = np.zeros((4, 4))
      jac[:3, :3] = np.eye(3) + mu * body.hess_fn(p)
      jac[:3, 3] = g
      jac[3, :3] = g
      step = np.linalg.solve(jac, -r)

      norm0 = np.linalg.norm(r)
      lam = 1.0
      while True:
         p_new = p + lam * step[:3]
         mu_new = mu + lam * step[3]
         r_new = residual(p_new, mu_new)
         if np.linalg.norm(r_new) < (1.0 - 1e-4 * lam) * norm0 or lam < 1e-6:
            break
         lam *= 0.5

      p, mu, r = p_new, mu_new, r_new
      if np.linalg.norm(lam * step[:3]) <= 1e-15 * scale or np.linalg.norm(r) <= 1e-15 * scale:
         break

   if not _on_boundary(body, p, x):
      raise NonConvergence(
         f"Projection of {x.tolist()} stalled after {iteration + 1} iterations "
         f"(|F|={abs(float(body.level_fn(p))):.3e})"
      )
   logger.debug(f"Projected {x.tolist()} in {iteration + 1} iterations")
   return p


def _on_boundary(body: ConvexBody, p: np.ndarray, x: np.ndarray) -> bool:
   if abs(float(body.level_fn(p))) > 1e-12:
      return False
   g = body.grad_fn(p)
   nu = g / np.linalg.norm(g)
   scale = max(1.0, float(np.linalg.norm(x - body.center_hint)))
   return float(np.linalg.norm(np.cross(x - p, nu))) <= 1e-10 * scale


def _ray_cast(body: ConvexBody, x: np.ndarray) -> np.ndarray:
   """Boundary crossing on the segment from center_hint to x"""
   c = body.center_hint
   s = brentq(lambda s: float(body.level_fn(c + s * (x - c))), 0.0, 1.0, xtol=1e-15)
   return c + s * (x - c)


def boundary_point_towards(body: ConvexBody, direction: np.ndarray) -> np.ndarray:
   """Boundary point hit from center_hint in the given direction"""
   d = np.asarray(direction, dtype=float)
   d = d / np.linalg.norm(d)
   far = body.center_hint + 2.0 * body.bounding_radius * d
   return _ray_cast(body, far)


def sample_boundary(body: ConvexBody, count: int, rng: np.random.Generator) -> np.ndarray:
   """Boundary points along uniformly random directions from center_hint"""
   dirs = rng.normal(size=(count, 3))
   return np.array([boundary_point_towards(body, d) for d in dirs])


def outward_normal(body: ConvexBody, p: np.ndarray) -> np.ndarray:
   g = body.grad_fn(np.asarray(p, dtype=float))
   return g / np.linalg.norm(g, axis=-1, keepdims=True)


def principal_frame(body: ConvexBody, p: np.ndarray, tolerance: Optional[float] = None) -> BoundaryFrame:
   """
   Principal directions and radii of curvature at a boundary point

   Args:
      body: Obstacle
      p: Point with |F(p)| within tolerance
      tolerance: Override of the default boundary tolerance

   Returns:
      BoundaryFrame with R1 <= R2, tau along the R1 direction

   Raises:
      GeometryError: If p is not on the boundary
      DegenerateCurvature: If a principal curvature is not positive
   """
   p = np.asarray(p, dtype=float)
   tol = body.boundary_tolerance(p) if tolerance is None else tolerance
   level = float(body.level_fn(p))
   if abs(level) > tol:
      raise GeometryError(f"Point {p.tolist()} is off the boundary (F={level:.3e})")

   g = body.grad_fn(p)
   gnorm = float(np.linalg.norm(g))
   nu = g / gnorm
   e1, e2 = _tangent_basis(nu)
   T = np.column_stack([e1, e2])

   shape_op = T.T @ body.hess_fn(p) @ T / gnorm
   kappa, vecs = np.linalg.eigh(0.5 * (shape_op + shape_op.T))
   if kappa[0] <= 0.0:
      raise DegenerateCurvature(f"Non-positive principal curvature {kappa[0]:.3e} at {p.tolist()}")

   tau = T @ vecs[:, 1]
   tau = tau / np.linalg.norm(tau)
   gamma = np.cross(nu, tau)

   return BoundaryFrame(
      point=p,
      tau=tau,
      gamma=gamma,
      normal=nu,
      R1=1.0 / float(kappa[1]),
      R2=1.0 / float(kappa[0])
   )


def _tangent_basis(nu: np.ndarray):
   helper = np.zeros(3)
   helper[int(np.argmin(np.abs(nu)))] = 1.0
   e1 = helper - np.dot(helper, nu) * nu
   e1 = e1 / np.linalg.norm(e1)
   return e1, np.cross(nu, e1)


def rotation_to_normal(nu: np.ndarray) -> np.ndarray:
   """
   Minimal rotation R with R e3 = nu

   Rodrigues rotation about v = e3 x nu; at nu = -e3 the rotation by pi
   about e1 is used. On the lower hemisphere vx^2 / (1 + nu3) is written
   as (1 - nu3)(u u^T - I) with u = v / |v|, since 1 + nu3 cancels there.
   """
   nu = np.asarray(nu, dtype=float)
   norm = float(np.linalg.norm(nu))
   if abs(norm - 1.0) > 1e-12:
      raise ValueError(f"Normal must be a unit vector, |nu|={norm:.16f}")
   nu = nu / norm

   c = float(nu[2])
   v = np.array([-nu[1], nu[0], 0.0])
   vx = np.array([
      [0.0, -v[2], v[1]],
      [v[2], 0.0, -v[0]],
      [-v[1], v[0], 0.0],
   ])
   if c >= 0.0:
      return np.eye(3) + vx + vx @ vx / (1.0 + c)

   sine = math.hypot(nu[0], nu[1])
   if sine == 0.0:
      return np.diag([1.0, -1.0, -1.0])
   u = v / sine
   return np.eye(3) + vx + (1.0 - c) * (np.outer(u, u) - np.eye(3))
