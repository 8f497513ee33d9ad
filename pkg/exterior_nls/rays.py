"""
Billiard geometry of packet rays t -> origin + 2 t xi
"""

import logging
import math
from typing import Optional, Tuple, Dict, Any

import numpy as np
from scipy.optimize import brentq, minimize_scalar

from .models.body import ConvexBody, ObstacleKind
from .models.ray import RayClass, RayEvent
from .geometry import distance, principal_frame


logger = logging.getLogger(__name__)


class RayError(Exception):
   """Base exception for ray operations"""
   pass


class NotEntering(RayError):
   """Operation requires an entering ray"""
   pass


def default_thresholds(epsilon: float) -> Tuple[float, float]:
   """Grazing threshold and clearance [log log(1/eps)]^-4"""
   loglog = math.log(math.log(1.0 / epsilon))
   if loglog <= 0.0:
      raise ValueError(f"log log(1/eps) must be positive, got eps={epsilon}")
   value = min(loglog ** -4, 0.999)
   return value, value


def first_collision(body: ConvexBody, origin: np.ndarray,
                    xi: np.ndarray) -> Optional[Tuple[float, np.ndarray]]:
   """
   First time the ray origin + 2 t xi meets the obstacle

   Returns:
      (t_c, x_c) or None if the ray never meets the body
   """
   origin = np.asarray(origin, dtype=float)
   xi = np.asarray(xi, dtype=float)
   d = 2.0 * xi

   if body.quadric is not None:
      t_c = _quadric_collision(body, origin, d)
   else:
      t_c = _level_set_collision(body, origin, d)

   if t_c is None:
      return None
   return t_c, origin + t_c * d


def _quadric_collision(body: ConvexBody, origin: np.ndarray, d: np.ndarray) -> Optional[float]:
   A = body.quadric
   q = origin - body.center_hint
   a2 = float(d @ A @ d)
   a1 = 2.0 * float(q @ A @ d)
   a0 = float(q @ A @ q) - 1.0

   if a1 >= 0.0:
      return None

   disc = a1 * a1 - 4.0 * a2 * a0
   if disc < 0.0:
      # Rounding at exact tangency
      if disc < -1e-12 * a1 * a1:
         return None
      disc = 0.0

   # Stable root pair; both share the sign of -a1 since a0 > 0
   qq = -0.5 * (a1 - math.sqrt(disc))
   return min(qq / a2, a0 / qq)


def _level_set_collision(body: ConvexBody, origin: np.ndarray, d: np.ndarray) -> Optional[float]:
   c = body.center_hint
   q = origin - c
   dd = float(d @ d)
   b = float(q @ d)
   cc = float(q @ q) - body.bounding_radius ** 2
   disc = b * b - dd * cc
   if disc < 0.0:
      return None
   root = math.sqrt(disc)
   t_hi = (-b + root) / dd
   if t_hi < 0.0:
      return None
   t_lo = max((-b - root) / dd, 0.0)

   def phi(t: float) -> float:
      return float(body.level_fn(origin + t * d))

   def dphi(t: float) -> float:
      return float(body.grad_fn(origin + t * d) @ d)

   # phi is convex along the line; locate its minimum on [t_lo, t_hi]
   if dphi(t_lo) >= 0.0:
      t_min = t_lo
   elif dphi(t_hi) <= 0.0:
      t_min = t_hi
   else:
      t_min = brentq(dphi, t_lo, t_hi, xtol=1e-15)

   f_min = phi(t_min)
   tol = body.boundary_tolerance(origin + t_min * d)
   if f_min > tol:
      return None
   if f_min >= -tol:
      return t_min
   return brentq(phi, t_lo, t_min, xtol=1e-15)


def reflect(xi: np.ndarray, nu: np.ndarray) -> np.ndarray:
   """Mirror law eta = xi - 2 (xi . nu) nu"""
   xi = np.asarray(xi, dtype=float)
   nu = np.asarray(nu, dtype=float)
   return xi - 2.0 * np.dot(xi, nu) * nu


def classify(body: ConvexBody, origin: np.ndarray, xi: np.ndarray,
             kappa: float, clearance: float) -> RayEvent:
   """
   Classify a packet ray as missing, near-grazing or entering

   Args:
      body: Obstacle
      origin: Packet center at t = 0, outside the obstacle
      xi: Packet momentum
      kappa: Grazing threshold on |xi . nu| / |xi|
      clearance: Required dist(x(t), obstacle) / |2 t xi| for missing rays

   Returns:
      RayEvent
   """
   if not 0.0 < kappa < 1.0:
      raise ValueError(f"kappa must lie in (0, 1), got {kappa}")
   if not 0.0 < clearance < 1.0:
      raise ValueError(f"clearance must lie in (0, 1), got {clearance}")

   origin = np.asarray(origin, dtype=float)
   xi = np.asarray(xi, dtype=float)
   hit = first_collision(body, origin, xi)

   if hit is not None:
      t_c, x_c = hit
      frame = principal_frame(body, x_c, tolerance=max(body.boundary_tolerance(x_c), 1e-12))
      comps = frame.to_frame(xi)
      incidence = abs(float(comps[2])) / float(np.linalg.norm(xi))
      diagnostics = {'incidence': incidence, 'min_clearance_ratio': 0.0}

      if comps[2] < 0.0 and incidence >= kappa:
         return RayEvent(
            ray_class=RayClass.ENTERING,
            xi=xi,
            origin=origin,
            t_c=float(t_c),
            x_c=x_c,
            frame=frame,
            xi_components=comps,
            eta=reflect(xi, frame.normal),
            diagnostics=diagnostics,
            body=body
         )
      return RayEvent(
         ray_class=RayClass.NEAR_GRAZING,
         xi=xi,
         origin=origin,
         t_c=float(t_c),
         x_c=x_c,
         diagnostics=diagnostics,
         body=body
      )

   diagnostics = clearance_profile(body, origin, xi, clearance)
   ray_class = RayClass.MISSING if diagnostics['clearance_margin'] >= 0.0 else RayClass.NEAR_GRAZING
   return RayEvent(ray_class=ray_class, xi=xi, origin=origin, diagnostics=diagnostics, body=body)


def clearance_profile(body: ConvexBody, origin: np.ndarray, xi: np.ndarray,
                      clearance: float) -> Dict[str, Any]:
   """
   Minimize dist(origin + s u, obstacle) - clearance * s over the path length s

   The objective is convex along the ray. Beyond
   s_max = (|origin - c| + R_b) / (1 - clearance) it is non-negative for any
   body inside the bounding ball, which covers the t -> infinity limit.
   """
   u = xi / np.linalg.norm(xi)
   p0 = origin - body.center_hint
   delta = float(distance(body, origin))
   s_max = (float(np.linalg.norm(p0)) + body.bounding_radius) / (1.0 - clearance)

   # Bounding-ball lower bound; exact for spheres
   s_ball, g_ball = _ball_clearance(p0, u, body.bounding_radius, clearance)

   if body.kind == ObstacleKind.SPHERE or g_ball >= 0.0:
      s_star, margin = s_ball, g_ball
   else:
      def objective(s: float) -> float:
         return float(distance(body, origin + s * u)) - clearance * s

      res = minimize_scalar(objective, bounds=(0.0, s_max), method='bounded',
                            options={'xatol': 1e-10 * s_max})
      s_star, margin = float(res.x), float(res.fun)
      if objective(0.0) < margin:
         s_star, margin = 0.0, objective(0.0)

   ratio = math.inf if s_star <= 0.0 else (margin + clearance * s_star) / s_star
   floor = 0.5 * delta * clearance
   closest = float(distance(body, origin + max(-float(p0 @ u), 0.0) * u))

   return {
      'clearance_margin': margin,
      'min_clearance_ratio': ratio,
      'argmin_path_length': s_star,
      'min_distance': closest,
      'absolute_floor': floor,
      'below_absolute_floor': closest < floor,
   }


def _ball_clearance(p0: np.ndarray, u: np.ndarray, radius: float, clearance: float) -> Tuple[float, float]:
   a = float(p0 @ u)
   b2 = max(float(p0 @ p0) - a * a, 0.0)
   w = clearance * math.sqrt(b2) / math.sqrt(1.0 - clearance ** 2)
   s = max(w - a, 0.0)
   g = math.sqrt((s + a) ** 2 + b2) - radius - clearance * s
   return s, g


def _require_entering(event: RayEvent) -> None:
   if not event.is_entering():
      raise NotEntering(f"Ray with xi={event.xi.tolist()} is {event.ray_class.value}")


def broken_ray(event: RayEvent, origin: np.ndarray, t):
   """
   Position of the reflected ray at time t

   origin + 2 t xi before the collision, x_c + 2 eta (t - t_c) after.
   """
   _require_entering(event)
   origin = np.asarray(origin, dtype=float)
   t = np.asarray(t, dtype=float)
   before = origin + 2.0 * t[..., None] * event.xi
   after = event.x_c + 2.0 * (t - event.t_c)[..., None] * event.eta
   return np.where((t <= event.t_c)[..., None], before, after)


def divergence_gap(event_a: RayEvent, event_b: RayEvent, origin: np.ndarray, t) -> np.ndarray:
   """|x_A(t) - x_B(t)| - 2 |xi_A - xi_B| t for t past both collisions"""
   _require_entering(event_a)
   _require_entering(event_b)
   t = np.asarray(t, dtype=float)
   sep = np.linalg.norm(broken_ray(event_a, origin, t) - broken_ray(event_b, origin, t), axis=-1)
   return sep - 2.0 * np.linalg.norm(event_a.xi - event_b.xi) * t


def collision_bounds(event: RayEvent, delta: float) -> Dict[str, float]:
   """Collision point and time against the lower bounds delta and delta / (2|xi|)"""
   if not event.collides():
      raise NotEntering(f"Ray with xi={event.xi.tolist()} never collides")
   reach = float(np.linalg.norm(event.x_c - event.origin))
   return {
      'reach': reach,
      'reach_over_delta': reach / delta,
      't_c': event.t_c,
      't_c_lower': delta / (2.0 * event.speed),
   }


def sphere_directions(count: int) -> np.ndarray:
   """Deterministic near-uniform unit vectors (Fibonacci lattice)"""
   k = np.arange(count) + 0.5
   z = 1.0 - 2.0 * k / count
   phi = np.pi * (1.0 + math.sqrt(5.0)) * k
   r = np.sqrt(1.0 - z * z)
   return np.column_stack([r * np.cos(phi), r * np.sin(phi), z])


def grazing_fraction(body: ConvexBody, origin: np.ndarray, directions: np.ndarray,
                     speed: float, kappa: float, clearance: float) -> float:
   """Fraction of the given directions whose rays are near-grazing"""
   count = 0
   for d in directions:
      event = classify(body, origin, speed * d, kappa, clearance)
      if event.ray_class == RayClass.NEAR_GRAZING:
         count += 1
   return count / len(directions)
