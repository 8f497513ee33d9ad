"""
Closed-form propagators: free packets, halfspace images, reflected beams

Also assembles the obstacle parametrix from a decomposition and its ray
events, with boundary-residual and covariance diagnostics.
"""

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from .models.beam import FreePacket, ReflectedBeam, CovarianceReport
from .models.body import ConvexBody
from .models.frame import FrameParams, Decomposition
from .models.ray import RayClass, RayEvent
from .geometry import nearest_boundary_point
from .rays import NotEntering, classify, _require_entering


logger = logging.getLogger(__name__)


class BeamError(Exception):
   """Base exception for beam construction"""
   pass


class SingularSigma(BeamError):
   """Covariance inversion is ill-conditioned"""
   pass


Index = Tuple[int, int, int]


def gaussian_packet(width: float, momentum: Sequence[float],
                    center: Sequence[float] = (0.0, 0.0, 0.0)) -> FreePacket:
   """Normalized Gaussian of the given width and momentum"""
   return FreePacket(params=None, width=float(width),
                     momentum=np.asarray(momentum, dtype=float),
                     center=np.asarray(center, dtype=float))


def free_packet_eval(p: FreePacket, t, x: np.ndarray) -> np.ndarray:
   """
   Free evolution of a Gaussian packet

   (2 pi)^(-3/4) (sigma/(sigma^2+it))^(3/2)
      exp(i y.xi - i t |xi|^2 - |y - 2 xi t|^2 / 4(sigma^2+it)),  y = x - center

   t broadcasts against x[..., 0].
   """
   t = np.asarray(t, dtype=float)
   y = np.asarray(x, dtype=float) - p.center
   xi = p.xi
   s = p.sigma
   a = s * s + 1j * t
   disp = y - 2.0 * t[..., None] * xi
   r2 = np.sum(disp * disp, axis=-1)
   phase = 1j * (y @ xi) - 1j * t * float(xi @ xi) - r2 / (4.0 * a)
   return (2.0 * math.pi) ** -0.75 * (s / a) ** 1.5 * np.exp(phase)


def halfspace_eval(p: FreePacket, center_offset: Sequence[float], t, x: np.ndarray) -> np.ndarray:
   """
   Dirichlet evolution in {x3 >= 0} by the image method

   The packet is centered at center_offset; the result is
   u(t, x) - u(t, xbar) with xbar the mirror image of x in {x3 = 0}.
   """
   q = p.with_center(center_offset)
   x = np.asarray(x, dtype=float)
   mirror = x * np.array([1.0, 1.0, -1.0])
   return free_packet_eval(q, t, x) - free_packet_eval(q, t, mirror)


_FIRST = ((-2, 1.0 / 12.0), (-1, -8.0 / 12.0), (1, 8.0 / 12.0), (2, -1.0 / 12.0))
_SECOND = ((-2, -1.0 / 12.0), (-1, 16.0 / 12.0), (0, -30.0 / 12.0), (1, 16.0 / 12.0), (2, -1.0 / 12.0))


def schrodinger_residual(fn: Callable[[np.ndarray, np.ndarray], np.ndarray], t, x: np.ndarray,
                         h: float, dt: float) -> Tuple[np.ndarray, np.ndarray]:
   """
   (i d/dt + Laplacian) fn at the sample pairs (t_k, x_k)

   Fourth-order central differences with space step h and time step dt;
   fn must broadcast t against x[..., 0].

   Returns:
      The residual and |d/dt fn| + |Laplacian fn| at every sample
   """
   t = np.asarray(t, dtype=float)
   x = np.asarray(x, dtype=float)
   ut = sum(w * fn(t + k * dt, x) for k, w in _FIRST) / dt
   laplacian = np.zeros(x.shape[:-1], dtype=complex)
   for axis in range(3):
      step = np.zeros(3)
      step[axis] = h
      laplacian += sum(w * fn(t, x + k * step) for k, w in _SECOND) / h ** 2
   return 1j * ut + laplacian, np.abs(ut) + np.abs(laplacian)


def curvature_matrix(xi_components: np.ndarray, R1: float, R2: float) -> np.ndarray:
   """Spreading matrix B in (tau, gamma, nu) coordinates"""
   xi1, xi2, xi3 = (float(v) for v in xi_components)
   return np.array([
      [4.0 * xi3 / R1, 0.0, 4.0 * xi1 / R1],
      [0.0, 4.0 * xi3 / R2, 4.0 * xi2 / R2],
      [4.0 * xi1 / R1, 4.0 * xi2 / R2, 4.0 * xi1 ** 2 / (R1 * xi3) + 4.0 * xi2 ** 2 / (R2 * xi3)],
   ])


def _inverse_refined(A: np.ndarray) -> np.ndarray:
   """Adjugate inverse of a 3x3 matrix followed by one residual correction"""
   r0, r1, r2 = A[0], A[1], A[2]
   det = np.dot(r0, np.cross(r1, r2))
   if det == 0:
      raise SingularSigma("Covariance matrix is singular")
   X = np.column_stack([np.cross(r1, r2), np.cross(r2, r0), np.cross(r0, r1)]) / det
   X = X + X @ (np.eye(3) - A @ X)
   cond = np.linalg.norm(A, 2) * np.linalg.norm(X, 2)
   if cond > 1e12:
      raise SingularSigma(f"Covariance condition number {cond:.3e} exceeds 1e12")
   return X


def build_reflected(p: FreePacket, event: RayEvent) -> ReflectedBeam:
   """
   Curvature-matched reflected beam for an entering packet

   SigmaInv = (sigma^2 + i t_c)^-1 Id + i B in the collision frame. The
   eigenbasis of B diagonalizes SigmaInv, which fixes the branch of every
   determinant power used later.

   Raises:
      NotEntering: If the event is not an entering collision
      SingularSigma: If SigmaInv is too ill-conditioned to invert
   """
   _require_entering(event)
   comps = event.xi_components
   if comps[2] >= 0.0:
      raise NotEntering(f"Normal component xi3={comps[2]:.3e} is not negative")

   frame = event.frame
   B = curvature_matrix(comps, frame.R1, frame.R2)
   a_c = p.sigma ** 2 + 1j * event.t_c
   SigmaInv = np.eye(3) / a_c + 1j * B
   Sigma = _inverse_refined(SigmaInv)

   lam, vecs = np.linalg.eigh(0.5 * (B + B.T))
   order = [2, 1, 0]
   eigvals = lam[order]
   eigvecs = vecs[:, order]
   mu = 1.0 / a_c + 1j * eigvals

   return ReflectedBeam(
      packet=p,
      event=event,
      eta=event.eta,
      B=B,
      SigmaInv=SigmaInv,
      Sigma=Sigma,
      detSigma_sqrt=complex(np.prod(mu ** -0.5)),
      eigvals_B=eigvals,
      eigvecs=eigvecs,
      mu=mu
   )


def _shifted_diagonal(b: ReflectedBeam, s: np.ndarray) -> np.ndarray:
   """Diagonal of Sigma + i s in the B eigenbasis, shape s.shape + (3,)"""
   return 1.0 / b.mu + 1j * np.asarray(s, dtype=float)[..., None]


def reflected_eval(b: ReflectedBeam, t, x: np.ndarray) -> np.ndarray:
   """
   Evaluate the reflected beam v_n

   (sigma^2/2 pi)^(3/4) (det Sigma)^(1/2) (sigma^2 + i t_c)^(-3/2) det(Sigma + i(t-t_c))^(-1/2)
      exp(i(x-x_c).eta - i t|eta|^2 + i(x_c-x_0).xi - (x-x(t))^T (Sigma + i(t-t_c))^-1 (x-x(t)) / 4)

   In the eigenbasis (Sigma + is)^-1 = diag(1 / (1/mu_j + is)); the
   determinant factor is prod mu_j^(-1/2) (1/mu_j + is)^(-1/2), each with a
   principal root whose argument stays in (-pi/2, pi/2) for all s.
   """
   t = np.asarray(t, dtype=float)
   x = np.asarray(x, dtype=float)
   p = b.packet
   s = t - b.t_c
   diag = _shifted_diagonal(b, s)
   det_factor = np.prod(b.mu ** -0.5 * diag ** -0.5, axis=-1)

   z = (x - b.center(t)) @ b.world_eigvecs
   quad = np.sum(z * z / diag, axis=-1)

   eta = b.eta
   xi = p.xi
   phase = (1j * ((x - b.x_c) @ eta) - 1j * t * float(eta @ eta)
            + 1j * float((b.x_c - b.event.origin) @ xi) - 0.25 * quad)
   a_c = p.sigma ** 2 + 1j * b.t_c
   prefactor = (p.sigma ** 2 / (2.0 * math.pi)) ** 0.75 * a_c ** -1.5
   return prefactor * det_factor * np.exp(phase)


def covariance_identities(b: ReflectedBeam) -> Dict[str, float]:
   """
   Relative errors of the algebraic identities of Sigma and B

   product: lambda1 lambda2 = 16 |xi|^2 / (R1 R2)
   sum:     |lambda1| + |lambda2| = 4((xi1^2+xi3^2)/(R1|xi3|) + (xi2^2+xi3^2)/(R2|xi3|))
   null:    B eta_frame = 0
   inverse: Sigma SigmaInv = Id
   """
   xi1, xi2, xi3 = b.event.xi_components
   R1, R2 = b.event.frame.R1, b.event.frame.R2
   xi_sq = xi1 ** 2 + xi2 ** 2 + xi3 ** 2
   lam = np.linalg.eigvalsh(0.5 * (b.B + b.B.T))
   scale = float(np.max(np.abs(lam))) or 1.0
   zero = int(np.argmin(np.abs(lam)))
   l1, l2 = np.delete(lam, zero)

   product = 16.0 * xi_sq / (R1 * R2)
   total = 4.0 * ((xi1 ** 2 + xi3 ** 2) / (R1 * abs(xi3)) + (xi2 ** 2 + xi3 ** 2) / (R2 * abs(xi3)))
   eta_frame = np.array([xi1, xi2, -xi3])

   return {
      'product_error': abs(l1 * l2 - product) / product,
      'sum_error': abs(abs(l1) + abs(l2) - total) / total,
      'null_error': float(np.linalg.norm(b.B @ eta_frame)) / (scale * math.sqrt(xi_sq)),
      'zero_eigenvalue': abs(float(lam[zero])) / scale,
      'max_eigenvalue': float(np.max(lam)) if abs(float(np.max(lam))) > 1e-12 * scale else 0.0,
      'inverse_error': float(np.max(np.abs(b.Sigma @ b.SigmaInv - np.eye(3)))),
   }


def covariance_bounds_check(b: ReflectedBeam, t: float, params: Optional[FrameParams] = None,
                            samples: int = 64, seed: int = 0) -> CovarianceReport:
   """
   Evaluate the covariance quantities against their log-power envelopes

   Re v^T (Sigma + i(t-t_c))^-1 v >= sigma^2 / (loglog^25 (sigma^4 + log^4 t^2)) |v|^2
   ||(Sigma + i(t-t_c))^-1||_max <= log^5 / sqrt(sigma^4 + t^2)
   |det(Id + i(t-t_c) SigmaInv)|^(-1/2) <= log^(5/2) ((sigma^4 + t_c^2) / (sigma^4 + t^2))^(3/4)
   """
   params = params or b.packet.params
   sigma = b.packet.sigma
   log, loglog = params.log, params.loglog
   s = t - b.t_c

   W = b.world_eigvecs
   inv_diag = 1.0 / _shifted_diagonal(b, s)
   M = (W * inv_diag) @ W.T

   rng = np.random.default_rng(seed)
   v = rng.normal(size=(samples, 3))
   v = np.vstack([v, W.T])
   v = v / np.linalg.norm(v, axis=-1, keepdims=True)
   quad = np.real(np.einsum('pi,ij,pj->p', v, M, v))

   det_factor = float(np.prod(np.abs(1.0 + 1j * s * b.mu)) ** -0.5)
   s4 = sigma ** 4

   return CovarianceReport(
      t=float(t),
      re_quadratic_min=float(quad.min()),
      re_quadratic_envelope=sigma ** 2 / (loglog ** 25 * (s4 + log ** 4 * t * t)),
      max_norm=float(np.max(np.abs(M))),
      max_norm_envelope=log ** 5 / math.sqrt(s4 + t * t),
      det_factor=det_factor,
      det_envelope=log ** 2.5 * ((s4 + b.t_c ** 2) / (s4 + t * t)) ** 0.75
   )


def _smoothstep(u: np.ndarray) -> np.ndarray:
   u = np.clip(u, 0.0, 1.0)
   return u * u * u * (10.0 - 15.0 * u + 6.0 * u * u)


def cutoff_width(event: RayEvent, params: FrameParams) -> float:
   """sigma log(1/eps) / |xi|"""
   return params.sigma * params.log / event.speed


def time_cutoffs(event: RayEvent, params: FrameParams) -> Tuple[Callable, Callable]:
   """
   Smooth switches between the incident packet and the reflected beam

   chi_u = 1 on [0, t_c + 2w] and 0 after t_c + 4w;
   chi_v = 0 before t_c - 4w and 1 after t_c - 2w;
   w = sigma log(1/eps) / |xi|, C^2 transitions.
   """
   _require_entering(event)
   w = cutoff_width(event, params)
   t_c = event.t_c

   def chi_u(t):
      return 1.0 - _smoothstep((np.asarray(t, dtype=float) - (t_c + 2.0 * w)) / (2.0 * w))

   def chi_v(t):
      return _smoothstep((np.asarray(t, dtype=float) - (t_c - 4.0 * w)) / (2.0 * w))

   return chi_u, chi_v


def short_time_scale(params: FrameParams) -> float:
   """eps delta / (10 log log(1/eps))"""
   return params.epsilon * params.delta / (10.0 * params.loglog)


def _boundary_foot(body: ConvexBody, x: np.ndarray) -> np.ndarray:
   x = np.asarray(x, dtype=float)
   if abs(float(body.level_fn(x))) <= max(body.boundary_tolerance(x), 1e-12):
      return x
   return nearest_boundary_point(body, x)


def boundary_residual(p: FreePacket, b: ReflectedBeam, t: float, x: np.ndarray) -> complex:
   """
   A_n(t, x) = exp(i t|xi|^2 - i xi.(x* - x_c)) [u_n(t, x*) - v_n(t, x*)]

   x* is the boundary point nearest to x.
   """
   body = b.event.body
   foot = _boundary_foot(body, x) if body is not None else np.asarray(x, dtype=float)
   xi = p.xi
   phase = np.exp(1j * t * float(xi @ xi) - 1j * float(xi @ (foot - b.x_c)))
   return complex(phase * (free_packet_eval(p, t, foot) - reflected_eval(b, t, foot)))


def boundary_residual_sup(p: FreePacket, b: ReflectedBeam, params: FrameParams,
                          samples: int = 200, seed: int = 0) -> Dict[str, float]:
   """
   Sup of |A_n| over |x* - x_c| <= sigma log(1/eps), |t - t_c| <= 4 sigma log(1/eps)/|xi|

   Boundary points are drawn by projecting points of the tangent disc at
   x_c back onto the obstacle.
   """
   body = b.event.body
   frame = b.event.frame
   radius = params.sigma * params.log
   half = 4.0 * cutoff_width(b.event, params)
   rng = np.random.default_rng(seed)

   at_collision = abs(boundary_residual(p, b, b.t_c, b.x_c))
   best = at_collision
   for _ in range(samples):
      r = radius * math.sqrt(rng.uniform())
      theta = rng.uniform(0.0, 2.0 * math.pi)
      q = b.x_c + r * (math.cos(theta) * frame.tau + math.sin(theta) * frame.gamma)
      q = q + 1e-3 * radius * frame.normal
      foot = nearest_boundary_point(body, q) if body is not None else q
      if np.linalg.norm(foot - b.x_c) > radius:
         continue
      t = max(0.0, b.t_c + rng.uniform(-half, half))
      best = max(best, abs(boundary_residual(p, b, t, foot)))

   return {
      'sup': best,
      'sup_scaled': best * p.sigma ** 1.5,
      'at_collision': at_collision,
      'window_radius': radius,
      'window_half_time': half,
   }


def trace_packets(decomp: Decomposition, body: ConvexBody, kappa: float, clearance: float,
                  floor: float = 0.0) -> Dict[Index, RayEvent]:
   """Classify the ray of every admissible packet"""
   events = {}
   for n, _ in decomp.iter_admissible(floor):
      events[n] = classify(body, decomp.center, decomp.xi(n), kappa, clearance)
   return events


class Parametrix:
   """
   Sum over S of c_n [chi_u u_n - 1_entering chi_v v_n]

   Missing and near-grazing packets propagate freely without cutoffs.
   """

   def __init__(self, decomp: Decomposition, events: Dict[Index, RayEvent],
                coefficient_floor: float = 0.0):
      self.decomp = decomp
      self.params = decomp.params
      self.logger = logging.getLogger(__name__)
      self.terms: List[Tuple[FreePacket, Optional[ReflectedBeam], Optional[Tuple[Callable, Callable]]]] = []
      self.classes: Dict[Index, RayClass] = {}

      for n, c in decomp.iter_admissible(coefficient_floor):
         packet = FreePacket(params=self.params, n=n, coeff=c, center=decomp.center)
         event = events.get(n)
         ray_class = event.ray_class if event is not None else RayClass.MISSING
         self.classes[n] = ray_class
         if ray_class == RayClass.ENTERING:
            beam = build_reflected(packet, event)
            self.terms.append((packet, beam, time_cutoffs(event, self.params)))
         else:
            self.terms.append((packet, None, None))

      self.events = events
      self.logger.debug(f"Parametrix with {len(self.terms)} packets: {self.class_counts()}")

   def class_counts(self) -> Dict[str, int]:
      counts = {c.value: 0 for c in RayClass}
      for ray_class in self.classes.values():
         counts[ray_class.value] += 1
      return counts

   def near_grazing_fraction(self) -> float:
      """sum_{n in G} |c_n|^2 / sum_{n in S} |c_n|^2"""
      total = 0.0
      grazing = 0.0
      for packet, _, _ in self.terms:
         weight = abs(packet.coeff) ** 2
         total += weight
         if self.classes[packet.n] == RayClass.NEAR_GRAZING:
            grazing += weight
      return grazing / total if total > 0.0 else 0.0

   def _evaluate_terms(self, terms, t: float, x: np.ndarray) -> np.ndarray:
      out = np.zeros(x.shape[:-1], dtype=complex)
      for packet, beam, cutoffs in terms:
         if beam is None:
            out += packet.coeff * free_packet_eval(packet, t, x)
            continue
         chi_u, chi_v = cutoffs
         cu = float(chi_u(t))
         cv = float(chi_v(t))
         if cu > 0.0:
            out += packet.coeff * cu * free_packet_eval(packet, t, x)
         if cv > 0.0:
            out -= packet.coeff * cv * reflected_eval(beam, t, x)
      return out

   def evaluate(self, t: float, x: np.ndarray, workers: int = 1) -> np.ndarray:
      """Parametrix at time t and points x of shape (..., 3)"""
      x = np.asarray(x, dtype=float)
      if workers <= 1 or len(self.terms) < 2 * workers:
         return self._evaluate_terms(self.terms, t, x)

      size = math.ceil(len(self.terms) / workers)
      chunks = [self.terms[i:i + size] for i in range(0, len(self.terms), size)]
      with ThreadPoolExecutor(max_workers=workers) as pool:
         parts = list(pool.map(lambda chunk: self._evaluate_terms(chunk, t, x), chunks))

      # Fixed-order reduction
      out = parts[0]
      for part in parts[1:]:
         out = out + part
      return out

   def packet_table(self) -> pd.DataFrame:
      """Per-packet class, collision time and coefficient size"""
      rows = []
      for packet, beam, _ in self.terms:
         event = self.events.get(packet.n)
         rows.append({
            'n1': packet.n[0],
            'n2': packet.n[1],
            'n3': packet.n[2],
            'class': self.classes[packet.n].value,
            't_c': event.t_c if event is not None and event.t_c is not None else np.nan,
            'abs_c': abs(packet.coeff),
         })
      return pd.DataFrame(rows, columns=['n1', 'n2', 'n3', 'class', 't_c', 'abs_c'])

   def entering_beams(self) -> List[ReflectedBeam]:
      return [beam for _, beam, _ in self.terms if beam is not None]


def parametrix_eval(decomp: Decomposition, events: Dict[Index, RayEvent], t: float,
                    x: np.ndarray) -> np.ndarray:
   """Obstacle parametrix at (t, x); see Parametrix"""
   return Parametrix(decomp, events).evaluate(t, x)
