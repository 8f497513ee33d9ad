"""
Fast invariant suite

Frame norms, Gram formula, reflection law, covariance algebra, the
Schrodinger residual of the closed-form propagators,
Crank-Nicolson mass conservation, plus two self-tests showing that a
corrupted curvature matrix and a missing mask margin are detected.
"""

import logging
import time
from dataclasses import dataclass, field
from typing import Callable, List
from unittest import mock

import numpy as np
import pandas as pd

from . import beams
from .models.body import ConvexBody
from .models.grid import GridField
from .models.beam import FreePacket
from .monitors.conservation import mass
from .monitors.envelopes import CheckReport, bound_check, lower_bound_check, reports_to_dataframe
from .rays import classify
from .solvers.gridsolver import cn_step, rasterize
from .solvers.operators import ObstacleTouchesBoundary
from .wavepackets import frame_params, gamma, gram


logger = logging.getLogger(__name__)


@dataclass
class DoctorReport:
   """Outcome of the invariant suite"""

   checks: List[CheckReport] = field(default_factory=list)
   elapsed: float = 0.0

   @property
   def passed(self) -> bool:
      return all(c.passed for c in self.checks)

   def to_dataframe(self) -> pd.DataFrame:
      return reports_to_dataframe(self.checks)


def _oblique_event():
   body = ConvexBody.sphere((0.0, 0.0, 0.0), 1.0)
   event = classify(body, np.array([0.5, 0.0, 3.0]), np.array([0.0, 0.0, -10.0]), 0.01, 0.01)
   params = frame_params(0.05, 0.05)
   packet = FreePacket(params=None, width=params.sigma, momentum=event.xi, center=event.origin)
   return event, packet


def check_frame(epsilon: float = 0.05) -> List[CheckReport]:
   """||gamma_n|| = 1 and the Gram formula by quadrature"""
   params = frame_params(epsilon, epsilon)
   h = params.sigma / 4.0
   axis = np.arange(-32, 32) * h + 0.5 * h
   x = np.stack(np.meshgrid(axis, axis, axis, indexing='ij'), axis=-1)
   n = (0, 0, int(round(params.L / epsilon)))
   g_n = gamma(n, params, x)
   reports = [bound_check("frame_norm", abs(h ** 3 * float(np.sum(np.abs(g_n) ** 2)) - 1.0), 1e-8)]
   worst = 0.0
   for shift in [(1, 0, 0), (0, 2, 0), (1, 1, 1), (0, 0, 3)]:
      m = tuple(a + b for a, b in zip(n, shift))
      inner = h ** 3 * complex(np.sum(g_n * np.conj(gamma(m, params, x))))
      worst = max(worst, abs(inner - gram(n, m, params)))
   reports.append(bound_check("gram_formula", worst, 1e-8))
   return reports


def check_reflection() -> List[CheckReport]:
   """Mirror law at an oblique collision"""
   event, _ = _oblique_event()
   nu = event.frame.normal
   xi, eta = event.xi, event.eta
   tangential = float(np.linalg.norm((eta - np.dot(eta, nu) * nu) - (xi - np.dot(xi, nu) * nu)))
   speed = float(np.linalg.norm(xi))
   return [
      bound_check("reflection_speed", abs(float(np.linalg.norm(eta)) - speed) / speed, 1e-12),
      bound_check("reflection_normal", abs(float(np.dot(eta, nu) + np.dot(xi, nu))) / speed, 1e-12),
      bound_check("reflection_tangential", tangential / speed, 1e-12),
   ]


def check_covariance() -> List[CheckReport]:
   """Spectrum of B and the inverse of SigmaInv"""
   event, packet = _oblique_event()
   ids = beams.covariance_identities(beams.build_reflected(packet, event))
   return [
      bound_check("lambda_product", ids['product_error'], 1e-10),
      bound_check("lambda_sum", ids['sum_error'], 1e-10),
      bound_check("null_direction", ids['null_error'], 1e-10),
      bound_check("sigma_inverse", ids['inverse_error'], 1e-10),
   ]


def closed_form_samples(packet: FreePacket, beam, samples: int, seed: int = 0):
   """
   Seeded (t, x) samples around the incident packet, its halfspace image
   pair and the reflected beam of the oblique collision

   Returns a mapping name -> (evaluator, t, x).
   """
   rng = np.random.default_rng(seed)
   sigma = packet.sigma
   xi = packet.xi
   t_c = beam.t_c
   width = beams.cutoff_width(beam.event, frame_params(0.05, 0.05))

   t_free = rng.uniform(0.0, 2.0 * t_c, samples)
   spread = np.sqrt(sigma ** 4 + t_free ** 2)[:, None] / sigma
   x_free = packet.center + 2.0 * t_free[:, None] * xi + spread * rng.normal(size=(samples, 3))

   offset = np.array([0.0, 0.0, 2.0 * sigma])
   t_half = rng.uniform(0.0, 4.0 * sigma ** 2, samples)
   height = np.abs(offset[2] + 2.0 * t_half * xi[2])
   spread = np.sqrt(sigma ** 4 + t_half ** 2)[:, None] / sigma
   x_half = np.zeros((samples, 3))
   x_half[:, 2] = height
   x_half += spread * rng.normal(size=(samples, 3))

   t_beam = t_c + width * rng.uniform(-4.0, 4.0, samples)
   x_beam = beam.center(t_beam) + sigma * rng.normal(size=(samples, 3))

   return {
      'free': (lambda t, x: beams.free_packet_eval(packet, t, x), t_free, x_free),
      'halfspace': (lambda t, x: beams.halfspace_eval(packet, offset, t, x), t_half, x_half),
      'reflected': (lambda t, x: beams.reflected_eval(beam, t, x), t_beam, x_beam),
   }


def check_closed_forms(samples: int = 1000, seed: int = 0) -> List[CheckReport]:
   """Free, halfspace and reflected closed forms solve i u_t + Laplacian u = 0"""
   event, packet = _oblique_event()
   beam = beams.build_reflected(packet, event)
   sigma = packet.sigma
   h = 1e-3 * sigma
   dt = 1e-3 * sigma ** 2 / (1.0 + sigma * float(np.linalg.norm(packet.xi)))
   reports = []
   for name, (fn, t, x) in closed_form_samples(packet, beam, samples, seed).items():
      residual, scale = beams.schrodinger_residual(fn, t, x, h, dt)
      relative = float(np.max(np.abs(residual)) / np.max(scale))
      reports.append(bound_check(f"schrodinger_residual_{name}", relative, 1e-6))
   return reports


def check_mass(steps: int = 5, seed: int = 0) -> List[CheckReport]:
   """Crank-Nicolson mass drift next to a sphere"""
   rng = np.random.default_rng(seed)
   body = ConvexBody.sphere((0.0, 0.0, 0.0), 0.6)
   grid = rasterize(body, (24, 24, 24), 0.1)
   center = np.array([0.0, 0.0, 0.85]) + 0.05 * rng.standard_normal(3)
   k = rng.uniform(-3.0, 3.0, size=3)

   def data(x: np.ndarray) -> np.ndarray:
      d = x - center
      return np.exp(-np.sum(d * d, axis=-1) / 0.04 + 1j * (x @ k))

   f = GridField.sample(grid, data)
   m0 = mass(f)
   worst = 0.0
   for _ in range(steps):
      f = cn_step(f, 0.005)
      worst = max(worst, abs(mass(f) - m0) / m0)
   return [bound_check("cn_mass_drift", worst, 1e-10 * steps)]


def _flipped_curvature(original: Callable) -> Callable:
   def corrupted(xi_components, R1, R2):
      B = original(xi_components, R1, R2)
      B[2, 2] = -B[2, 2]
      return B
   return corrupted


def check_corrupted_curvature() -> List[CheckReport]:
   """A sign error in B must break the lambda1 lambda2 identity"""
   event, packet = _oblique_event()
   with mock.patch.object(beams, 'curvature_matrix', _flipped_curvature(beams.curvature_matrix)):
      ids = beams.covariance_identities(beams.build_reflected(packet, event))
   return [lower_bound_check("corrupted_curvature_detected", ids['product_error'], 1e-6)]


def check_mask_margin() -> List[CheckReport]:
   """An obstacle reaching the box faces must be rejected"""
   try:
      rasterize(ConvexBody.sphere((0.0, 0.0, 0.0), 1.0), (16, 16, 16), 0.15)
      caught = False
   except ObstacleTouchesBoundary:
      caught = True
   return [bound_check("mask_margin_detected", 0.0 if caught else 1.0, 0.0)]


SUITE = [
   check_frame,
   check_reflection,
   check_covariance,
   check_closed_forms,
   check_mass,
   check_corrupted_curvature,
   check_mask_margin,
]


def doctor() -> DoctorReport:
   """Run the invariant suite"""
   start = time.perf_counter()
   report = DoctorReport()
   for check in SUITE:
      results = check()
      report.checks.extend(results)
      for r in results:
         log = logger.debug if r.passed else logger.warning
         log(f"{r.name}: lhs={r.lhs:.3e} rhs={r.rhs:.3e} {'ok' if r.passed else 'FAILED'}")
   report.elapsed = time.perf_counter() - start
   logger.info(f"Doctor finished in {report.elapsed:.1f}s: "
               f"{sum(not c.passed for c in report.checks)} of {len(report.checks)} checks failed")
   return report
