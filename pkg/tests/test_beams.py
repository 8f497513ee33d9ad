"""
Tests for free packets, reflected beams and the parametrix
"""

import math
from dataclasses import replace

import numpy as np
import pytest

from exterior_nls.beams import (
   Parametrix, boundary_residual, boundary_residual_sup, build_reflected, covariance_bounds_check,
   covariance_identities, curvature_matrix, free_packet_eval, gaussian_packet,
   halfspace_eval, parametrix_eval, reflected_eval, short_time_scale, time_cutoffs, trace_packets
)
from exterior_nls.models.beam import FreePacket
from exterior_nls.models.body import ConvexBody
from exterior_nls.models.ray import RayClass
from exterior_nls.rays import NotEntering, classify
from exterior_nls.wavepackets import frame_params, gamma, single_packet_decomposition


def _collision(body, origin, xi, width):
   event = classify(body, np.asarray(origin, dtype=float), np.asarray(xi, dtype=float), 0.01, 0.01)
   packet = gaussian_packet(width, event.xi, center=event.origin)
   return event, packet


@pytest.fixture
def oblique():
   return _collision(ConvexBody.sphere((0.0, 0.0, 0.0), 1.0), (0.5, 0.0, 3.0), (0.0, 0.0, -10.0), 0.15)


@pytest.fixture
def ellipsoid_hit():
   body = ConvexBody.ellipsoid((0.0, 0.0, 0.0), (1.5, 1.0, 0.75))
   return _collision(body, (0.4, 0.3, 3.0), (1.0, -0.5, -12.0), 0.1)


def _random_collisions(body, inner, count, seed):
   """Seeded entering packets from random origins, aimed at points within inner of the center"""
   rng = np.random.default_rng(seed)
   found = []
   while len(found) < count:
      u, w = rng.normal(size=(2, 3))
      origin = body.center_hint + 4.0 * u / np.linalg.norm(u)
      target = body.center_hint + inner * rng.uniform() ** (1.0 / 3.0) * w / np.linalg.norm(w)
      xi = rng.uniform(5.0, 15.0) * (target - origin) / np.linalg.norm(target - origin)
      event = classify(body, origin, xi, 0.01, 0.01)
      if event.ray_class == RayClass.ENTERING:
         found.append((event, gaussian_packet(rng.uniform(0.05, 0.2), event.xi, center=event.origin)))
   return found


BODIES = [
   (ConvexBody.sphere((0.0, 0.0, 0.0), 1.0), 0.8),
   (ConvexBody.ellipsoid((0.0, 0.0, 0.0), (1.5, 1.0, 0.75)), 0.6),
]


def _cube(width, cells=48, span=8.0):
   h = 2.0 * span * width / cells
   axis = (np.arange(cells) - 0.5 * (cells - 1)) * h
   return h, np.stack(np.meshgrid(axis, axis, axis, indexing='ij'), axis=-1)


class TestFreePacket:
   """Test closed-form free evolution"""

   def test_initial_data(self):
      """Test the normalized Gaussian at t = 0"""
      packet = gaussian_packet(0.2, (0.0, 0.0, 5.0))
      x = np.array([0.1, -0.1, 0.05])
      expected = (2.0 * math.pi * 0.04) ** -0.75 * math.exp(-0.0225 / 0.16) * np.exp(0.25j)
      assert complex(free_packet_eval(packet, 0.0, x)) == pytest.approx(expected)

   def test_mass_is_conserved(self):
      """Test unit L2 norm before and after spreading"""
      packet = gaussian_packet(0.2, (0.0, 0.0, 0.0))
      h, x = _cube(0.2, cells=64, span=10.0)
      for t in (0.0, 0.02, 0.04):
         norm2 = h ** 3 * float(np.sum(np.abs(free_packet_eval(packet, t, x)) ** 2))
         assert norm2 == pytest.approx(1.0, abs=1e-6)

   def test_peak_modulus(self):
      """Test |u| at the moving center"""
      packet = gaussian_packet(0.2, (1.0, 0.0, -2.0), center=(0.5, 0.0, 0.0))
      t = 0.03
      center = packet.center + 2.0 * t * packet.xi
      assert abs(complex(free_packet_eval(packet, t, center))) == pytest.approx(packet.peak_modulus(t))

   def test_frame_packet_matches_gamma(self):
      """Test that a frame packet at t = 0 is gamma_n"""
      params = frame_params(0.05, 0.05)
      packet = FreePacket(params=params, n=(0, 0, 3))
      x = np.array([[0.02, 0.01, -0.03]])
      assert np.allclose(free_packet_eval(packet, 0.0, x), gamma((0, 0, 3), params, x))

   def test_halfspace_dirichlet(self):
      """Test that the image solution vanishes on the plane"""
      packet = gaussian_packet(0.1, (0.0, 0.0, -8.0))
      x = np.array([[0.1, 0.2, 0.0], [-0.3, 0.0, 0.0]])
      assert np.allclose(halfspace_eval(packet, (0.0, 0.0, 0.3), 0.01, x), 0.0)


class TestReflectedBeam:
   """Test the curvature-matched beam"""

   @pytest.mark.parametrize("case", ["oblique", "ellipsoid_hit"])
   def test_collision_identity(self, case, request):
      """Test u = v at the collision point and time"""
      event, packet = request.getfixturevalue(case)
      beam = build_reflected(packet, event)
      u = complex(free_packet_eval(packet, beam.t_c, beam.x_c))
      v = complex(reflected_eval(beam, beam.t_c, beam.x_c))
      assert abs(u - v) <= 1e-10 * abs(u)
      assert abs(boundary_residual(packet, beam, beam.t_c, beam.x_c)) <= 1e-10 * abs(u)

   @pytest.mark.parametrize("case", ["oblique", "ellipsoid_hit"])
   def test_covariance_identities(self, case, request):
      """Test the spectrum of B and the inverse of SigmaInv"""
      event, packet = request.getfixturevalue(case)
      ids = covariance_identities(build_reflected(packet, event))
      assert ids['product_error'] <= 1e-10
      assert ids['sum_error'] <= 1e-10
      assert ids['null_error'] <= 1e-10
      assert ids['zero_eigenvalue'] <= 1e-10
      assert ids['inverse_error'] <= 1e-10
      assert ids['max_eigenvalue'] <= 0.0

   @pytest.mark.parametrize("body, inner", BODIES, ids=["sphere", "ellipsoid"])
   def test_collision_identity_random(self, body, inner):
      """Test u = v at (t_c, x_c) for 100 seeded entering packets"""
      for event, packet in _random_collisions(body, inner, 100, seed=3):
         beam = build_reflected(packet, event)
         u = complex(free_packet_eval(packet, beam.t_c, beam.x_c))
         v = complex(reflected_eval(beam, beam.t_c, beam.x_c))
         assert abs(u - v) <= 1e-10 * abs(u)

   @pytest.mark.parametrize("body, inner", BODIES, ids=["sphere", "ellipsoid"])
   def test_covariance_identities_random(self, body, inner):
      """Test the B-matrix algebra on 500 seeded events per body"""
      worst = {}
      for event, packet in _random_collisions(body, inner, 500, seed=5):
         ids = covariance_identities(build_reflected(packet, event))
         for key in ('product_error', 'sum_error', 'null_error', 'zero_eigenvalue', 'inverse_error'):
            worst[key] = max(worst.get(key, 0.0), ids[key])
         assert ids['max_eigenvalue'] <= 0.0
      assert max(worst.values()) <= 1e-10, worst

   def test_curvature_matrix_symmetric(self):
      """Test symmetry and the null direction of B"""
      comps = np.array([2.0, -1.0, -5.0])
      B = curvature_matrix(comps, 1.0, 3.0)
      assert np.allclose(B, B.T)
      assert np.allclose(B @ np.array([2.0, -1.0, 5.0]), 0.0)

   def test_beam_moves_along_eta(self, oblique):
      """Test the beam center after the collision"""
      event, packet = oblique
      beam = build_reflected(packet, event)
      assert np.allclose(beam.center(beam.t_c + 0.01), beam.x_c + 0.02 * event.eta)

   def test_covariance_report(self, oblique):
      """Test positivity of the real part of the covariance"""
      event, packet = oblique
      beam = build_reflected(packet, event)
      params = frame_params(0.05, 0.05)
      report = covariance_bounds_check(beam, 2.0 * beam.t_c, params)
      assert report.positive
      assert report.det_factor > 0.0
      assert report.max_norm > 0.0

   def test_requires_entering(self):
      """Test that near-grazing rays have no reflected beam"""
      sphere = ConvexBody.sphere((0.0, 0.0, 0.0), 1.0)
      event = classify(sphere, np.array([0.999, 0.0, 3.0]), np.array([0.0, 0.0, -10.0]), 0.1, 0.01)
      packet = gaussian_packet(0.1, event.xi, center=event.origin)
      with pytest.raises(NotEntering):
         build_reflected(packet, event)


class TestCutoffs:
   """Test the time cutoffs"""

   def test_cutoff_plateaus(self, oblique):
      """Test chi_u and chi_v around the collision"""
      event, _ = oblique
      params = frame_params(0.05, 0.05)
      chi_u, chi_v = time_cutoffs(event, params)
      w = params.sigma * params.log / event.speed
      t_c = event.t_c

      assert float(chi_u(t_c)) == 1.0
      assert float(chi_v(t_c)) == 1.0
      assert float(chi_u(t_c + 4.0 * w)) == pytest.approx(0.0, abs=1e-12)
      assert float(chi_v(t_c - 4.0 * w)) == 0.0
      assert 0.0 < float(chi_u(t_c + 3.0 * w)) < 1.0

   def test_short_time_scale(self):
      """Test eps delta / (10 loglog)"""
      params = frame_params(0.05, 0.1)
      assert short_time_scale(params) == pytest.approx(0.005 / (10.0 * params.loglog))

   def test_boundary_residual_sup(self, oblique):
      """Test the sampled sup over the collision window"""
      event, packet = oblique
      beam = build_reflected(packet, event)
      params = frame_params(0.05, 0.05)
      first = boundary_residual_sup(packet, beam, params, samples=30, seed=4)
      again = boundary_residual_sup(packet, beam, params, samples=30, seed=4)
      assert first == again
      assert first["sup"] >= first["at_collision"]
      assert first["sup_scaled"] == pytest.approx(first["sup"] * packet.sigma ** 1.5)
      assert first["window_radius"] == pytest.approx(params.sigma * params.log)


class TestParametrix:
   """Test the packet sum"""

   def test_missing_packet_is_free(self):
      """Test that a missing packet propagates freely"""
      params = frame_params(0.05, 0.05)
      n = (0, 0, 3)
      decomp = single_packet_decomposition(params, n, center=(5.0, 0.0, 0.0))
      sphere = ConvexBody.sphere((0.0, 0.0, 0.0), 1.0)
      events = trace_packets(decomp, sphere, 0.01, 0.01)
      assert events[n].ray_class == RayClass.MISSING

      parametrix = Parametrix(decomp, events)
      x = np.array([[5.0, 0.0, 0.1], [5.1, 0.0, 0.2]])
      t = 0.002
      packet = FreePacket(params=params, n=n, center=decomp.center)
      assert np.allclose(parametrix.evaluate(t, x), free_packet_eval(packet, t, x))
      assert np.allclose(parametrix_eval(decomp, events, t, x), parametrix.evaluate(t, x))
      assert parametrix.class_counts()[RayClass.MISSING.value] == 1
      assert parametrix.near_grazing_fraction() == 0.0

   def test_entering_packet_table(self):
      """Test the packet table of a reflected packet"""
      params = frame_params(0.05, 0.05)
      n = (0, 0, 3)
      decomp = single_packet_decomposition(params, n)
      sphere = ConvexBody.sphere((0.0, 0.0, 1.0 + 4.0 * params.sigma), 1.0)
      events = trace_packets(decomp, sphere, 0.01, 0.01)
      parametrix = Parametrix(decomp, events)

      table = parametrix.packet_table()
      assert list(table.columns) == ['n1', 'n2', 'n3', 'class', 't_c', 'abs_c']
      assert table.loc[0, 'class'] == RayClass.ENTERING.value
      assert table.loc[0, 't_c'] == pytest.approx(4.0 * params.sigma / (2.0 * 3.0 / params.L))
      assert len(parametrix.entering_beams()) == 1

   def test_workers_match_serial(self):
      """Test that threaded evaluation matches the serial sum"""
      params = frame_params(0.05, 0.05)
      decomp = single_packet_decomposition(params, (0, 0, 3))
      coeffs = decomp.coeffs.copy()
      admissible = decomp.admissible.copy()
      w = decomp.window
      for n in [(1, 1, 3), (-1, 1, 3), (0, 2, 3), (2, 0, -3)]:
         coeffs[tuple(k + w for k in n)] = 0.5
         admissible[tuple(k + w for k in n)] = True
      decomp = replace(decomp, coeffs=coeffs, admissible=admissible)
      sphere = ConvexBody.sphere((0.0, 0.0, 2.0), 1.0)
      parametrix = Parametrix(decomp, trace_packets(decomp, sphere, 0.01, 0.01))
      x = np.random.default_rng(1).normal(scale=0.3, size=(20, 3))
      serial = parametrix.evaluate(0.01, x)
      threaded = parametrix.evaluate(0.01, x, workers=2)
      assert np.allclose(serial, threaded, rtol=1e-13, atol=1e-13)
