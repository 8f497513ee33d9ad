"""
Tests for the Gaussian frame and coefficient decomposition
"""

import math

import numpy as np
import pytest

from exterior_nls.models.grid import Grid, GridField
from exterior_nls.profiles import Profile, ProfileKind, smooth_cutoff
from exterior_nls.utils.gridio import write_field
from exterior_nls.wavepackets import (
   EPSILON_LIMIT, InvalidScale, SupportViolation, WavePacketError, WindowTooSmall,
   coefficient_envelope, decompose, frame_params, gamma, gram, periodization_bound,
   quadratic_norm, reconstruct, sample_on_cube, single_packet_decomposition, tail_mass
)


@pytest.fixture
def params():
   return frame_params(0.05, 0.05)


class TestFrameParams:
   """Test frame scales"""

   def test_scales(self, params):
      """Test sigma = sqrt(eps delta) log(1/eps) and L = sigma loglog(1/eps)"""
      log = math.log(20.0)
      assert params.sigma == pytest.approx(0.05 * log)
      assert params.L == pytest.approx(params.sigma * math.log(log))
      assert params.L > params.sigma

   def test_frequency_shell(self, params):
      """Test the admissible frequency band"""
      assert params.lower_frequency == pytest.approx(1.0 / (0.05 * params.loglog))
      assert params.upper_frequency == pytest.approx(params.loglog / 0.05)
      assert params.default_window == math.ceil(params.L * params.upper_frequency)

   @pytest.mark.parametrize("epsilon, delta", [(0.0, 0.1), (0.05, 0.01), (0.1, 0.2)])
   def test_invalid_scales(self, epsilon, delta):
      """Test rejected scale pairs"""
      with pytest.raises(InvalidScale):
         frame_params(epsilon, delta)

   def test_epsilon_limit(self):
      """Test the largest usable epsilon"""
      assert EPSILON_LIMIT == pytest.approx(math.exp(-math.e))
      frame_params(0.9 * EPSILON_LIMIT, 0.9 * EPSILON_LIMIT)

   def test_periodization_bound(self, params):
      """Test the periodization leakage formula"""
      expected = math.exp(-(math.pi * params.L) ** 2 / (4.0 * params.sigma ** 2))
      assert periodization_bound(params) == pytest.approx(expected)


class TestFrameElements:
   """Test gamma_n and the Gram formula"""

   def test_gram_diagonal(self, params):
      """Test <gamma_n, gamma_n> = 1"""
      assert gram((1, 2, 3), (1, 2, 3), params) == 1.0

   def test_gram_quadrature(self, params):
      """Test the Gram formula against quadrature"""
      h = params.sigma / 4.0
      axis = (np.arange(64) - 31.5) * h
      x = np.stack(np.meshgrid(axis, axis, axis, indexing='ij'), axis=-1)
      n, m = (0, 0, 3), (1, 0, 2)
      inner = h ** 3 * complex(np.sum(gamma(n, params, x) * np.conj(gamma(m, params, x))))
      assert abs(inner - gram(n, m, params)) <= 1e-8

   def test_gamma_peak(self, params):
      """Test the normalization constant"""
      value = gamma((0, 0, 3), params, np.zeros(3))
      assert abs(complex(value)) == pytest.approx((2.0 * math.pi * params.sigma ** 2) ** -0.75)

   def test_gamma_translation(self, params):
      """Test the center argument"""
      center = np.array([0.1, -0.2, 0.3])
      x = np.array([[0.2, 0.0, 0.1]])
      assert np.allclose(gamma((1, 1, 3), params, x, center=center),
                         gamma((1, 1, 3), params, x - center))


class TestDecompose:
   """Test frame coefficients"""

   def test_single_frame_element(self, params):
      """Test that gamma_n has coefficient 1 at n and 0 elsewhere"""
      n = (1, 1, 3)
      psi = sample_on_cube(lambda x: gamma(n, params, x), params)
      decomp = decompose(psi, params, check_support=False)

      assert decomp.coefficient(n) == pytest.approx(1.0, abs=1e-10)
      others = np.abs(decomp.coeffs).copy()
      others[tuple(k + decomp.window for k in n)] = 0.0
      assert others.max() <= 1e-10
      assert decomp.admissible[tuple(k + decomp.window for k in n)]
      assert decomp.residual_l2 <= 1e-8

   def test_linear_combination(self, params):
      """Test that coefficients of a two-packet sum are recovered"""
      a, b = (0, 0, 3), (-1, 2, 2)
      psi = sample_on_cube(lambda x: 2.0 * gamma(a, params, x) - 0.5j * gamma(b, params, x), params)
      decomp = decompose(psi, params, check_support=False)
      assert decomp.coefficient(a) == pytest.approx(2.0, abs=1e-10)
      assert decomp.coefficient(b) == pytest.approx(-0.5j, abs=1e-10)
      assert decomp.coefficient((50, 0, 0)) == 0j

   def test_support_violation(self, params):
      """Test that data reaching outside the inner cube is rejected"""
      psi = sample_on_cube(lambda x: gamma((0, 0, 3), params, x), params)
      with pytest.raises(SupportViolation):
         decompose(psi, params)

   def test_window_too_small(self, params):
      """Test the tail estimate check"""
      psi = sample_on_cube(lambda x: gamma((0, 0, 3), params, x), params)
      with pytest.raises(WindowTooSmall):
         decompose(psi, params, window=0, check_support=False)

   def test_non_cubic_samples(self, params):
      """Test shape validation"""
      with pytest.raises(ValueError):
         decompose(np.zeros((10, 10, 12)), params)

   def test_scaled_profile(self, params):
      """Test decomposition of compactly supported eps-scale data"""
      profile = Profile(kind=ProfileKind.BUMP)
      psi = sample_on_cube(profile.scaled(params.epsilon), params)
      decomp = decompose(psi, params)

      assert decomp.psi_norm > 0.0
      assert decomp.tail_bound <= decomp.psi_norm
      assert int(decomp.admissible.sum()) > 0

      envelope = coefficient_envelope(decomp)
      assert len(envelope) == int(decomp.admissible.sum())
      assert np.all(np.isfinite(envelope['ratio']))
      assert list(envelope.columns) == ['n1', 'n2', 'n3', 'abs_c', 'envelope', 'ratio']

   def test_reconstruct_and_norm(self, params):
      """Test pointwise reconstruction and the Gram quadratic form"""
      n = (0, 0, 3)
      decomp = single_packet_decomposition(params, n, coeff=2.0)
      x = np.array([[0.01, 0.02, -0.03], [0.0, 0.0, 0.0]])
      assert np.allclose(reconstruct(decomp, x), 2.0 * gamma(n, params, x))
      assert quadratic_norm(decomp, decomp.admissible) == pytest.approx(2.0)
      assert tail_mass(decomp) == 0.0

   def test_parseval(self, params):
      """Test that the Gram form of the coefficients equals the L2 norm by quadrature"""
      a, b = (0, 0, 3), (-1, 2, 2)

      def psi_fn(x):
         return 2.0 * gamma(a, params, x) - 0.5j * gamma(b, params, x)

      decomp = decompose(sample_on_cube(psi_fn, params), params, check_support=False)
      from_coefficients = quadratic_norm(decomp, np.ones_like(decomp.admissible))

      h = params.sigma / 3.0
      axis = np.arange(-24, 25) * h
      x = np.stack(np.meshgrid(axis, axis, axis, indexing='ij'), axis=-1)
      by_quadrature = math.sqrt(h ** 3 * float(np.sum(np.abs(psi_fn(x)) ** 2)))

      assert abs(from_coefficients - by_quadrature) <= 1e-8 * by_quadrature
      assert by_quadrature == pytest.approx(math.sqrt(4.25), rel=1e-10)

   def test_single_packet_outside_shell(self, params):
      """Test that inadmissible indices are rejected"""
      with pytest.raises(WavePacketError):
         single_packet_decomposition(params, (0, 0, 1))


class TestProfiles:
   """Test initial profiles"""

   @pytest.mark.parametrize("kind", [k for k in ProfileKind if k != ProfileKind.FILE])
   def test_support_in_unit_ball(self, kind):
      """Test that every shape vanishes outside the unit ball"""
      profile = Profile(kind=kind)
      outside = np.array([[1.0, 0.0, 0.0], [0.0, 0.8, 0.8], [2.0, 2.0, 2.0]])
      assert np.all(profile(outside) == 0.0)
      assert abs(profile(np.zeros(3))) > 0.0

   def test_smooth_cutoff(self):
      """Test the cutoff plateaus"""
      r = np.array([0.0, 0.5, 1.0, 1.5])
      values = smooth_cutoff(r, 0.5, 1.0)
      assert np.allclose(values, [1.0, 1.0, 0.0, 0.0])

   def test_from_spec_and_momentum(self):
      """Test spec parsing and the carrier phase"""
      profile = Profile.from_spec({'kind': 'gaussian', 'width': 0.2, 'momentum': [0, 0, 3]})
      y = np.array([0.0, 0.0, 0.1])
      value = complex(profile(y))
      assert abs(value) == pytest.approx(math.exp(-0.01 / 0.08))
      assert np.angle(value) == pytest.approx(0.3)

   def test_scaled_center(self):
      """Test psi_eps(x) = eps^(-3/2) psi((x - c) / eps)"""
      profile = Profile(kind=ProfileKind.BUMP)
      psi = profile.halfspace_data(0.1, 0.4)
      assert complex(psi(np.array([0.0, 0.0, 0.4]))) == pytest.approx(0.1 ** -1.5 * complex(profile(np.zeros(3))))

   def test_file_profile(self, tmp_path):
      """Test that a stored profile reproduces its samples and vanishes off its box"""
      bump = Profile(kind=ProfileKind.BUMP)
      grid = Grid.empty((41, 41, 41), 0.05)
      path = tmp_path / "bump.obgf"
      write_field(GridField.sample(grid, bump), path)

      profile = Profile.from_spec({'kind': 'file', 'path': str(path)})
      nodes = grid.centers()[::5, ::7, ::3].reshape(-1, 3)
      assert np.allclose(profile(nodes), bump(nodes), atol=1e-10)
      assert np.all(profile(np.array([[1.5, 0.0, 0.0], [0.0, -2.0, 0.0]])) == 0.0)

      midpoint = np.array([0.025, 0.0, 0.0])
      expected = 0.5 * (bump(np.zeros(3)) + bump(np.array([0.05, 0.0, 0.0])))
      assert complex(profile(midpoint)) == pytest.approx(complex(expected))

   def test_file_profile_momentum(self, tmp_path):
      """Test that the carrier phase multiplies the stored values"""
      grid = Grid.empty((21, 21, 21), 0.1)
      path = tmp_path / "gauss.obgf"
      write_field(GridField.sample(grid, Profile()), path)
      y = np.array([0.2, 0.0, 0.3])
      plain = Profile(kind=ProfileKind.FILE, path=str(path))
      moving = Profile(kind=ProfileKind.FILE, path=str(path), momentum=(0.0, 0.0, 4.0))
      assert complex(moving(y)) == pytest.approx(complex(plain(y)) * np.exp(1.2j))

   def test_file_profile_needs_path(self):
      """Test that a file profile without a path is rejected"""
      with pytest.raises(ValueError):
         Profile.from_spec({'kind': 'file'})
