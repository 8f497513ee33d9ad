"""
Gaussian frame {gamma_n}, coefficients c_n and reconstruction diagnostics
"""

import logging
import math
from typing import Callable, Optional, Sequence

import numpy as np
import pandas as pd

from .models.frame import FrameParams, Decomposition


logger = logging.getLogger(__name__)


class WavePacketError(Exception):
   """Base exception for frame and decomposition failures"""
   pass


class InvalidScale(WavePacketError):
   """epsilon/delta outside the range where the frame is defined"""
   pass


class SupportViolation(WavePacketError):
   """Sampled data is not supported in the inner half of the cube"""
   pass


class WindowTooSmall(WavePacketError):
   """Index window excludes more than the configured tail budget"""
   pass


EPSILON_LIMIT = math.exp(-math.e)


def frame_params(epsilon: float, delta: float) -> FrameParams:
   """
   Frame scales sigma = sqrt(eps delta) log(1/eps) and L = sigma log log(1/eps)

   Raises:
      InvalidScale: Unless 0 < eps <= delta and eps < e^-e
   """
   if not epsilon > 0.0:
      raise InvalidScale(f"epsilon must be positive, got {epsilon}")
   if delta < epsilon:
      raise InvalidScale(f"delta must be >= epsilon, got delta={delta}, epsilon={epsilon}")
   if epsilon >= EPSILON_LIMIT:
      raise InvalidScale(f"epsilon must be < e^-e = {EPSILON_LIMIT:.6f} so that L > sigma, got {epsilon}")

   log = math.log(1.0 / epsilon)
   sigma = math.sqrt(epsilon * delta) * log
   return FrameParams(epsilon=epsilon, delta=delta, sigma=sigma, L=sigma * math.log(log))


def gamma(n: Sequence[int], params: FrameParams, x: np.ndarray,
          center: Optional[Sequence[float]] = None) -> np.ndarray:
   """Frame element (2 pi sigma^2)^(-3/4) exp(-|x|^2 / 4 sigma^2 + i n.x / L)"""
   x = np.asarray(x, dtype=float)
   if center is not None:
      x = x - np.asarray(center, dtype=float)
   k = np.asarray(n, dtype=float) / params.L
   r2 = np.sum(x * x, axis=-1)
   return (2.0 * math.pi * params.sigma ** 2) ** -0.75 * np.exp(-r2 / (4.0 * params.sigma ** 2) + 1j * (x @ k))


def gram(n: Sequence[int], m: Sequence[int], params: FrameParams) -> float:
   """<gamma_n, gamma_m> = exp(-sigma^2 |n-m|^2 / 2 L^2)"""
   d = np.asarray(n, dtype=float) - np.asarray(m, dtype=float)
   return math.exp(-params.sigma ** 2 * float(d @ d) / (2.0 * params.L ** 2))


def required_samples(params: FrameParams, window: int, points_per_sigma: float = 6.0) -> int:
   """Even cube resolution resolving sigma and the window's shortest wavelength"""
   span = 2.0 * math.pi * params.L
   n = max(
      math.ceil(points_per_sigma * span / params.sigma),
      4 * window,
      2 * window + 2,
   )
   return n + (n % 2)


def cube_axis(params: FrameParams, samples: int) -> np.ndarray:
   """Sample points -pi L + j h, h = 2 pi L / N"""
   h = 2.0 * math.pi * params.L / samples
   return -math.pi * params.L + h * np.arange(samples)


def cube_points(params: FrameParams, samples: int, center: Optional[Sequence[float]] = None) -> np.ndarray:
   """Sample points of the coefficient cube, shape (N, N, N, 3)"""
   x = cube_axis(params, samples)
   X, Y, Z = np.meshgrid(x, x, x, indexing='ij')
   pts = np.stack([X, Y, Z], axis=-1)
   if center is not None:
      pts = pts + np.asarray(center, dtype=float)
   return pts


def sample_on_cube(fn: Callable[[np.ndarray], np.ndarray], params: FrameParams,
                   samples: Optional[int] = None, window: Optional[int] = None,
                   points_per_epsilon: float = 3.0,
                   center: Optional[Sequence[float]] = None) -> np.ndarray:
   """
   Sample fn on the coefficient cube

   The default resolution also puts points_per_epsilon samples per
   epsilon so that eps-scale data is resolved.
   """
   if samples is None:
      w = params.default_window if window is None else window
      n = max(required_samples(params, w),
              math.ceil(points_per_epsilon * 2.0 * math.pi * params.L / params.epsilon))
      samples = n + (n % 2)
   return np.asarray(fn(cube_points(params, samples, center)), dtype=complex)


def _sign_array(window: int) -> np.ndarray:
   r = np.arange(-window, window + 1)
   s = np.where(r % 2 == 0, 1.0, -1.0)
   return s[:, None, None] * s[None, :, None] * s[None, None, :]


def admissible_mask(params: FrameParams, window: int) -> np.ndarray:
   """Indices with 1/(eps loglog) <= |n|/L <= loglog/eps"""
   r = np.arange(-window, window + 1, dtype=float)
   n2 = r[:, None, None] ** 2 + r[None, :, None] ** 2 + r[None, None, :] ** 2
   freq = np.sqrt(n2) / params.L
   return (freq >= params.lower_frequency) & (freq <= params.upper_frequency)


def decompose(psi: np.ndarray, params: FrameParams, window: Optional[int] = None,
              check_support: bool = True, tail_budget: float = 1.0,
              support_tol: float = 1e-12,
              center: Optional[Sequence[float]] = None) -> Decomposition:
   """
   Frame coefficients of psi sampled on the cube [-pi L, pi L]^3

   c_n = (2 pi L)^-3 int psi (2 pi sigma^2)^(3/4) exp(|x|^2/4 sigma^2 - i n.x/L) dx
   by the rectangle rule, which is a DFT of the weighted samples.

   Args:
      psi: Samples of shape (N, N, N) at cube_points(params, N)
      params: Frame scales
      window: Componentwise index bound, defaults to params.default_window
      check_support: Require psi to vanish outside [-pi L/2, pi L/2]^3
      tail_budget: Largest allowed relative tail estimate for excluded indices
      support_tol: Relative size of psi tolerated outside the inner cube
      center: Cube center (packet translation)

   Returns:
      Decomposition

   Raises:
      SupportViolation: If psi is not supported in the inner cube
      WindowTooSmall: If the tail estimate exceeds tail_budget
   """
   psi = np.asarray(psi, dtype=complex)
   samples = psi.shape[0]
   if psi.shape != (samples, samples, samples):
      raise ValueError(f"psi must be sampled on a cubic grid, got shape {psi.shape}")

   w = params.default_window if window is None else int(window)
   if samples < 2 * w + 1:
      raise ValueError(f"{samples} samples per axis cannot carry window {w}")

   x = cube_axis(params, samples)
   h = x[1] - x[0]
   peak = float(np.max(np.abs(psi))) if psi.size else 0.0

   if check_support and peak > 0.0:
      outer = np.abs(x) > 0.5 * math.pi * params.L * (1.0 + 1e-12)
      outside = outer[:, None, None] | outer[None, :, None] | outer[None, None, :]
      leak = float(np.max(np.abs(psi[outside]), initial=0.0))
      if leak > support_tol * peak:
         raise SupportViolation(
            f"psi reaches {leak / peak:.3e} of its peak outside [-pi L/2, pi L/2]^3"
         )

   r2 = x[:, None, None] ** 2 + x[None, :, None] ** 2 + x[None, None, :] ** 2
   envelope = np.exp(-r2 / (4.0 * params.sigma ** 2))
   support = psi != 0.0

   # Weight applied only where psi is nonzero
   weighted = np.zeros_like(psi)
   weighted[support] = psi[support] / envelope[support]
   weighted *= (2.0 * math.pi * params.sigma ** 2) ** 0.75

   spectrum = np.fft.fftn(weighted) / samples ** 3
   idx = np.arange(-w, w + 1) % samples
   coeffs = spectrum[np.ix_(idx, idx, idx)] * _sign_array(w)
   admissible = admissible_mask(params, w)

   psi_norm = math.sqrt(h ** 3 * float(np.sum(np.abs(psi) ** 2)))
   recon = _reconstruct_on_cube(coeffs, admissible, params, samples, envelope)
   residual = math.sqrt(h ** 3 * float(np.sum(np.abs(psi - recon) ** 2)))

   tail = psi_norm * (params.L / (params.epsilon * (w + 1))) ** 1.5
   if psi_norm > 0.0 and tail > tail_budget * psi_norm:
      raise WindowTooSmall(
         f"Window {w} leaves tail estimate {tail / psi_norm:.3f} of ||psi|| (budget {tail_budget})"
      )

   logger.debug(f"Decomposed on {samples}^3 samples: window={w}, |S|={int(admissible.sum())}, "
                f"residual={residual:.3e}")

   return Decomposition(
      params=params,
      window=w,
      coeffs=coeffs,
      admissible=admissible,
      residual_l2=residual,
      tail_bound=tail,
      samples=samples,
      psi_norm=psi_norm,
      center=np.zeros(3) if center is None else np.asarray(center, dtype=float)
   )


def _reconstruct_on_cube(coeffs: np.ndarray, mask: np.ndarray, params: FrameParams,
                         samples: int, envelope: np.ndarray) -> np.ndarray:
   w = (coeffs.shape[0] - 1) // 2
   idx = np.arange(-w, w + 1) % samples
   spectrum = np.zeros((samples,) * 3, dtype=complex)
   spectrum[np.ix_(idx, idx, idx)] = np.where(mask, coeffs, 0.0) * _sign_array(w)
   series = np.fft.ifftn(spectrum) * samples ** 3
   return (2.0 * math.pi * params.sigma ** 2) ** -0.75 * envelope * series


def reconstruct(decomp: Decomposition, x: np.ndarray, mask: Optional[np.ndarray] = None,
                chunk: int = 4096) -> np.ndarray:
   """
   Evaluate sum_n c_n gamma_n(x) over the indices selected by mask

   Args:
      decomp: Decomposition
      x: Points of shape (..., 3)
      mask: Boolean index mask, defaults to the admissible set
   """
   params = decomp.params
   mask = decomp.admissible if mask is None else mask
   C = np.where(mask, decomp.coeffs, 0.0)
   r = np.arange(-decomp.window, decomp.window + 1) / params.L

   x = np.asarray(x, dtype=float) - decomp.center
   flat = x.reshape(-1, 3)
   out = np.empty(flat.shape[0], dtype=complex)
   for start in range(0, flat.shape[0], chunk):
      p = flat[start:start + chunk]
      e1 = np.exp(1j * np.outer(p[:, 0], r))
      e2 = np.exp(1j * np.outer(p[:, 1], r))
      e3 = np.exp(1j * np.outer(p[:, 2], r))
      t = np.einsum('abc,pc->pab', C, e3)
      t = np.einsum('pab,pb->pa', t, e2)
      out[start:start + chunk] = np.einsum('pa,pa->p', t, e1)

   r2 = np.sum(flat * flat, axis=-1)
   out *= (2.0 * math.pi * params.sigma ** 2) ** -0.75 * np.exp(-r2 / (4.0 * params.sigma ** 2))
   return out.reshape(x.shape[:-1])


def gram_matrix_1d(params: FrameParams, window: int) -> np.ndarray:
   r = np.arange(-window, window + 1, dtype=float)
   d = r[:, None] - r[None, :]
   return np.exp(-params.sigma ** 2 * d * d / (2.0 * params.L ** 2))


def quadratic_norm(decomp: Decomposition, mask: np.ndarray) -> float:
   """
   ||sum_{n in mask} c_n gamma_n||_{L2(R^3)} from the Gram quadratic form

   The Gram matrix factors over the three axes, so it is applied one axis
   at a time.
   """
   G = gram_matrix_1d(decomp.params, decomp.window)
   C = np.where(mask, decomp.coeffs, 0.0)
   GC = np.einsum('ia,abc->ibc', G, C)
   GC = np.einsum('jb,ibc->ijc', G, GC)
   GC = np.einsum('kc,ijc->ijk', G, GC)
   value = float(np.real(np.sum(np.conj(C) * GC)))
   return math.sqrt(max(value, 0.0))


def tail_mass(decomp: Decomposition) -> float:
   """L2 norm of the reconstruction from window indices outside S"""
   return quadratic_norm(decomp, ~decomp.admissible)


def single_packet_decomposition(params: FrameParams, n: Sequence[int],
                                center: Optional[Sequence[float]] = None,
                                coeff: complex = 1.0) -> Decomposition:
   """
   Decomposition holding the one packet coeff * gamma_n

   Raises:
      WavePacketError: If n lies outside the admissible shell
   """
   n = tuple(int(k) for k in n)
   w = max(abs(k) for k in n)
   freq = math.sqrt(sum(k * k for k in n)) / params.L
   if not params.lower_frequency <= freq <= params.upper_frequency:
      raise WavePacketError(
         f"|n|/L = {freq:.4g} outside [{params.lower_frequency:.4g}, {params.upper_frequency:.4g}]"
      )
   size = 2 * w + 1
   coeffs = np.zeros((size, size, size), dtype=complex)
   admissible = np.zeros((size, size, size), dtype=bool)
   idx = tuple(k + w for k in n)
   coeffs[idx] = coeff
   admissible[idx] = True
   return Decomposition(
      params=params,
      window=w,
      coeffs=coeffs,
      admissible=admissible,
      residual_l2=0.0,
      tail_bound=0.0,
      psi_norm=abs(coeff),
      center=np.zeros(3) if center is None else np.asarray(center, dtype=float)
   )


def periodization_bound(params: FrameParams) -> float:
   """Leakage e^(-pi^2 L^2 / 4 sigma^2) of the periodized coefficient integral"""
   return params.periodization_leakage


def coefficient_envelope(decomp: Decomposition, k: int = 3) -> pd.DataFrame:
   """
   Compare |c_n| with (sigma eps)^(3/2) L^-3 min{1, (L/(eps |n|))^k}

   Returns:
      DataFrame with one row per admissible index and the ratio column;
      the fitted constant is ratio.max()
   """
   params = decomp.params
   indices = decomp.index_arrays()[decomp.admissible]
   values = np.abs(decomp.coeffs[decomp.admissible])
   norms = np.linalg.norm(indices, axis=-1)

   base = (params.sigma * params.epsilon) ** 1.5 / params.L ** 3
   with np.errstate(divide='ignore'):
      decay = np.where(norms > 0.0, (params.L / (params.epsilon * np.where(norms > 0, norms, 1.0))) ** k, np.inf)
   envelope = base * np.minimum(1.0, decay)

   return pd.DataFrame({
      'n1': indices[:, 0],
      'n2': indices[:, 1],
      'n3': indices[:, 2],
      'abs_c': values,
      'envelope': envelope,
      'ratio': values / envelope,
   })
