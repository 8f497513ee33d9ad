"""
Halfspace scenarios

halfspace-vs-free: closed-form difference between the halfspace and free
evolutions of data at height delta as delta/eps grows.

obstacle-vs-halfspace: grid solve next to a large obstacle whose top
touches {x3 = 0}, against the same discretization of the halfspace.
"""

import math
from typing import Dict, List

import numpy as np
import pandas as pd

from ..beams import free_packet_eval, gaussian_packet, halfspace_eval
from ..config import ConfigError, ScenarioKind
from ..models.body import ConvexBody
from ..models.grid import Grid, GridField
from ..models.trace import RunTrace
from ..monitors.conservation import mass, relative_drift
from ..monitors.strichartz import gaussian_strichartz_norm, strichartz_norm
from ..solvers.gridsolver import halfspace_grid, propagate, rasterize
from .base import BaseScenario, relative_l2


STRICHARTZ_PAIR = (10.0 / 3.0, 10.0 / 3.0)


def _momentum(cfg, epsilon: float) -> np.ndarray:
   """Carrier momentum of psi((x - x0) / eps)"""
   return np.asarray(cfg.profile.momentum, dtype=float) / epsilon


class HalfspaceVsFreeScenario(BaseScenario):
   """
   ||e^{it Delta_H} psi - e^{it Delta} psi||_{L^q_t L^r_x} for Gaussian psi
   of width sigma = width * eps centered at delta e3

   The difference is -u(t, xbar) on {x3 > 0} and -u(t, x) below, so its
   L^r power is twice the mass of |u|^r below the plane, which erfc gives
   in closed form. One rung is cross-checked by sampling the difference
   on grids that follow the spreading packet.
   """

   kind = ScenarioKind.HALFSPACE_VS_FREE

   def execute(self) -> None:
      cfg = self.cfg
      ratios = [float(r) for r in cfg.param('ratios', [4.0, 16.0, 64.0])]
      if any(b <= a for a, b in zip(ratios, ratios[1:])):
         raise ConfigError(f"parameters.ratios must be strictly increasing: {ratios}")
      horizon_sigma2 = float(cfg.param('horizon_sigma2', 10.0))
      q, r = (float(v) for v in cfg.param('exponents', STRICHARTZ_PAIR))

      rows = []
      by_ratio: Dict[float, List[float]] = {ratio: [] for ratio in ratios}
      for eps in cfg.epsilon_ladder:
         sigma = cfg.profile.width * eps
         xi = _momentum(cfg, eps)
         horizon = float(cfg.time.horizon) if cfg.time.horizon is not None else horizon_sigma2 * sigma ** 2
         free = gaussian_strichartz_norm(sigma, q, r, horizon)

         norms = []
         for ratio in ratios:
            delta = ratio * eps
            half = gaussian_strichartz_norm(sigma, q, r, horizon, center3=delta, xi3=float(xi[2]))
            total = 2.0 ** (1.0 / r) * half
            unbounded = 2.0 ** (1.0 / r) * gaussian_strichartz_norm(
               sigma, q, r, math.inf, center3=delta, xi3=float(xi[2]))
            norms.append(total)
            by_ratio[ratio].append(total)
            rows.append({
               'epsilon': eps,
               'ratio': ratio,
               'delta': delta,
               'sigma': sigma,
               'horizon': horizon,
               'difference_norm': total,
               'difference_norm_all_time': unbounded,
               'free_norm': free,
               'relative': total / free if free > 0.0 else math.nan,
            })
            self.logger.debug(f"eps={eps} delta/eps={ratio}: difference norm {total:.6e}")

         self.monotone(f"difference_decreasing_eps_{eps:g}", norms)

      # Invariance of L^{10/3}_{t,x} under parabolic rescaling
      if len(cfg.epsilon_ladder) > 1 and horizon_sigma2 and cfg.time.horizon is None:
         for ratio, values in by_ratio.items():
            v = np.asarray(values)
            spread = float(np.max(np.abs(v - v[0])) / v[0]) if v[0] > 0.0 else 0.0
            self.bound(f"scale_invariance_ratio_{ratio:g}", spread, 1e-6)

      self.result.tables['ladder'] = pd.DataFrame(rows)

      if cfg.param('grid_check', True):
         self._grid_cross_check(ratios[0], q, r, horizon_sigma2)
      if cfg.monitors.local_smoothing:
         self._local_smoothing(ratios[0])

   def _local_smoothing(self, ratio: float) -> None:
      """
      Local smoothing of the closed-form halfspace solution on the first rung

      One box covers the incident and reflected packet over a short
      horizon; probes sit on the mirrored packet path with radii in units
      of sigma.
      """
      cfg = self.cfg
      eps = cfg.epsilon_ladder[0]
      sigma = cfg.profile.width * eps
      xi = _momentum(cfg, eps)
      delta = ratio * eps
      packet = gaussian_packet(sigma, xi, center=(0.0, 0.0, delta))
      horizon = float(cfg.param('smoothing_horizon_sigma2', 2.0)) * sigma ** 2

      speed = float(np.linalg.norm(xi))
      h = min(sigma, 1.0 / speed if speed > 0.0 else sigma) / float(cfg.param('smoothing_points', 2.0))
      reach = float(cfg.param('box_spreads', 3.0)) * math.sqrt(sigma ** 4 + horizon ** 2) / sigma
      lateral = 2.0 * horizon * np.abs(xi[:2])
      top = max(delta, abs(delta + 2.0 * horizon * xi[2])) + reach
      lower = np.array([-lateral[0] - reach, -lateral[1] - reach, -2.0 * h])
      upper = np.array([lateral[0] + reach, lateral[1] + reach, top])
      dims = [int(math.ceil((u - l) / h)) + 1 for l, u in zip(lower, upper)]
      grid = Grid.empty(dims, h, lower)

      def solution(t: float, x: np.ndarray) -> np.ndarray:
         return np.where(x[..., 2] > 0.0, halfspace_eval(packet, packet.center, t, x), 0.0)

      times = np.linspace(0.0, horizon, int(cfg.param('smoothing_snapshots', 17)))
      trace = RunTrace.from_evaluator(grid, solution, times)
      self.logger.debug(f"Local smoothing on {dims} cells, h={h:.4g}, {len(times)} snapshots")
      path = packet.center + 2.0 * times[:, None] * xi
      path[:, 2] = np.abs(path[:, 2])
      self.local_smoothing_checks(trace, path, sigma)

   def _grid_cross_check(self, ratio: float, q: float, r: float, horizon_sigma2: float) -> None:
      """Sampled difference norm on packet-following grids for one rung"""
      cfg = self.cfg
      eps = cfg.epsilon_ladder[0]
      sigma = cfg.profile.width * eps
      xi = _momentum(cfg, eps)
      delta = ratio * eps
      horizon = float(cfg.time.horizon) if cfg.time.horizon is not None else horizon_sigma2 * sigma ** 2
      cells = int(cfg.param('check_cells', 48))
      cells += cells % 2
      packet = gaussian_packet(sigma, xi, center=(0.0, 0.0, delta))

      def grid_for(t: float) -> Grid:
         spread = math.sqrt(sigma ** 4 + t * t) / sigma
         h = 12.0 * spread / cells
         lateral = 2.0 * t * xi[:2]
         origin = np.array([
            lateral[0] - 0.5 * h * (cells - 1),
            lateral[1] - 0.5 * h * (cells - 1),
            -0.5 * h * (cells - 1),
         ])
         return Grid.empty((cells, cells, cells), h, origin)

      def difference(t: float, x: np.ndarray) -> np.ndarray:
         mirror = x * np.array([1.0, 1.0, -1.0])
         below = free_packet_eval(packet, t, x)
         above = free_packet_eval(packet, t, mirror)
         return -np.where(x[..., 2] > 0.0, above, below)

      stride = sigma ** 2 / 20.0
      count = max(int(math.ceil(horizon / stride)), 2) + 1
      times = np.linspace(0.0, horizon, count)
      trace = RunTrace.from_adaptive_evaluator(grid_for, difference, times)
      sampled = strichartz_norm(trace, q, r)
      exact = 2.0 ** (1.0 / r) * gaussian_strichartz_norm(sigma, q, r, horizon, center3=delta, xi3=float(xi[2]))

      error = abs(sampled - exact) / exact if exact > 0.0 else 0.0
      self.result.summary['grid_check'] = {
         'epsilon': eps, 'ratio': ratio, 'sampled': sampled, 'semi_analytic': exact,
         'relative_error': error, 'snapshots': count,
      }
      self.bound("grid_vs_semi_analytic", error, float(cfg.param('grid_tolerance', 0.05)))


class ObstacleVsHalfspaceScenario(BaseScenario):
   """
   Obstacle touching {x3 = 0} from below against the halfspace

   Both runs share the box, spacing and initial data, so their difference
   isolates the curvature of the obstacle as seen at the packet scale.
   """

   kind = ScenarioKind.OBSTACLE_VS_HALFSPACE

   def _touching_body(self) -> ConvexBody:
      spec = self.cfg.obstacle.to_dict()
      top = spec['radius'] if spec['kind'] == 'sphere' else spec['semi_axes'][2]
      spec['center'] = [0.0, 0.0, -float(top)]
      return ConvexBody.from_spec(spec)

   def execute(self) -> None:
      cfg = self.cfg
      body = self._touching_body()
      horizon_sigma2 = float(cfg.param('horizon_sigma2', 3.0))
      xi_sigma = float(cfg.param('xi_sigma', 1.5))
      plane_index = int(cfg.param('plane_index', 4))

      rows = []
      distances = []
      for eps in cfg.epsilon_ladder:
         run = self.logger.child(epsilon=eps)
         delta = cfg.delta_rule.delta(eps)
         sigma = cfg.profile.width * eps
         xi = _momentum(cfg, eps)
         if not np.any(xi):
            xi = np.array([0.0, 0.0, -xi_sigma / sigma])
         packet = gaussian_packet(sigma, xi, center=(0.0, 0.0, delta))

         h = self.spacing_for(sigma)
         half = halfspace_grid(cfg.grid.dims, h, plane_index=plane_index)
         obstacle = rasterize(body, cfg.grid.dims, h, origin=half.origin, allow_contact=True)

         def initial(x: np.ndarray) -> np.ndarray:
            return halfspace_eval(packet, packet.center, 0.0, x)

         speed2 = float(xi @ xi)
         dt = self.time_step(min(0.1 / speed2, sigma ** 2 / 20.0) if speed2 > 0.0 else sigma ** 2 / 20.0)
         horizon = float(cfg.time.horizon) if cfg.time.horizon is not None else horizon_sigma2 * sigma ** 2
         steps = max(int(math.ceil(horizon / dt)), 1)
         dt = horizon / steps

         run.info(f"delta={delta:.4g} sigma={sigma:.4g} h={h:.4g} steps={steps}")
         scalars = {'mass': mass}
         half_final, half_trace = propagate(GridField.sample(half, initial), dt, steps,
                                            record_every=int(cfg.time.record_every), scalars=scalars,
                                            settings=self.settings, keep_snapshots=False, run_logger=run)
         obs_final, obs_trace = propagate(GridField.sample(obstacle, initial), dt, steps,
                                          record_every=int(cfg.time.record_every), scalars=scalars,
                                          settings=self.settings, keep_snapshots=False, run_logger=run)

         distance = relative_l2(obs_final.values, half_final.values)
         exact_half = GridField.sample(half, lambda x: halfspace_eval(packet, packet.center, horizon, x))
         exact_obs = GridField.sample(obstacle, lambda x: halfspace_eval(packet, packet.center, horizon, x))
         floor = relative_l2(half_final.values, exact_half.values)
         closed = relative_l2(obs_final.values, exact_obs.values)
         distances.append(distance)

         for label, trace in (('halfspace', half_trace), ('obstacle', obs_trace)):
            drift = relative_drift(trace.scalars['mass'])
            self.bound(f"mass_drift_{label}_eps_{eps:g}", drift, 1e-10 * steps)
            self.flag_boundary_mass(trace.scalars['boundary_mass'], f"{label}_eps_{eps:g}")

         rows.append({
            'epsilon': eps,
            'delta': delta,
            'sigma': sigma,
            'spacing': h,
            'steps': steps,
            'dt': dt,
            'obstacle_vs_halfspace_grid': distance,
            'obstacle_vs_closed_form': closed,
            'halfspace_grid_vs_closed_form': floor,
            'masked_difference_cells': int(np.sum(obstacle.mask != half.mask)),
         })
         self.result.fields['obstacle_final'] = obs_final

      self.result.tables['ladder'] = pd.DataFrame(rows)
      self.monotone("obstacle_vs_halfspace_decreasing", distances)
