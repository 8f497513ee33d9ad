"""
Obstacle scenarios at a bounded distance

beam-reflection: one frame packet sent at the obstacle; the parametrix is
checked against the grid oracle, and the boundary residual of the
reflected beam is followed down the epsilon ladder.

missing-ray: a Gaussian packet passing the obstacle; the obstacle grid
solution must stay at the discretization floor of the free closed form.
"""

import math
from typing import Tuple

import numpy as np
import pandas as pd

from ..beams import (
   Parametrix, boundary_residual_sup, build_reflected, covariance_identities,
   free_packet_eval, gaussian_packet, short_time_scale, time_cutoffs
)
from ..config import ConfigError, ScenarioKind
from ..models.beam import FreePacket
from ..models.body import ConvexBody, ObstacleKind
from ..models.frame import Decomposition, FrameParams
from ..models.grid import GridField
from ..models.ray import RayClass, RayEvent
from ..monitors.conservation import mass, relative_drift
from ..rays import classify, collision_bounds
from ..solvers.gridsolver import free_copy, propagate, rasterize
from ..wavepackets import frame_params, gamma, single_packet_decomposition
from .base import BaseScenario, box_around, relative_l2


class BeamReflectionScenario(BaseScenario):
   """
   Reflection of a single frame packet gamma_n with |n|/L ~ 1/eps

   The packet starts at the origin and moves along e3; the obstacle is
   placed so that the ray meets it after standoff_sigma * sigma.
   """

   kind = ScenarioKind.BEAM_REFLECTION

   def _placed_body(self, standoff: float) -> ConvexBody:
      spec = self.cfg.obstacle.to_dict()
      if spec['kind'] == ObstacleKind.SPHERE.value:
         radius = float(spec['radius'])
         impact = float(self.cfg.param('impact', 0.0))
         if not 0.0 <= impact < 1.0:
            raise ConfigError(f"parameters.impact must lie in [0, 1), got {impact}")
         spec['center'] = [impact * radius, 0.0, standoff + radius * math.sqrt(1.0 - impact ** 2)]
      else:
         spec['center'] = [0.0, 0.0, standoff + float(spec['semi_axes'][2])]
      return ConvexBody.from_spec(spec)

   def _setup(self, eps: float) -> Tuple[FrameParams, ConvexBody, Decomposition, Tuple[int, int, int], RayEvent]:
      cfg = self.cfg
      delta = cfg.delta_rule.delta(eps)
      params = frame_params(eps, delta)
      standoff = float(cfg.param('standoff_sigma', 4.0)) * params.sigma
      body = self._placed_body(standoff)
      n = (0, 0, int(round(params.L / eps)))
      decomp = single_packet_decomposition(params, n)
      kappa, clearance = cfg.thresholds_for(eps)
      event = classify(body, decomp.center, decomp.xi(n), kappa, clearance)
      return params, body, decomp, n, event

   def execute(self) -> None:
      cfg = self.cfg
      samples = int(cfg.param('residual_samples', 200))
      rows = []
      residuals = {}

      for eps in cfg.epsilon_ladder:
         params, body, decomp, n, event = self._setup(eps)
         entering = event.ray_class == RayClass.ENTERING
         self.bound(f"entering_eps_{eps:g}", 0.0 if entering else 1.0, 0.0)
         if not entering:
            self.logger.warning(f"eps={eps}: packet ray is {event.ray_class.value}, skipping rung")
            continue

         packet = FreePacket(params=params, n=n, coeff=1.0, center=decomp.center)
         beam = build_reflected(packet, event)
         res = boundary_residual_sup(packet, beam, params, samples=samples, seed=int(cfg.seed))
         ids = covariance_identities(beam)
         reach = collision_bounds(event, params.delta)
         peak = abs(complex(free_packet_eval(packet, beam.t_c, beam.x_c)))

         self.bound(f"collision_identity_eps_{eps:g}", res['at_collision'] / peak, 1e-10)
         self.bound(f"lambda_product_eps_{eps:g}", ids['product_error'], 1e-10)
         self.bound(f"null_direction_eps_{eps:g}", ids['null_error'], 1e-10)

         residuals[eps] = res['sup']
         rows.append({
            'epsilon': eps,
            'delta': params.delta,
            'sigma': params.sigma,
            'L': params.L,
            'n3': n[2],
            't_c': beam.t_c,
            'incidence': event.incidence,
            'R1': event.frame.R1,
            'R2': event.frame.R2,
            'residual_sup': res['sup'],
            'residual_sup_scaled': res['sup_scaled'],
            'residual_at_collision': res['at_collision'],
            'short_time_scale': short_time_scale(params),
            'reach_over_delta': reach['reach_over_delta'],
            'product_error': ids['product_error'],
            'sum_error': ids['sum_error'],
         })

      ladder = pd.DataFrame(rows)
      self.result.tables['residual_ladder'] = ladder
      if len(ladder) > 1:
         self.monotone("boundary_residual_decreasing", ladder['residual_sup_scaled'].tolist())

      grid_eps = float(cfg.param('grid_epsilon', cfg.epsilon_ladder[0]))
      if cfg.param('grid_run', True):
         self._grid_comparison(grid_eps, residuals.get(grid_eps, math.nan))

   def _grid_comparison(self, eps: float, residual_sup: float) -> None:
      """Parametrix against the grid oracle, with an obstacle-free control run"""
      cfg = self.cfg
      run = self.logger.child(epsilon=eps)
      params, body, decomp, n, event = self._setup(eps)
      if event.ray_class != RayClass.ENTERING:
         return

      parametrix = Parametrix(decomp, {n: event})
      packet = FreePacket(params=params, n=n, coeff=1.0, center=decomp.center)
      xi = decomp.xi(n)
      h = self.spacing_for(params.sigma)

      grid = rasterize(body, cfg.grid.dims, h,
                       origin=self.empty_grid(h, center=0.5 * event.x_c).origin, allow_contact=True)
      control = free_copy(grid)

      t_c = float(event.t_c)
      t_end = float(cfg.param('compare_time_factor', 2.0)) * t_c
      dt = self.time_step(0.1 / float(xi @ xi))
      steps = max(int(math.ceil(t_end / dt)), 1)
      dt = t_end / steps

      def initial(x: np.ndarray) -> np.ndarray:
         return gamma(n, params, x, center=decomp.center)

      run.info(f"t_c={t_c:.4e}, comparing at t={t_end:.4e} with {steps} steps of {dt:.3e}, h={h:.4g}")

      # Short-time window
      T = short_time_scale(params)
      short_steps = max(int(math.ceil(T / dt)), 1)
      short_obs, _ = propagate(GridField.sample(grid, initial), T / short_steps, short_steps,
                               settings=self.settings, keep_snapshots=False, run_logger=run)
      short_free, _ = propagate(GridField.sample(control, initial), T / short_steps, short_steps,
                                settings=self.settings, keep_snapshots=False, run_logger=run)
      exact_T = free_packet_eval(packet, T, grid.centers())
      short_rel = relative_l2(short_obs.values, exact_T, where=grid.active)
      short_floor = relative_l2(short_free.values, exact_T)
      self.bound("short_time_free_agreement", short_rel, max(0.05, 2.0 * short_floor))

      # Full comparison
      obs_final, obs_trace = propagate(GridField.sample(grid, initial), dt, steps, scalars={'mass': mass},
                                       record_every=int(cfg.time.record_every),
                                       settings=self.settings, keep_snapshots=False, run_logger=run)
      free_final, free_trace = propagate(GridField.sample(control, initial), dt, steps,
                                         record_every=int(cfg.time.record_every),
                                         settings=self.settings, keep_snapshots=False, run_logger=run)

      x = grid.centers()
      approx = parametrix.evaluate(t_end, x, workers=int(self.settings.parametrix_workers))
      approx[grid.mask] = 0.0
      rel = relative_l2(obs_final.values, approx, where=grid.active)
      floor = relative_l2(free_final.values, free_packet_eval(packet, t_end, x))
      self.bound("parametrix_vs_grid", rel, max(0.05, 2.0 * floor))

      self.bound("mass_drift_grid", relative_drift(obs_trace.scalars['mass']), 1e-10 * steps)
      self.flag_boundary_mass(obs_trace.scalars['boundary_mass'], "obstacle_run")
      self.flag_boundary_mass(free_trace.scalars['boundary_mass'], "control_run")

      chi_u, chi_v = time_cutoffs(event, params)
      self.result.scalars = obs_trace.to_dataframe()
      self.result.fields['grid_final'] = obs_final
      self.result.fields['parametrix_final'] = GridField(grid=grid, values=approx, time=t_end)

      packets = parametrix.packet_table()
      packets['residual_sup'] = residual_sup
      self.result.packets = packets
      self.result.summary['grid_comparison'] = {
         'epsilon': eps,
         'spacing': h,
         'dims': list(grid.dims),
         'steps': steps,
         'dt': dt,
         't_c': t_c,
         't_compare': t_end,
         'chi_u': float(chi_u(t_end)),
         'chi_v': float(chi_v(t_end)),
         'relative_l2': rel,
         'discretization_floor': floor,
         'short_time_scale': T,
         'short_time_relative_l2': short_rel,
         'short_time_floor': short_floor,
         'near_grazing_fraction': parametrix.near_grazing_fraction(),
      }


class MissingRayScenario(BaseScenario):
   """
   Gaussian packet moving along e3 past a sphere at the side of its path

   Geometry in units of sigma: radius radius_sigma, gap gap_sigma between
   the path and the sphere, sphere center at height z0_sigma.
   """

   kind = ScenarioKind.MISSING_RAY

   def execute(self) -> None:
      cfg = self.cfg
      eps = float(cfg.param('epsilon', cfg.epsilon_ladder[0]))
      sigma = cfg.profile.width * eps
      run = self.logger.child(epsilon=eps)

      xi = np.array([0.0, 0.0, float(cfg.param('xi_sigma', 2.0)) / sigma])
      radius = float(cfg.param('radius_sigma', 3.0)) * sigma
      gap = float(cfg.param('gap_sigma', 6.0)) * sigma
      z0 = float(cfg.param('z0_sigma', 2.0)) * sigma
      body = ConvexBody.sphere((radius + gap, 0.0, z0), radius)
      packet = gaussian_packet(sigma, xi)

      kappa, clearance = cfg.thresholds_for(eps)
      event = classify(body, packet.center, xi, kappa, clearance)
      self.result.summary['ray'] = {k: v for k, v in event.diagnostics.items()
                                    if isinstance(v, (int, float, bool))}
      self.bound("ray_is_missing", 0.0 if event.ray_class == RayClass.MISSING else 1.0, 0.0)

      horizon = float(cfg.time.horizon) if cfg.time.horizon is not None else \
         float(cfg.param('horizon_sigma2', 3.0)) * sigma ** 2
      h = self.spacing_for(sigma)
      spread = math.sqrt(sigma ** 4 + horizon ** 2) / sigma
      end = 2.0 * horizon * xi
      reach = 4.0 * spread
      pad = (int(cfg.grid.margin_cells) + 2) * h
      lower = np.minimum(np.minimum(0.0, end) - reach, body.center_hint - radius - pad)
      upper = np.maximum(np.maximum(0.0, end) + reach, body.center_hint + radius + pad)
      box = box_around(lower, upper, h)

      grid = rasterize(body, box['dims'], h, origin=box['origin'], margin_cells=int(cfg.grid.margin_cells))
      control = free_copy(grid)

      dt = self.time_step(min(0.1 / float(xi @ xi), sigma ** 2 / 20.0))
      steps = max(int(math.ceil(horizon / dt)), 1)
      dt = horizon / steps
      run.info(f"dims={list(grid.dims)} h={h:.4g} steps={steps}")

      def initial(x: np.ndarray) -> np.ndarray:
         return free_packet_eval(packet, 0.0, x)

      obs_final, obs_trace = propagate(GridField.sample(grid, initial), dt, steps, scalars={'mass': mass},
                                       record_every=int(cfg.time.record_every),
                                       settings=self.settings, keep_snapshots=False, run_logger=run)
      free_final, free_trace = propagate(GridField.sample(control, initial), dt, steps,
                                         record_every=int(cfg.time.record_every),
                                         settings=self.settings, keep_snapshots=False, run_logger=run)

      exact = free_packet_eval(packet, horizon, grid.centers())
      e_obs = relative_l2(obs_final.values, exact)
      e_free = relative_l2(free_final.values, exact)
      self.bound("missing_ray_at_floor", e_obs, 2.0 * e_free)
      self.bound("mass_drift_grid", relative_drift(obs_trace.scalars['mass']), 1e-10 * steps)
      self.flag_boundary_mass(obs_trace.scalars['boundary_mass'], "obstacle_run")
      self.flag_boundary_mass(free_trace.scalars['boundary_mass'], "control_run")

      self.result.scalars = obs_trace.to_dataframe()
      self.result.fields['grid_final'] = obs_final
      self.result.summary['comparison'] = {
         'epsilon': eps,
         'sigma': sigma,
         'spacing': h,
         'dims': list(grid.dims),
         'steps': steps,
         'obstacle_error': e_obs,
         'free_error': e_free,
         'class': event.ray_class.value,
      }
