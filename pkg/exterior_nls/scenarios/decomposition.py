"""
wavepacket-ladder: frame decompositions of psi_eps along the epsilon ladder

The relative reconstruction residual must fall as eps shrinks, every
admissible coefficient must sit under the (sigma eps)^(3/2) L^-3 envelope
and the window tail under ||psi|| [loglog(1/eps)]^(-3/2), both with the
constants frozen by a calibration run. The first rung can also be placed
above the obstacle and assembled into the parametrix.
"""

import math
from typing import List, Optional, Sequence, Tuple

import numpy as np
import pandas as pd

from ..beams import Parametrix, trace_packets
from ..config import DeltaRule, ScenarioKind
from ..models.frame import Decomposition
from ..profiles import Profile
from ..wavepackets import (
   coefficient_envelope, decompose, frame_params, periodization_bound, reconstruct,
   sample_on_cube, tail_mass
)
from .base import BaseScenario, relative_l2


# Calibration book names
COEFFICIENT_ENVELOPE = "coefficient_envelope"
DECOMPOSITION_TAIL = "decomposition_tail"


def decomposition_ladder(profile: Profile, ladder: Sequence[float], rule: DeltaRule,
                         center: Optional[Sequence[float]] = None) -> List[Tuple[float, Decomposition]]:
   """Decompose psi_eps = eps^(-3/2) psi((x - center) / eps) at every rung"""
   rungs = []
   for eps in ladder:
      params = frame_params(eps, rule.delta(eps))
      psi = sample_on_cube(profile.scaled(eps, center), params, center=center)
      rungs.append((eps, decompose(psi, params, center=center)))
   return rungs


def ladder_tables(rungs: List[Tuple[float, Decomposition]]) -> Tuple[pd.DataFrame, pd.DataFrame]:
   """Per-rung summary and the coefficient envelope rows of every rung"""
   rows = []
   envelopes = []
   for eps, decomp in rungs:
      params = decomp.params
      rows.append({
         'epsilon': eps,
         'delta': params.delta,
         'sigma': params.sigma,
         'L': params.L,
         'loglog': params.loglog,
         'window': decomp.window,
         'samples': decomp.samples,
         'admissible': int(decomp.admissible.sum()),
         'psi_norm': decomp.psi_norm,
         'residual_l2': decomp.residual_l2,
         'relative_residual': decomp.residual_l2 / decomp.psi_norm if decomp.psi_norm > 0.0 else 0.0,
         'tail_mass': tail_mass(decomp),
         'tail_bound': decomp.tail_bound,
         'periodization': periodization_bound(params),
      })
      envelope = coefficient_envelope(decomp)
      envelope.insert(0, 'epsilon', eps)
      envelopes.append(envelope)
   return pd.DataFrame(rows), pd.concat(envelopes, ignore_index=True)


def tail_reference(table: pd.DataFrame) -> np.ndarray:
   """||psi|| [loglog(1/eps)]^(-3/2) per rung"""
   return table['psi_norm'].to_numpy() * table['loglog'].to_numpy() ** -1.5


class WavepacketLadderScenario(BaseScenario):
   """Decomposition residual, coefficient envelope and window tail of the configured profile"""

   kind = ScenarioKind.WAVEPACKET_LADDER

   def execute(self) -> None:
      cfg = self.cfg
      profile = Profile.from_spec(cfg.profile.to_dict())
      rungs = decomposition_ladder(profile, cfg.epsilon_ladder, cfg.delta_rule)
      table, coefficients = ladder_tables(rungs)
      for row in table.itertuples():
         self.logger.debug(f"eps={row.epsilon:g}: |S|={row.admissible}, "
                           f"residual={row.relative_residual:.4e}, tail={row.tail_mass:.4e}")

      self.monotone("relative_residual_decreasing", table['relative_residual'])
      self.fitted(COEFFICIENT_ENVELOPE, coefficients['abs_c'].to_numpy(),
                  coefficients['envelope'].to_numpy())
      self.fitted(DECOMPOSITION_TAIL, table['tail_mass'].to_numpy(), tail_reference(table))
      self.result.tables['decomposition'] = table
      self.result.tables['coefficients'] = coefficients

      if cfg.param('parametrix', False):
         self._parametrix(profile)

   def _parametrix(self, profile: Profile) -> None:
      """
      Parametrix of the first rung placed above the obstacle

      The data sit far enough away that every entering packet collides
      after 4 cutoff widths, so at t = 0 the parametrix is the
      reconstruction itself.
      """
      cfg = self.cfg
      eps = cfg.epsilon_ladder[0]
      params = frame_params(eps, cfg.delta_rule.delta(eps))
      body = self.body()
      standoff = float(cfg.param('standoff_sigma_log', 10.0)) * params.sigma * params.log
      center = np.asarray(body.center_hint, dtype=float) + \
         (body.bounding_radius + standoff) * np.array([0.0, 0.0, 1.0])
      _, decomp = decomposition_ladder(profile, [eps], cfg.delta_rule, center=center)[0]

      kappa, clearance = cfg.thresholds_for(eps)
      events = trace_packets(decomp, body, kappa, clearance)
      parametrix = Parametrix(decomp, events)
      counts = parametrix.class_counts()
      self.result.packets = parametrix.packet_table()
      self.result.summary['parametrix'] = {
         'epsilon': eps, 'center': [float(c) for c in center], 'classes': counts,
         'near_grazing_fraction': parametrix.near_grazing_fraction(),
      }
      self.logger.info(f"Parametrix of {len(events)} packets: {counts}")

      points = center + eps * self.rng.uniform(-1.0, 1.0, size=(int(cfg.param('parametrix_samples', 256)), 3))
      initial = parametrix.evaluate(0.0, points, workers=self.settings.parametrix_workers)
      expected = reconstruct(decomp, points)
      self.bound("parametrix_initial_matches_reconstruction", relative_l2(initial, expected), 1e-10)
