"""
Tests for the built-in scenarios and the scenario runner
"""

import math
import os

import pandas as pd
import pytest
import yaml

from exterior_nls.config import ConfigError, ScenarioConfig
from exterior_nls.models.ray import RayClass
from exterior_nls.monitors.envelopes import ConstantBook
from exterior_nls.scenario_runner import (
   CALIBRATION_FILE, ScenarioRunner, calibration_path, run_many, run_scenario
)
from exterior_nls.scenarios import (
   BeamReflectionScenario, CalibrationScenario, GreenLadderScenario, HalfspaceVsFreeScenario,
   NLSMorawetzScenario, WavepacketLadderScenario, scenario_class
)


NLS_DATA = {
   'obstacle': {'kind': 'sphere', 'radius': 0.5},
   'profile': {'kind': 'gaussian', 'width': 0.2, 'momentum': [0.0, 0.0, -8.0]},
   'grid': {'points_per_sigma': 2},
   'time': {'horizon': 0.01},
}


def _config(data):
   cfg = ScenarioConfig.from_dict(data)
   cfg.validate()
   return cfg


def _nls_config(name, kind, **parameters):
   return _config(dict(NLS_DATA, name=name, kind=kind,
                       parameters=dict({'box_spreads': 2.0, 'smoothing_probes': 6}, **parameters)))


def _heat_calibration():
   return _config({
      'name': 'calibration',
      'kind': 'calibration',
      'obstacle': {'kind': 'sphere', 'radius': 0.5},
      'grid': {'dims': [48, 48, 48]},
      'parameters': {'fit': ['heat_envelope'], 'heat_spacing': 0.1, 'margin': 2.0},
   })


def _smoothing_halfspace(name):
   return _config({
      'name': name,
      'kind': 'halfspace-vs-free',
      'epsilon_ladder': [0.05],
      'profile': {'kind': 'gaussian', 'width': 1.0, 'momentum': [0.0, 0.0, -2.0]},
      'parameters': {'ratios': [4.0, 16.0], 'grid_check': False, 'smoothing_probes': 6},
   })


@pytest.fixture
def halfspace_cfg():
   return _config({
      'name': 'halfspace',
      'kind': 'halfspace-vs-free',
      'epsilon_ladder': [0.05, 0.03],
      'profile': {'kind': 'gaussian', 'width': 1.0, 'momentum': [0.0, 0.0, -2.0]},
      'parameters': {'ratios': [4.0, 16.0, 64.0], 'grid_check': False},
      'monitors': {'local_smoothing': False},
   })


@pytest.fixture
def green_cfg():
   return _config({
      'name': 'green',
      'kind': 'green-ladder',
      'obstacle': {'kind': 'sphere', 'radius': 0.5},
      'grid': {'dims': [48, 48, 48], 'spacing': 0.1},
      'parameters': {'energies': [-1.5], 'heat_scales': [1.0]},
   })


def _checks(result):
   return {c.name: c for c in result.checks}


class TestRegistry:
   """Test kind lookup"""

   def test_known_kinds(self):
      """Test the class behind each kind"""
      assert scenario_class('halfspace-vs-free') is HalfspaceVsFreeScenario
      assert scenario_class('green-ladder') is GreenLadderScenario
      assert scenario_class('wavepacket-ladder') is WavepacketLadderScenario
      assert scenario_class('calibration') is CalibrationScenario

   def test_unknown_kind(self):
      """Test rejection of unknown kinds"""
      with pytest.raises(ConfigError):
         scenario_class('wave-equation')


class TestHalfspaceVsFree:
   """Test the closed-form halfspace ladder"""

   def test_ladder(self, halfspace_cfg):
      """Test monotone decay in delta/eps and scale invariance"""
      result = HalfspaceVsFreeScenario(halfspace_cfg).run()
      checks = _checks(result)
      assert checks['difference_decreasing_eps_0.05'].passed
      assert checks['difference_decreasing_eps_0.03'].passed
      assert checks['scale_invariance_ratio_4'].passed
      assert result.passed

      ladder = result.tables['ladder']
      assert len(ladder) == 6
      assert (ladder['difference_norm'] <= ladder['difference_norm_all_time'] * (1.0 + 1e-9)).all()

   def test_ratios_must_increase(self, halfspace_cfg):
      """Test rejection of an unordered ratio list"""
      halfspace_cfg.parameters['ratios'] = [16.0, 4.0]
      with pytest.raises(ConfigError):
         HalfspaceVsFreeScenario(halfspace_cfg).run()

   def test_local_smoothing_uses_book(self):
      """Test that local smoothing is judged against the frozen constant only"""
      checks = _checks(HalfspaceVsFreeScenario(_smoothing_halfspace('smoothing')).run())
      assert not checks['local_smoothing'].passed
      assert math.isnan(checks['local_smoothing'].fitted_constant)

      book = ConstantBook()
      book.freeze('local_smoothing', 1e3)
      result = HalfspaceVsFreeScenario(_smoothing_halfspace('smoothing'), book=book).run()
      checks = _checks(result)
      assert checks['local_smoothing'].passed
      assert checks['local_smoothing'].fitted_constant == 1e3
      assert checks['local_smoothing_translation'].passed
      assert len(result.tables['local_smoothing']) == 6
      assert len(result.tables['local_smoothing_translated']) == 6

      book.freeze('local_smoothing', 1e-9)
      checks = _checks(HalfspaceVsFreeScenario(_smoothing_halfspace('smoothing'), book=book).run())
      assert not checks['local_smoothing'].passed


class TestGreenLadder:
   """Test the resolvent ladder"""

   def test_sandwich_and_ladder(self, green_cfg):
      """Test 0 <= G_obstacle <= G_free and the shrinking-obstacle ladder"""
      book = ConstantBook()
      calibration = CalibrationScenario(_heat_calibration(), book=book).run()
      assert _checks(calibration)['heat_envelope_fit'].passed

      result = GreenLadderScenario(green_cfg, book=book).run()
      checks = _checks(result)
      for name, check in checks.items():
         if name.startswith(('sandwich', 'ladder', 'heat_envelope')):
            assert check.passed, name
      assert 'heat_envelope_scale_1' in checks
      assert len(result.tables['ladder']) == 3
      image = result.tables['halfspace_image']
      assert (image['relative_error'] < 0.1).all()
      assert result.summary['heat_envelope']['1']['c'] > 0.0

   def test_uncalibrated_heat_envelope_fails(self, green_cfg):
      """Test that a missing prefactor fails instead of being fitted"""
      checks = _checks(GreenLadderScenario(green_cfg).run())
      assert not checks['heat_envelope_scale_1'].passed
      assert math.isnan(checks['heat_envelope_scale_1'].fitted_constant)


class TestBeamReflection:
   """Test the reflection ladder without the grid run"""

   def test_setup_places_obstacle_ahead(self):
      """Test that the single packet enters the obstacle"""
      cfg = _config({
         'name': 'beam',
         'kind': 'beam-reflection',
         'obstacle': {'kind': 'sphere', 'radius': 1.0},
         'parameters': {'grid_run': False},
      })
      params, body, decomp, n, event = BeamReflectionScenario(cfg)._setup(0.05)
      assert n[0] == 0 and n[1] == 0
      assert event.ray_class == RayClass.ENTERING
      assert event.t_c > 0.0
      assert body.center_hint[2] > params.sigma

   def test_residual_ladder(self):
      """Test the collision identity and covariance algebra down the ladder"""
      cfg = _config({
         'name': 'beam',
         'kind': 'beam-reflection',
         'epsilon_ladder': [0.05, 0.03],
         'obstacle': {'kind': 'sphere', 'radius': 1.0},
         'parameters': {'grid_run': False, 'residual_samples': 40, 'impact': 0.3},
      })
      result = BeamReflectionScenario(cfg).run()
      checks = _checks(result)
      for eps in ('0.05', '0.03'):
         assert checks[f'entering_eps_{eps}'].passed
         assert checks[f'collision_identity_eps_{eps}'].passed
         assert checks[f'lambda_product_eps_{eps}'].passed
      assert list(result.tables['residual_ladder']['epsilon']) == [0.05, 0.03]
      assert 'grid_final' not in result.fields


class TestNLSMorawetz:
   """Test a short defocusing run against calibrated constants"""

   def test_calibrated_run(self):
      """Test recorded scalars, the Morawetz sign and both fitted bounds"""
      book = ConstantBook()
      calibration = CalibrationScenario(
         _nls_config('calibration', 'calibration', fit=['morawetz', 'local_smoothing'], margin=3.0),
         book=book).run()
      assert _checks(calibration)['morawetz_fit'].passed
      assert _checks(calibration)['local_smoothing_fit'].passed
      assert {'morawetz', 'local_smoothing'} <= set(calibration.summary['constants'])

      result = NLSMorawetzScenario(_nls_config('nls', 'nls-morawetz'), book=book).run()
      checks = _checks(result)
      assert checks['mass_drift_per_step'].passed
      assert checks['potential_term_nonnegative'].passed
      assert checks['morawetz'].passed
      assert checks['local_smoothing'].passed
      assert checks['local_smoothing_translation'].passed
      assert checks['morawetz'].fitted_constant == book.get('morawetz')
      assert {'t', 'mass', 'energy', 'F', 'potential_term'} <= set(result.scalars.columns)
      assert len(result.tables['local_smoothing']) == 6
      assert result.summary['scattering_size'] > 0.0

   def test_uncalibrated_run_fails(self):
      """Test that the Morawetz bound never fits its own constant"""
      checks = _checks(NLSMorawetzScenario(_nls_config('nls', 'nls-morawetz')).run())
      assert not checks['morawetz'].passed
      assert math.isnan(checks['morawetz'].fitted_constant)
      assert checks['potential_term_nonnegative'].passed

   def test_small_constant_fails(self):
      """Test that a frozen constant below the measured ratio fails"""
      book = ConstantBook()
      book.freeze('morawetz', 1e-12)
      book.freeze('local_smoothing', 1e-12)
      checks = _checks(NLSMorawetzScenario(_nls_config('nls', 'nls-morawetz'), book=book).run())
      assert not checks['morawetz'].passed
      assert not checks['local_smoothing'].passed


class TestCalibration:
   """Test the reference runs that freeze constants"""

   def test_unknown_part(self):
      """Test rejection of parts that have no reference run"""
      cfg = _nls_config('calibration', 'calibration', fit=['strichartz'])
      with pytest.raises(ConfigError):
         CalibrationScenario(cfg).run()

   def test_margin_applies(self):
      """Test that the frozen constant is margin times the largest ratio"""
      book = ConstantBook()
      result = CalibrationScenario(
         _nls_config('calibration', 'calibration', fit=['morawetz'], margin=2.0), book=book).run()
      table = result.tables['morawetz']
      assert book.get('morawetz') == pytest.approx(2.0 * float((table['lhs'] / table['rhs']).max()))
      assert result.summary['constants'] == {'morawetz': book.get('morawetz')}


class TestWavepacketLadder:
   """Test decompositions down the epsilon ladder"""

   @staticmethod
   def _ladder_config(**parameters):
      return _config({
         'name': 'ladder',
         'kind': 'wavepacket-ladder',
         'epsilon_ladder': [0.05, 0.03],
         'obstacle': {'kind': 'sphere', 'radius': 1.0},
         'profile': {'kind': 'bump'},
         'parameters': parameters,
      })

   def test_calibrated_ladder(self):
      """Test residual decay, the coefficient envelope, the tail and the parametrix at t = 0"""
      book = ConstantBook()
      CalibrationScenario(_config({
         'name': 'calibration',
         'kind': 'calibration',
         'epsilon_ladder': [0.05, 0.03],
         'parameters': {'fit': ['coefficient_envelope'], 'decomposition_profile': {'kind': 'bump'}},
      }), book=book).run()
      assert book.get('coefficient_envelope') is not None
      assert book.get('decomposition_tail') is not None

      result = WavepacketLadderScenario(
         self._ladder_config(parametrix=True, parametrix_samples=64), book=book).run()
      checks = _checks(result)
      for name in ('relative_residual_decreasing', 'coefficient_envelope', 'decomposition_tail',
                   'parametrix_initial_matches_reconstruction'):
         assert checks[name].passed, name
      assert list(result.tables['decomposition']['epsilon']) == [0.05, 0.03]
      assert result.packets is not None and len(result.packets) > 0

   def test_uncalibrated_envelope_fails(self):
      """Test that the envelope needs a frozen constant"""
      checks = _checks(WavepacketLadderScenario(self._ladder_config()).run())
      assert checks['relative_residual_decreasing'].passed
      assert not checks['coefficient_envelope'].passed


class TestRunner:
   """Test running and writing scenarios"""

   def test_writes_results(self, halfspace_cfg, tmp_path):
      """Test the result directory and CLI-style overrides"""
      runner = ScenarioRunner(out_dir=str(tmp_path), strict=True, seed=5)
      result = runner.run(halfspace_cfg)
      assert result.strict
      target = tmp_path / 'halfspace'
      assert (target / 'ladder.csv').exists()
      stored = yaml.safe_load((target / 'scenario.yaml').read_text())
      assert stored['scenario']['seed'] == 5
      summary = yaml.safe_load((target / 'summary.yaml').read_text())
      assert summary['passed'] is True
      ladder = pd.read_csv(target / 'ladder.csv')
      assert len(ladder) == 6

   def test_run_scenario_without_writing(self, halfspace_cfg, tmp_path):
      """Test a single run that leaves no result directory"""
      result = run_scenario(halfspace_cfg, out_dir=str(tmp_path), write=False)
      assert result.passed
      assert not (tmp_path / 'halfspace').exists()

   def test_calibration_path(self, halfspace_cfg, tmp_path):
      """Test the shared and the per-scenario calibration files"""
      assert calibration_path(halfspace_cfg, str(tmp_path)) == os.path.join(str(tmp_path), CALIBRATION_FILE)
      halfspace_cfg.calibration_file = str(tmp_path / 'own.yaml')
      assert calibration_path(halfspace_cfg, 'elsewhere') == str(tmp_path / 'own.yaml')

   def test_constants_are_frozen(self, green_cfg, tmp_path):
      """Test that calibrated constants land in the shared file and bind later runs"""
      _, result = run_many([_heat_calibration(), green_cfg], out_dir=str(tmp_path))
      book = ConstantBook(str(tmp_path / CALIBRATION_FILE))
      assert book.get('heat_envelope') is not None
      assert book.get('heat_envelope_c') is not None
      assert book.get('heat_envelope') == pytest.approx(
         _checks(result)['heat_envelope_scale_1'].fitted_constant)

   def test_calibration_runs_first(self, tmp_path):
      """Test that a calibration listed last still freezes before the others read"""
      calibration = _nls_config('calibration', 'calibration', fit=['local_smoothing'])
      results = run_many([_smoothing_halfspace('smoothing'), calibration], out_dir=str(tmp_path),
                         threads=2)
      assert [r.name for r in results] == ['smoothing', 'calibration']
      constant = _checks(results[0])['local_smoothing'].fitted_constant
      assert math.isfinite(constant)
      assert constant == ConstantBook(str(tmp_path / CALIBRATION_FILE)).get('local_smoothing')

   def test_results_independent_of_threads(self, tmp_path):
      """Test byte-identical checks and constants for serial and threaded runs"""
      def configs():
         return [_smoothing_halfspace('first'),
                 _nls_config('calibration', 'calibration', fit=['local_smoothing']),
                 _smoothing_halfspace('second')]

      run_many(configs(), out_dir=str(tmp_path / 'serial'), threads=1)
      run_many(configs(), out_dir=str(tmp_path / 'threaded'), threads=2)
      for name in ('first', 'calibration', 'second'):
         serial = (tmp_path / 'serial' / name / 'checks.csv').read_bytes()
         threaded = (tmp_path / 'threaded' / name / 'checks.csv').read_bytes()
         assert serial == threaded, name
      assert (tmp_path / 'serial' / CALIBRATION_FILE).read_bytes() == \
         (tmp_path / 'threaded' / CALIBRATION_FILE).read_bytes()

   def test_parallel_keeps_order(self, halfspace_cfg, tmp_path):
      """Test that threaded runs return results in input order"""
      other = ScenarioConfig.from_dict(dict(halfspace_cfg.to_dict(), name='second'))
      results = run_many([halfspace_cfg, other], out_dir=str(tmp_path), threads=2)
      assert [r.name for r in results] == ['halfspace', 'second']
