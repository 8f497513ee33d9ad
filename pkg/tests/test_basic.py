"""
Basic tests for configuration, formatters and data models
"""

import logging
import os

import numpy as np
import pytest
import yaml

from exterior_nls.config import (
   Config, ConfigError, DeltaRule, ScenarioConfig, ScenarioKind, solver_settings
)
from exterior_nls.models.body import ConvexBody, ObstacleKind
from exterior_nls.models.grid import Grid, GridField
from exterior_nls.models.trace import RunTrace
from exterior_nls.utils.formatters import (
   format_duration, format_number, format_status, format_vector, truncate_string
)


SHIPPED_SCENARIOS = os.path.join(os.path.dirname(__file__), os.pardir, 'scenarios')


class TestConfig:
   """Test global configuration"""

   def test_config_creation(self, tmp_path):
      """Test defaults when the file is missing"""
      config = Config(config_file=str(tmp_path / "missing.yaml"))

      assert config.solver.cg_rtol == 1e-12
      assert config.solver.boundary_mass_flag == 1e-6
      assert config.display.use_colors is True
      assert config.logging.level == "INFO"

   def test_config_log_level(self, tmp_path):
      """Test log level conversion"""
      config = Config(config_file=str(tmp_path / "missing.yaml"))

      config.logging.level = "DEBUG"
      assert config.get_log_level() == logging.DEBUG

      config.logging.level = "warning"
      assert config.get_log_level() == logging.WARNING

      config.logging.level = "bogus"
      assert config.get_log_level() == logging.INFO

   def test_config_file_sections(self, tmp_path):
      """Test that solver and display sections override defaults"""
      path = tmp_path / "config.yaml"
      path.write_text(yaml.safe_dump({
         'solver': {'cg_rtol': 1e-9, 'parametrix_workers': 3, 'unknown_key': 1},
         'display': {'use_colors': False},
      }))
      config = Config(config_file=str(path))

      assert config.solver.cg_rtol == 1e-9
      assert config.solver.parametrix_workers == 3
      assert config.display.use_colors is False
      assert not hasattr(config.solver, 'unknown_key')

   def test_create_sample_config(self, tmp_path, capsys):
      """Test sample configuration creation"""
      path = tmp_path / "nested" / "config.yaml"
      config = Config(config_file=str(path))
      config.create_sample_config()

      assert path.exists()
      data = yaml.safe_load(path.read_text())
      assert set(data) == {'solver', 'display', 'logging'}
      assert "Sample configuration created" in capsys.readouterr().out


class TestScenarioConfig:
   """Test scenario files"""

   def test_defaults_validate(self):
      """Test that the default scenario is valid"""
      cfg = ScenarioConfig()
      cfg.validate()
      assert cfg.epsilon_ladder == [0.05, 0.03, 0.02]
      assert cfg.scenario_kind == ScenarioKind.HALFSPACE_VS_FREE

   def test_from_file(self, tmp_path):
      """Test loading a scenario with solver overrides"""
      path = tmp_path / "scenario.yaml"
      path.write_text(yaml.safe_dump({
         'scenario': {
            'name': 'reflection',
            'kind': 'beam-reflection',
            'obstacle': {'kind': 'ellipsoid', 'semi_axes': [1.5, 1.0, 0.75]},
            'epsilon_ladder': [0.05, 0.02],
            'delta_rule': {'ratio': 2.0},
            'parameters': {'standoff_sigma': 5},
         },
         'solver': {'cg_rtol': 1e-8},
      }))
      cfg = ScenarioConfig.from_file(str(path))
      cfg.validate()

      assert cfg.name == 'reflection'
      assert cfg.obstacle.semi_axes == [1.5, 1.0, 0.75]
      assert cfg.delta_rule.delta(0.05) == pytest.approx(0.1)
      assert cfg.param('standoff_sigma') == 5
      assert cfg.param('missing', 'fallback') == 'fallback'
      assert solver_settings(None, cfg).cg_rtol == 1e-8

   @pytest.mark.parametrize("name", sorted(os.listdir(SHIPPED_SCENARIOS)))
   def test_shipped_scenarios_validate(self, name):
      """Test that every shipped scenario file loads and validates"""
      ScenarioConfig.from_file(os.path.join(SHIPPED_SCENARIOS, name)).validate()

   def test_full_size_reflection_run(self):
      """Test the 96^3 grid run of the reflection scenario with delta = eps^(6/7)"""
      cfg = ScenarioConfig.from_file(os.path.join(SHIPPED_SCENARIOS, 'beam_reflection_96.yaml'))
      assert cfg.scenario_kind == ScenarioKind.BEAM_REFLECTION
      assert list(cfg.grid.dims) == [96, 96, 96]
      assert cfg.param('grid_run') is True
      assert cfg.delta_rule.delta(0.05) == pytest.approx(0.05 ** (6.0 / 7.0))

   def test_missing_scenario_section(self, tmp_path):
      """Test that a file without a scenario section is rejected"""
      path = tmp_path / "bad.yaml"
      path.write_text("solver: {}\n")
      with pytest.raises(ConfigError):
         ScenarioConfig.from_file(str(path))

   def test_unknown_key(self):
      """Test that unknown keys are rejected"""
      with pytest.raises(ConfigError):
         ScenarioConfig.from_dict({'colour': 'blue'})
      with pytest.raises(ConfigError):
         ScenarioConfig.from_dict({'grid': {'cells': 4}})

   @pytest.mark.parametrize("data", [
      {'kind': 'no-such-kind'},
      {'epsilon_ladder': [0.02, 0.05]},
      {'epsilon_ladder': []},
      {'obstacle': {'kind': 'superellipsoid', 'exponent': 3}},
      {'grid': {'dims': [4, 64, 64]}},
      {'thresholds': {'kappa': 1.5}},
      {'delta_rule': 'fixed'},
      {'time': {'dt': -1.0}},
   ])
   def test_validate_rejects(self, data):
      """Test invalid settings"""
      cfg = ScenarioConfig.from_dict(data)
      with pytest.raises(ConfigError):
         cfg.validate()

   def test_delta_below_epsilon(self):
      """Test that delta < eps is rejected where the frame needs delta >= eps"""
      cfg = ScenarioConfig.from_dict({'kind': 'beam-reflection', 'delta_rule': {'fixed': 0.03}})
      with pytest.raises(ConfigError):
         cfg.validate()

   def test_delta_rules(self):
      """Test delta as a function of epsilon"""
      assert DeltaRule.parse(None).delta(0.05) == 0.05
      assert DeltaRule.parse('power_6_7').delta(0.05) == pytest.approx(0.05 ** (6.0 / 7.0))
      assert DeltaRule.parse({'fixed': 0.2}).delta(0.05) == 0.2
      with pytest.raises(ConfigError):
         DeltaRule.parse([1, 2])

   def test_thresholds_for(self):
      """Test default and explicit thresholds"""
      cfg = ScenarioConfig()
      loglog = np.log(np.log(1.0 / 0.05))
      kappa, clearance = cfg.thresholds_for(0.05)
      assert kappa == pytest.approx(loglog ** -4)
      assert clearance == pytest.approx(loglog ** -4)

      cfg = ScenarioConfig.from_dict({'thresholds': {'kappa': 0.2}})
      assert cfg.thresholds_for(0.05)[0] == 0.2

   def test_save_round_trip(self, tmp_path):
      """Test that a saved scenario loads back to the same settings"""
      cfg = ScenarioConfig.from_dict({'name': 'x', 'delta_rule': {'ratio': 2.0}, 'seed': 11})
      cfg.solver_overrides = {'cg_rtol': 1e-9}
      path = str(tmp_path / "scenario.yaml")
      cfg.save(path)

      loaded = ScenarioConfig.from_file(path)
      assert loaded.to_dict() == cfg.to_dict()
      assert loaded.solver_overrides == {'cg_rtol': 1e-9}


class TestModels:
   """Test obstacle and grid models"""

   def test_body_from_spec(self):
      """Test obstacle construction from a spec block"""
      body = ConvexBody.from_spec({'kind': 'ellipsoid', 'center': [1, 0, 0], 'semi_axes': [2, 1, 1]})
      assert body.kind == ObstacleKind.ELLIPSOID
      assert body.bounding_radius == 2.0
      assert body.diameter == 4.0
      assert body.contains(np.array([2.5, 0.0, 0.0]))
      assert not body.contains(np.array([3.5, 0.0, 0.0]))

   def test_body_scaled(self):
      """Test shrinking about the center"""
      body = ConvexBody.sphere((1.0, 2.0, 3.0), 2.0).scaled(0.25)
      assert body.spec['radius'] == pytest.approx(0.5)
      assert np.allclose(body.center_hint, [1.0, 2.0, 3.0])

   def test_invalid_body(self):
      """Test rejected obstacle parameters"""
      with pytest.raises(ValueError):
         ConvexBody.ellipsoid((0, 0, 0), (1.0, -1.0, 1.0))
      with pytest.raises(ValueError):
         ConvexBody.superellipsoid((0, 0, 0), (1.0, 1.0, 1.0), exponent=5)

   def test_grid_indexing(self):
      """Test cell centers and nearest-cell lookup"""
      grid = Grid.empty((10, 10, 10), 0.5)
      p = grid.point_of((3, 4, 5))
      assert grid.index_of(p) == (3, 4, 5)
      assert grid.centers().shape == (10, 10, 10, 3)
      assert grid.cell_volume == pytest.approx(0.125)
      assert grid.active.all()

   def test_field_sample_zeroes_mask(self):
      """Test that sampled data vanish inside the obstacle"""
      grid = Grid.empty((8, 8, 8), 0.25)
      mask = np.zeros(grid.dims, dtype=bool)
      mask[3:5, 3:5, 3:5] = True
      grid = Grid(dims=grid.dims, spacing=grid.spacing, origin=grid.origin, mask=mask)
      f = GridField.sample(grid, lambda x: np.ones(x.shape[:-1], dtype=complex))
      assert np.all(f.values[mask] == 0.0)
      assert np.all(f.values[~mask] == 1.0)

   def test_trace_dataframe(self):
      """Test run trace bookkeeping"""
      trace = RunTrace()
      grid = Grid.empty((8, 8, 8), 0.25)
      for t in (0.0, 0.1, 0.2):
         trace.append(t, GridField.zeros(grid, time=t), mass=1.0)
      frame = trace.to_dataframe()
      assert list(frame['t']) == [0.0, 0.1, 0.2]
      assert list(frame['mass']) == [1.0, 1.0, 1.0]
      assert trace.duration == pytest.approx(0.2)


class TestFormatters:
   """Test utility formatters"""

   def test_format_duration(self):
      """Test duration formatting"""
      assert format_duration(0.25) == "250ms"
      assert format_duration(12.4) == "12.4s"
      assert format_duration(200) == "3m 20s"
      assert format_duration(3900) == "1h 5m"
      assert format_duration(None) == "N/A"
      assert format_duration(-1) == "N/A"

   def test_format_number(self):
      """Test numeric table cells"""
      assert format_number(0.0) == "0"
      assert format_number(1.5) == "1.5"
      assert format_number(1.234e-6) == "1.234e-06"
      assert format_number(float('nan')) == "nan"
      assert format_number(None) == "N/A"

   def test_format_vector_and_status(self):
      """Test vectors and pass/fail cells"""
      assert format_vector([1.0, 0.0, -2.0]) == "(1, 0, -2)"
      assert format_status(True) == "PASS"
      assert format_status(False) == "FAIL"
      assert truncate_string("abcdefgh", 5) == "ab..."
      assert truncate_string("abc", 5) == "abc"
