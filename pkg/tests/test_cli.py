"""
Tests for the command-line interface
"""

from unittest.mock import patch

import pandas as pd
import pytest
import yaml

from exterior_nls import __version__
from exterior_nls.cli.main import apply_cli_overrides, create_parser, main
from exterior_nls.config import Config
from exterior_nls.models.grid import Grid, GridField
from exterior_nls.profiles import Profile, ProfileKind
from exterior_nls.utils.gridio import write_field


@pytest.fixture
def config_file(tmp_path):
   path = tmp_path / "config.yaml"
   path.write_text(yaml.safe_dump({'solver': {'cg_rtol': 1e-9}, 'display': {'float_digits': 3}}))
   return str(path)


class TestParser:
   """Test argument parsing"""

   def test_run_arguments(self):
      """Test run flags"""
      args = create_parser().parse_args(["run", "a.yaml", "b.yaml", "--threads", "2", "--strict",
                                         "--seed", "9"])
      assert args.command == "run"
      assert args.scenarios == ["a.yaml", "b.yaml"]
      assert args.threads == 2
      assert args.strict
      assert args.seed == 9

   def test_classify_requires_ray(self):
      """Test that origin and momentum are required"""
      with pytest.raises(SystemExit):
         create_parser().parse_args(["classify", "--origin", "0", "0", "3"])

   def test_green_defaults(self):
      """Test resolvent defaults"""
      args = create_parser().parse_args(["green"])
      assert args.z == [-1.9, -1.5, -1.1]
      assert args.cells == 64
      assert args.obstacle == "sphere"

   def test_overrides(self, config_file):
      """Test --no-color and --workers"""
      config = Config(config_file)
      args = create_parser().parse_args(["--no-color", "run", "a.yaml", "--workers", "3"])
      apply_cli_overrides(args, config)
      assert config.display.use_colors is False
      assert config.solver.parametrix_workers == 3


class TestMain:
   """Test command dispatch"""

   def test_no_command(self, config_file, capsys):
      """Test that a bare call prints help and fails"""
      assert main(["-c", config_file]) == 1
      assert "usage" in capsys.readouterr().out

   def test_version(self, config_file, capsys):
      """Test the version command"""
      assert main(["-c", config_file, "version"]) == 0
      assert __version__ in capsys.readouterr().out

   def test_config_show(self, config_file, capsys):
      """Test that file values reach the settings"""
      assert main(["-c", config_file, "config", "--show"]) == 0
      out = capsys.readouterr().out
      assert "CG relative tolerance: 1e-09" in out
      assert config_file in out

   def test_config_create(self, tmp_path):
      """Test sample config creation"""
      target = str(tmp_path / "new.yaml")
      with patch.object(Config, 'create_sample_config') as create:
         assert main(["-c", target, "config", "--create"]) == 0
      create.assert_called_once()

   def test_config_without_action(self, config_file):
      """Test config with neither flag"""
      assert main(["-c", config_file, "config"]) == 1

   def test_classify(self, config_file, capsys):
      """Test a head-on ray"""
      code = main(["-c", config_file, "--no-color", "classify",
                   "--origin", "0", "0", "3", "--xi", "0", "0", "-10"])
      assert code == 0
      out = capsys.readouterr().out
      assert "entering" in out

   def test_classify_census(self, config_file, capsys):
      """Test the direction census"""
      code = main(["-c", config_file, "--no-color", "classify",
                   "--origin", "0", "0", "3", "--xi", "0", "0", "-10", "--directions", "50"])
      assert code == 0
      assert "near-grazing fraction" in capsys.readouterr().out

   def test_decompose_csv(self, config_file, tmp_path, capsys):
      """Test the decomposition table and coefficient file"""
      target = tmp_path / "coefficients.csv"
      code = main(["-c", config_file, "--no-color", "decompose", "--epsilon", "0.05",
                   "--csv", str(target)])
      assert code == 0
      assert "admissible packets" in capsys.readouterr().out
      frame = pd.read_csv(target)
      assert {'n1', 'n2', 'n3', 'abs_c', 'envelope', 'ratio'} <= set(frame.columns)

   def test_decompose_field(self, config_file, tmp_path, capsys):
      """Test that a stored psi_eps decomposes like the profile it was sampled from"""
      eps = 0.05
      bump = Profile(kind=ProfileKind.BUMP)
      stored = GridField.sample(Grid.empty((41, 41, 41), 0.1 * eps), bump.scaled(eps))
      path = tmp_path / "psi.obgf"
      write_field(stored, path)

      from_file = tmp_path / "field.csv"
      from_profile = tmp_path / "profile.csv"
      assert main(["-c", config_file, "--no-color", "decompose", "--epsilon", str(eps),
                   "--field", str(path), "--csv", str(from_file)]) == 0
      assert main(["-c", config_file, "--no-color", "decompose", "--epsilon", str(eps),
                   "--profile", "bump", "--csv", str(from_profile)]) == 0
      assert str(path) in capsys.readouterr().out

      a = pd.read_csv(from_file)
      b = pd.read_csv(from_profile)
      assert len(a) == len(b)
      assert a['abs_c'].max() == pytest.approx(b['abs_c'].max(), rel=5e-2)

   def test_decompose_missing_field(self, config_file, tmp_path, capsys):
      """Test that an unreadable field file fails cleanly"""
      code = main(["-c", config_file, "decompose", "--field", str(tmp_path / "missing.obgf")])
      assert code == 1
      assert "Error" in capsys.readouterr().err

   def test_run_missing_file(self, config_file, tmp_path, capsys):
      """Test that an unreadable scenario fails cleanly"""
      code = main(["-c", config_file, "run", str(tmp_path / "missing.yaml")])
      assert code == 1
      assert "Error" in capsys.readouterr().err

   def test_command_error(self, config_file, capsys):
      """Test that exceptions become exit code 1"""
      with patch("exterior_nls.cli.commands.doctor", side_effect=RuntimeError("boom")):
         assert main(["-c", config_file, "doctor"]) == 1
      assert "Error: boom" in capsys.readouterr().err

   def test_interrupt(self, config_file):
      """Test Ctrl-C handling"""
      with patch("exterior_nls.cli.commands.doctor", side_effect=KeyboardInterrupt):
         assert main(["-c", config_file, "doctor"]) == 130

   def test_run_scenario(self, config_file, tmp_path, capsys):
      """Test an end-to-end run of a closed-form scenario"""
      scenario = tmp_path / "halfspace.yaml"
      scenario.write_text(yaml.safe_dump({'scenario': {
         'name': 'halfspace',
         'kind': 'halfspace-vs-free',
         'epsilon_ladder': [0.05],
         'profile': {'width': 1.0, 'momentum': [0.0, 0.0, -2.0]},
         'parameters': {'grid_check': False},
         'monitors': {'local_smoothing': False},
      }}))
      out_dir = tmp_path / "results"
      code = main(["-c", config_file, "--no-color", "run", str(scenario), "--out", str(out_dir)])
      assert code == 0
      assert (out_dir / "halfspace" / "summary.yaml").exists()
      assert "All 1 scenarios passed" in capsys.readouterr().out
