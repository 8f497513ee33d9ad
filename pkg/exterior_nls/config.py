"""
Configuration management for exterior-nls

Global settings (solver tolerances, display, logging) live in a YAML file
found on the usual search path. Each experiment is described by a
scenario file with a `scenario:` section and optional `solver:`
overrides.
"""

import os
import yaml
import logging
from typing import Dict, Any, Optional, List, Union
from dataclasses import dataclass, field, asdict
from enum import Enum


class ConfigError(Exception):
   """Invalid configuration"""
   pass


@dataclass
class SolverConfig:
   """Iterative solver settings for the grid oracle"""

   # Crank-Nicolson and heat solves
   cg_rtol: float = 1e-12
   residual_target: float = 1e-10
   max_iterations: int = 10000

   # Resolvent solves
   resolvent_rtol: float = 1e-11
   resolvent_residual: float = 1e-9

   # Share of mass within 4 cells of the box faces that flags a run
   boundary_mass_flag: float = 1e-6

   # Worker threads for parametrix evaluation
   parametrix_workers: int = 1


@dataclass
class DisplayConfig:
   """Display and output configuration"""

   max_table_width: int = 120
   use_colors: bool = True
   float_digits: int = 4


@dataclass
class LoggingConfig:
   """Logging configuration"""

   level: str = "INFO"
   log_file: Optional[str] = None
   log_format: str = "%(asctime)s - %(name)s - %(levelname)s - %(message)s"
   date_format: str = "%d-%m %H:%M"


class Config:
   """Main configuration manager"""

   def __init__(self, config_file: Optional[str] = None):
      """
      Initialize configuration

      Args:
         config_file: Path to configuration file
      """
      self.config_file = config_file or self._get_default_config_path()
      self.logger = logging.getLogger(__name__)

      self.solver = SolverConfig()
      self.display = DisplayConfig()
      self.logging = LoggingConfig()

      self._load_config()

   def _get_default_config_path(self) -> str:
      """Get default configuration file path"""
      config_paths = [
         os.path.expanduser("~/.exterior_nls.yaml"),
         os.path.expanduser("~/.config/exterior_nls/config.yaml"),
         "/etc/exterior_nls/config.yaml",
         "exterior_nls.yaml"
      ]

      for path in config_paths:
         if os.path.exists(path):
            return path

      return config_paths[0]

   def _load_config(self) -> None:
      """Load configuration from file"""
      if not os.path.exists(self.config_file):
         self.logger.debug(f"Configuration file not found: {self.config_file}")
         return

      try:
         with open(self.config_file, 'r') as f:
            config_data = yaml.safe_load(f)
      except Exception as e:
         self.logger.error(f"Failed to load configuration: {str(e)}")
         return

      if not config_data:
         return

      self.apply_sections(config_data)
      self.logger.info(f"Configuration loaded from {self.config_file}")

   def apply_sections(self, config_data: Dict[str, Any]) -> None:
      """Overlay solver/display/logging sections from a mapping"""
      if 'solver' in config_data:
         self._update_config_object(self.solver, config_data['solver'])
      if 'display' in config_data:
         self._update_config_object(self.display, config_data['display'])
      if 'logging' in config_data:
         self._update_config_object(self.logging, config_data['logging'])

   def _update_config_object(self, config_obj: Any, config_data: Dict[str, Any]) -> None:
      """Update configuration object with data from file"""
      for key, value in (config_data or {}).items():
         if hasattr(config_obj, key):
            setattr(config_obj, key, value)

   def _config_to_dict(self, config_obj: Any) -> Dict[str, Any]:
      """Convert configuration object to dictionary"""
      if hasattr(config_obj, '__dict__'):
         return {k: v for k, v in config_obj.__dict__.items() if not k.startswith('_')}
      return {}

   def create_sample_config(self) -> None:
      """Create a sample configuration file"""
      sample_config = {
         'solver': self._config_to_dict(SolverConfig()),
         'display': self._config_to_dict(DisplayConfig()),
         'logging': self._config_to_dict(LoggingConfig())
      }

      try:
         config_dir = os.path.dirname(self.config_file)
         if config_dir:
            os.makedirs(config_dir, exist_ok=True)

         with open(self.config_file, 'w') as f:
            yaml.dump(sample_config, f, default_flow_style=False, indent=2)

         print(f"Sample configuration created at {self.config_file}")

      except Exception as e:
         print(f"Failed to create sample configuration: {str(e)}")

   def get_log_level(self) -> int:
      """Get numeric log level"""
      level_map = {
         'DEBUG': logging.DEBUG,
         'INFO': logging.INFO,
         'WARNING': logging.WARNING,
         'ERROR': logging.ERROR,
         'CRITICAL': logging.CRITICAL
      }

      return level_map.get(self.logging.level.upper(), logging.INFO)

   def __str__(self) -> str:
      return f"Config(file={self.config_file})"


class ScenarioKind(Enum):
   """Built-in experiments"""
   HALFSPACE_VS_FREE = "halfspace-vs-free"
   OBSTACLE_VS_HALFSPACE = "obstacle-vs-halfspace"
   BEAM_REFLECTION = "beam-reflection"
   MISSING_RAY = "missing-ray"
   GREEN_LADDER = "green-ladder"
   NLS_MORAWETZ = "nls-morawetz"
   WAVEPACKET_LADDER = "wavepacket-ladder"
   CALIBRATION = "calibration"


@dataclass
class ObstacleSpec:
   """Obstacle block: kind, center and size"""

   kind: str = "sphere"
   center: List[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
   radius: float = 1.0
   semi_axes: List[float] = field(default_factory=lambda: [1.0, 1.0, 1.0])
   exponent: int = 4
   blend: float = 1.0

   def to_dict(self) -> Dict[str, Any]:
      return asdict(self)


@dataclass
class GridSpec:
   """Oracle grid: cells per axis, spacing (or points per sigma) and box center"""

   dims: List[int] = field(default_factory=lambda: [96, 96, 96])
   spacing: Optional[float] = None
   points_per_sigma: float = 6.0
   center: Optional[List[float]] = None
   margin_cells: int = 4


@dataclass
class TimeSpec:
   """Time horizon and stepping"""

   horizon: Optional[float] = None
   dt: Optional[float] = None
   record_every: int = 1


@dataclass
class ThresholdSpec:
   """Grazing threshold kappa and missing-ray clearance; None uses [loglog(1/eps)]^-4"""

   kappa: Optional[float] = None
   clearance: Optional[float] = None


@dataclass
class MonitorToggles:
   """Which monitors a scenario records"""

   mass: bool = True
   energy: bool = True
   morawetz: bool = True
   local_smoothing: bool = True
   strichartz: bool = True
   boundary_mass: bool = True


@dataclass
class ProfileSpec:
   """Initial profile psi: shape, Gaussian width, carrier momentum and, for kind file, a grid file"""

   kind: str = "gaussian"
   width: float = 0.3
   momentum: List[float] = field(default_factory=lambda: [0.0, 0.0, 0.0])
   path: Optional[str] = None

   def to_dict(self) -> Dict[str, Any]:
      return asdict(self)


DELTA_RULES = ('equal_epsilon', 'power_6_7', 'fixed', 'ratio')


@dataclass
class DeltaRule:
   """
   delta as a function of epsilon

   equal_epsilon: delta = eps; power_6_7: delta = eps^(6/7);
   fixed: delta = value; ratio: delta = value * eps
   """

   rule: str = "equal_epsilon"
   value: Optional[float] = None

   @classmethod
   def parse(cls, raw: Union[str, Dict[str, Any], 'DeltaRule', None]) -> 'DeltaRule':
      if raw is None:
         return cls()
      if isinstance(raw, DeltaRule):
         return raw
      if isinstance(raw, str):
         return cls(rule=raw)
      if isinstance(raw, dict) and len(raw) == 1:
         (rule, value), = raw.items()
         return cls(rule=str(rule), value=None if value is None else float(value))
      raise ConfigError(f"Cannot parse delta_rule {raw!r}")

   def delta(self, epsilon: float) -> float:
      if self.rule == 'equal_epsilon':
         return epsilon
      if self.rule == 'power_6_7':
         return epsilon ** (6.0 / 7.0)
      if self.rule == 'fixed':
         return float(self.value)
      if self.rule == 'ratio':
         return float(self.value) * epsilon
      raise ConfigError(f"Unknown delta rule '{self.rule}'")

   def to_yaml(self) -> Union[str, Dict[str, float]]:
      if self.value is None:
         return self.rule
      return {self.rule: self.value}


@dataclass
class ScenarioConfig:
   """One experiment: what to run, at which scales, and where to write results"""

   name: str = "scenario"
   kind: str = ScenarioKind.HALFSPACE_VS_FREE.value
   obstacle: ObstacleSpec = field(default_factory=ObstacleSpec)
   epsilon_ladder: List[float] = field(default_factory=lambda: [0.05, 0.03, 0.02])
   delta_rule: DeltaRule = field(default_factory=DeltaRule)
   grid: GridSpec = field(default_factory=GridSpec)
   time: TimeSpec = field(default_factory=TimeSpec)
   thresholds: ThresholdSpec = field(default_factory=ThresholdSpec)
   monitors: MonitorToggles = field(default_factory=MonitorToggles)
   profile: ProfileSpec = field(default_factory=ProfileSpec)
   output_dir: str = "results"
   seed: int = 0
   strict: bool = False
   calibration_file: Optional[str] = None

   # Scenario-specific knobs (ratios, probes, scale factors, ...)
   parameters: Dict[str, Any] = field(default_factory=dict)

   # Solver overrides carried by the scenario file
   solver_overrides: Dict[str, Any] = field(default_factory=dict)

   @property
   def scenario_kind(self) -> ScenarioKind:
      return ScenarioKind(self.kind)

   def param(self, key: str, default: Any = None) -> Any:
      return self.parameters.get(key, default)

   def thresholds_for(self, epsilon: float):
      """(kappa, clearance) with [loglog(1/eps)]^-4 for unset values"""
      from .rays import default_thresholds
      kappa, clearance = default_thresholds(epsilon)
      if self.thresholds.kappa is not None:
         kappa = float(self.thresholds.kappa)
      if self.thresholds.clearance is not None:
         clearance = float(self.thresholds.clearance)
      return kappa, clearance

   @classmethod
   def from_dict(cls, data: Dict[str, Any]) -> 'ScenarioConfig':
      """Build from the mapping under a `scenario:` key"""
      data = dict(data or {})
      cfg = cls()
      nested = {
         'obstacle': ObstacleSpec,
         'grid': GridSpec,
         'time': TimeSpec,
         'thresholds': ThresholdSpec,
         'monitors': MonitorToggles,
         'profile': ProfileSpec,
      }
      for key, value in data.items():
         if key in nested:
            section = nested[key]()
            for k, v in (value or {}).items():
               if not hasattr(section, k):
                  raise ConfigError(f"Unknown key '{k}' in scenario.{key}")
               setattr(section, k, v)
            setattr(cfg, key, section)
         elif key == 'delta_rule':
            cfg.delta_rule = DeltaRule.parse(value)
         elif key == 'epsilon_ladder':
            cfg.epsilon_ladder = [float(e) for e in value]
         elif key == 'parameters':
            cfg.parameters = dict(value or {})
         elif hasattr(cfg, key):
            setattr(cfg, key, value)
         else:
            raise ConfigError(f"Unknown scenario key '{key}'")
      return cfg

   @classmethod
   def from_file(cls, path: str) -> 'ScenarioConfig':
      """Load a scenario file; solver overrides are kept on the result"""
      try:
         with open(path, 'r') as f:
            data = yaml.safe_load(f) or {}
      except (OSError, yaml.YAMLError) as e:
         raise ConfigError(f"Cannot read scenario file {path}: {e}")

      if 'scenario' not in data:
         raise ConfigError(f"Scenario file {path} has no 'scenario' section")

      cfg = cls.from_dict(data['scenario'])
      cfg.solver_overrides = dict(data.get('solver') or {})
      return cfg

   def validate(self) -> None:
      """
      Check the configuration

      Raises:
         ConfigError: On the first invalid setting
      """
      try:
         kind = self.scenario_kind
      except ValueError:
         raise ConfigError(f"Unknown scenario kind '{self.kind}'")

      ladder = self.epsilon_ladder
      if not ladder:
         raise ConfigError("epsilon_ladder must not be empty")
      if any(e <= 0.0 for e in ladder):
         raise ConfigError(f"epsilon_ladder entries must be positive: {ladder}")
      if any(b >= a for a, b in zip(ladder, ladder[1:])):
         raise ConfigError(f"epsilon_ladder must be strictly decreasing: {ladder}")

      if self.delta_rule.rule not in DELTA_RULES:
         raise ConfigError(f"Unknown delta rule '{self.delta_rule.rule}'")
      if self.delta_rule.rule in ('fixed', 'ratio'):
         if self.delta_rule.value is None or self.delta_rule.value <= 0.0:
            raise ConfigError(f"delta rule '{self.delta_rule.rule}' needs a positive value")

      if self.obstacle.kind not in ('sphere', 'ellipsoid', 'superellipsoid'):
         raise ConfigError(f"Unknown obstacle kind '{self.obstacle.kind}'")
      if self.obstacle.kind == 'superellipsoid':
         p = self.obstacle.exponent
         if int(p) != p or p < 2 or int(p) % 2:
            raise ConfigError(f"Superellipsoid exponent must be even and >= 2, got {p}")
      if len(self.obstacle.center) != 3:
         raise ConfigError("Obstacle center must have 3 components")

      from .profiles import ProfileKind
      try:
         profile_kind = ProfileKind(self.profile.kind)
      except ValueError:
         raise ConfigError(f"Unknown profile kind '{self.profile.kind}'")
      if profile_kind == ProfileKind.FILE and not self.profile.path:
         raise ConfigError("Profile kind 'file' needs profile.path")

      if len(self.grid.dims) != 3 or any(int(d) < 8 for d in self.grid.dims):
         raise ConfigError(f"Grid dims must be 3 values each >= 8, got {self.grid.dims}")
      if self.grid.spacing is not None and self.grid.spacing <= 0.0:
         raise ConfigError(f"Grid spacing must be positive, got {self.grid.spacing}")

      if self.time.dt is not None and self.time.dt <= 0.0:
         raise ConfigError(f"dt must be positive, got {self.time.dt}")
      if self.time.horizon is not None and self.time.horizon <= 0.0:
         raise ConfigError(f"Time horizon must be positive, got {self.time.horizon}")
      if int(self.time.record_every) < 1:
         raise ConfigError("record_every must be >= 1")

      for name in ('kappa', 'clearance'):
         value = getattr(self.thresholds, name)
         if value is not None and not 0.0 < value < 1.0:
            raise ConfigError(f"{name} must lie in (0, 1), got {value}")

      if not 0 <= int(self.seed) < 2 ** 64:
         raise ConfigError(f"seed must be an unsigned 64-bit integer, got {self.seed}")

      if kind in (ScenarioKind.OBSTACLE_VS_HALFSPACE, ScenarioKind.BEAM_REFLECTION):
         for eps in ladder:
            delta = self.delta_rule.delta(eps)
            if delta < eps:
               raise ConfigError(f"delta={delta:.4g} below epsilon={eps} for rule {self.delta_rule.rule}")

   def to_dict(self) -> Dict[str, Any]:
      data = asdict(self)
      data['delta_rule'] = self.delta_rule.to_yaml()
      data.pop('solver_overrides')
      return data

   def save(self, path: str) -> None:
      """Write the resolved scenario next to its results"""
      doc = {'scenario': self.to_dict()}
      if self.solver_overrides:
         doc['solver'] = dict(self.solver_overrides)
      with open(path, 'w') as f:
         yaml.safe_dump(doc, f, default_flow_style=False, sort_keys=True)


def solver_settings(global_config: Optional[Config], scenario: Optional[ScenarioConfig] = None) -> SolverConfig:
   """Global solver section with the scenario's overrides applied"""
   base = global_config.solver if global_config is not None else SolverConfig()
   merged = SolverConfig(**asdict(base))
   if scenario is not None:
      for key, value in scenario.solver_overrides.items():
         if hasattr(merged, key):
            setattr(merged, key, value)
   return merged
