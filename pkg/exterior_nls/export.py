"""
Result files of a scenario run

out_dir/<scenario>/
   scalars.csv    t, mass, energy, F, potential_term
   checks.csv     name, lhs, rhs, fitted_constant, pass
   packets.csv    n1, n2, n3, class, t_c, abs_c, residual_sup
   <table>.csv    scenario tables (ladders, probes)
   fields/*.obgf  grid snapshots
   scenario.yaml  resolved scenario configuration
   summary.yaml   pass/fail, flags and scenario summary values
"""

import logging
import math
import os
from typing import Any, Dict, Optional

import numpy as np
import pandas as pd
import yaml

from .config import ScenarioConfig
from .monitors.envelopes import reports_to_dataframe
from .scenarios.base import PACKET_COLUMNS, SCALAR_COLUMNS, ScenarioResult
from .utils.gridio import write_field


logger = logging.getLogger(__name__)

FLOAT_FORMAT = "%.12e"


def plain(value: Any) -> Any:
   """Convert numpy scalars and arrays into YAML-safe Python values"""
   if isinstance(value, dict):
      return {str(k): plain(v) for k, v in value.items()}
   if isinstance(value, (list, tuple)):
      return [plain(v) for v in value]
   if isinstance(value, np.ndarray):
      return [plain(v) for v in value.tolist()]
   if isinstance(value, np.bool_):
      return bool(value)
   if isinstance(value, np.integer):
      return int(value)
   if isinstance(value, (float, np.floating)):
      v = float(value)
      if math.isnan(v):
         return None
      return v
   if isinstance(value, complex):
      return {'re': value.real, 'im': value.imag}
   return value


def _fixed_columns(frame: Optional[pd.DataFrame], columns) -> pd.DataFrame:
   """Frame with exactly the given columns, NaN where absent"""
   if frame is None:
      return pd.DataFrame(columns=columns)
   return frame.reindex(columns=columns)


def _write_csv(frame: pd.DataFrame, path: str) -> None:
   frame.to_csv(path, index=False, float_format=FLOAT_FORMAT)


def summary_document(result: ScenarioResult) -> Dict[str, Any]:
   """summary.yaml content; run time is left out so reruns compare equal"""
   return plain({
      'name': result.name,
      'kind': result.kind,
      'passed': result.passed,
      'strict': result.strict,
      'checks': len(result.checks),
      'failed': [c.name for c in result.failed_checks],
      'flags': list(result.flags),
      'values': result.summary,
   })


def emit(result: ScenarioResult, out_dir: str, cfg: Optional[ScenarioConfig] = None) -> str:
   """
   Write all result files of one scenario

   Args:
      result: Scenario result
      out_dir: Root output directory
      cfg: Resolved scenario configuration to store alongside

   Returns:
      Path of the scenario directory
   """
   target = os.path.join(out_dir, result.name)
   os.makedirs(target, exist_ok=True)

   _write_csv(_fixed_columns(result.scalars, SCALAR_COLUMNS), os.path.join(target, 'scalars.csv'))
   _write_csv(reports_to_dataframe(result.checks), os.path.join(target, 'checks.csv'))
   _write_csv(_fixed_columns(result.packets, PACKET_COLUMNS), os.path.join(target, 'packets.csv'))

   for name, table in sorted(result.tables.items()):
      _write_csv(table, os.path.join(target, f'{name}.csv'))

   if result.fields:
      field_dir = os.path.join(target, 'fields')
      os.makedirs(field_dir, exist_ok=True)
      for name, f in sorted(result.fields.items()):
         write_field(f, os.path.join(field_dir, f'{name}.obgf'))

   if cfg is not None:
      cfg.save(os.path.join(target, 'scenario.yaml'))

   with open(os.path.join(target, 'summary.yaml'), 'w') as fh:
      yaml.safe_dump(summary_document(result), fh, default_flow_style=False, sort_keys=True)

   logger.info(f"Results written to {target}")
   return target
