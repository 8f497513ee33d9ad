"""
Built-in scenarios, keyed by their `kind`
"""

from typing import Dict, Type

from ..config import ConfigError, ScenarioKind
from .base import BaseScenario, ScenarioResult, PACKET_COLUMNS, SCALAR_COLUMNS
from .calibration import CalibrationScenario
from .decomposition import WavepacketLadderScenario
from .green import GreenLadderScenario
from .halfspace import HalfspaceVsFreeScenario, ObstacleVsHalfspaceScenario
from .nls_monitor import NLSMorawetzScenario
from .reflection import BeamReflectionScenario, MissingRayScenario


SCENARIOS: Dict[ScenarioKind, Type[BaseScenario]] = {
   ScenarioKind.HALFSPACE_VS_FREE: HalfspaceVsFreeScenario,
   ScenarioKind.OBSTACLE_VS_HALFSPACE: ObstacleVsHalfspaceScenario,
   ScenarioKind.BEAM_REFLECTION: BeamReflectionScenario,
   ScenarioKind.MISSING_RAY: MissingRayScenario,
   ScenarioKind.GREEN_LADDER: GreenLadderScenario,
   ScenarioKind.NLS_MORAWETZ: NLSMorawetzScenario,
   ScenarioKind.WAVEPACKET_LADDER: WavepacketLadderScenario,
   ScenarioKind.CALIBRATION: CalibrationScenario,
}


def scenario_class(kind: str) -> Type[BaseScenario]:
   """Scenario class for a kind string"""
   try:
      return SCENARIOS[ScenarioKind(kind)]
   except ValueError:
      known = ', '.join(k.value for k in ScenarioKind)
      raise ConfigError(f"Unknown scenario kind '{kind}', expected one of: {known}")


__all__ = [
   'BaseScenario', 'ScenarioResult', 'SCENARIOS', 'SCALAR_COLUMNS', 'PACKET_COLUMNS',
   'scenario_class',
   'HalfspaceVsFreeScenario', 'ObstacleVsHalfspaceScenario', 'BeamReflectionScenario',
   'MissingRayScenario', 'GreenLadderScenario', 'NLSMorawetzScenario',
   'WavepacketLadderScenario', 'CalibrationScenario',
]
