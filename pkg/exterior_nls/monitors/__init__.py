"""
Monitors: conserved quantities, spacetime norms, Morawetz, local smoothing
and the heat kernel envelope
"""

from .conservation import mass, energy, kinetic_energy, potential_energy, relative_drift
from .strichartz import strichartz_norm, scattering_size, lebesgue_norm, gaussian_strichartz_norm
from .morawetz import (
   MonitorError, OriginOutsideObstacle, morawetz, morawetz_inequality,
   local_smoothing, local_smoothing_report, local_smoothing_table, smoothing_probes,
   translated_probes
)
from .heat_envelope import HeatEnvelopeReport, heat_envelope_check
from .envelopes import CheckReport, ConstantBook, bound_check, monotone_check, reports_to_dataframe

__all__ = [
   'mass', 'energy', 'kinetic_energy', 'potential_energy', 'relative_drift',
   'strichartz_norm', 'scattering_size', 'lebesgue_norm', 'gaussian_strichartz_norm',
   'MonitorError', 'OriginOutsideObstacle', 'morawetz', 'morawetz_inequality',
   'local_smoothing', 'local_smoothing_report', 'local_smoothing_table', 'smoothing_probes',
   'translated_probes',
   'HeatEnvelopeReport', 'heat_envelope_check',
   'CheckReport', 'ConstantBook', 'bound_check', 'monotone_check', 'reports_to_dataframe',
]
