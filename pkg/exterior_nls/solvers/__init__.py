"""
Finite-difference oracle on masked box grids
"""

from .operators import GridSolverError, SolverDivergence, ObstacleTouchesBoundary
from .gridsolver import (
   rasterize, halfspace_grid, free_copy, cn_step, nls_step, heat_step, resolvent,
   free_resolvent_formula, halfspace_resolvent_formula, heat_kernel_formula,
   boundary_mass_fraction, point_source, propagate
)

__all__ = [
   'GridSolverError', 'SolverDivergence', 'ObstacleTouchesBoundary',
   'rasterize', 'halfspace_grid', 'free_copy', 'cn_step', 'nls_step', 'heat_step', 'resolvent',
   'free_resolvent_formula', 'halfspace_resolvent_formula', 'heat_kernel_formula',
   'boundary_mass_fraction', 'point_source', 'propagate',
]
