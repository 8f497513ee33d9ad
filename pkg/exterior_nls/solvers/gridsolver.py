"""
Finite-difference oracle for the Dirichlet exterior problem

Crank-Nicolson for i u_t = -Delta_h u, Strang splitting for the
defocusing quintic equation, Crank-Nicolson heat steps and resolvent
solves, all on a staircase-masked box.
"""

import logging
import math
from typing import Callable, Dict, Optional, Sequence, Tuple

import numpy as np
import scipy.sparse as sp

from ..config import SolverConfig
from ..models.body import ConvexBody
from ..models.grid import Grid, GridField
from ..models.trace import RunTrace
from .operators import (
   ObstacleTouchesBoundary, SolverDivergence, dirichlet_hamiltonian,
   gather, scatter, solve_spd, solve_shifted_normal, solve_shifted
)


logger = logging.getLogger(__name__)


def _settings(settings: Optional[SolverConfig]) -> SolverConfig:
   return settings or SolverConfig()


def rasterize(body: Optional[ConvexBody], dims: Sequence[int], spacing: float,
              origin: Optional[Sequence[float]] = None, margin_cells: int = 4,
              allow_contact: bool = False) -> Grid:
   """
   Mask cells whose centers satisfy F <= 0

   Args:
      body: Obstacle, None for the free box
      dims: Cells per axis
      spacing: Cell size h
      origin: Center of cell (0, 0, 0); defaults to a box centred on 0
      margin_cells: Required gap between the mask and the box faces
      allow_contact: Accept obstacles cut by the box (halfspace-like setups)

   Raises:
      ObstacleTouchesBoundary: If masked cells lie within margin_cells of a face
   """
   grid = Grid.empty(dims, spacing, origin)
   if body is None:
      return grid

   mask = np.asarray(body.contains(grid.centers()), dtype=bool)

   if not allow_contact and mask.any():
      m = margin_cells
      shell = np.ones(grid.dims, dtype=bool)
      shell[m:-m, m:-m, m:-m] = False
      if np.any(mask & shell):
         raise ObstacleTouchesBoundary(
            f"Obstacle mask comes within {m} cells of the box boundary"
         )

   if not mask.any():
      logger.warning("Obstacle does not cover any cell center of the grid")

   logger.debug(f"Rasterized {body.kind.value}: {int(mask.sum())} masked cells of {grid.size}")
   return Grid(dims=grid.dims, spacing=grid.spacing, origin=grid.origin, mask=mask, body=body)


def halfspace_grid(dims: Sequence[int], spacing: float, plane_index: int = 4,
                   lateral_center: Sequence[float] = (0.0, 0.0)) -> Grid:
   """
   Box whose cells with x3 <= 0 are masked

   The Dirichlet plane x3 = 0 passes through the cell centers of layer
   plane_index, so the odd reflection of any active field across it is the
   exact discrete image solution.
   """
   dims = tuple(int(d) for d in dims)
   origin = np.array([
      lateral_center[0] - 0.5 * spacing * (dims[0] - 1),
      lateral_center[1] - 0.5 * spacing * (dims[1] - 1),
      -plane_index * spacing,
   ])
   mask = np.zeros(dims, dtype=bool)
   mask[:, :, :plane_index + 1] = True
   return Grid(dims=dims, spacing=float(spacing), origin=origin, mask=mask)


def free_copy(grid: Grid) -> Grid:
   """Same box without the obstacle"""
   return Grid.empty(grid.dims, grid.spacing, grid.origin)


def _as_field(f: GridField, vector: np.ndarray, time: float) -> GridField:
   values = scatter(f.grid, vector)
   if not np.all(np.isfinite(values)):
      raise SolverDivergence(f"Non-finite values at t={time}")
   return f.with_values(values, time=time)


def cn_step(f: GridField, dt: float, settings: Optional[SolverConfig] = None) -> GridField:
   """
   One Crank-Nicolson step of i u_t = H u, H = -Delta_h

   (I + i dt/2 H) u1 = (I - i dt/2 H) u0
   """
   if dt <= 0.0:
      raise ValueError(f"dt must be positive, got {dt}")
   s = _settings(settings)
   H = dirichlet_hamiltonian(f.grid)
   u0 = gather(f.grid, f.values)
   if not np.any(u0):
      return f.with_values(np.zeros(f.grid.dims, dtype=complex), time=f.time + dt)

   a = 0.5 * dt
   rhs = u0 - 1j * a * (H @ u0)
   u1 = solve_shifted_normal(H, a, rhs, x0=u0, rtol=s.cg_rtol,
                             residual_target=s.residual_target, maxiter=s.max_iterations)
   return _as_field(f, u1, f.time + dt)


def _quintic_phase(values: np.ndarray, tau: float) -> np.ndarray:
   return values * np.exp(-1j * tau * np.abs(values) ** 4)


def nls_step(f: GridField, dt: float, settings: Optional[SolverConfig] = None) -> GridField:
   """Strang step for i u_t + Delta u = |u|^4 u"""
   half = f.with_values(_quintic_phase(f.values, 0.5 * dt))
   mid = cn_step(half, dt, settings)
   return mid.with_values(_quintic_phase(mid.values, 0.5 * dt))


def heat_step(f: GridField, dt: float, settings: Optional[SolverConfig] = None) -> GridField:
   """
   One Crank-Nicolson step of u_t = Delta_h u

   Positivity is preserved for dt <= h^2 / 3.
   """
   if dt <= 0.0:
      raise ValueError(f"dt must be positive, got {dt}")
   s = _settings(settings)
   H = dirichlet_hamiltonian(f.grid)
   u0 = gather(f.grid, f.values)
   a = 0.5 * dt
   A = (a * H + sp.identity(H.shape[0], format='csr')).tocsr()
   rhs = u0 - a * (H @ u0)
   u1 = solve_spd(A, rhs, x0=u0, rtol=s.cg_rtol, residual_target=s.residual_target,
                  maxiter=s.max_iterations, label="heat")
   return _as_field(f, u1, f.time + dt)


def point_source(grid: Grid, y: Sequence[float]) -> GridField:
   """delta_y / h^3 on the cell nearest to y"""
   idx = grid.index_of(y)
   if grid.mask[idx]:
      raise ValueError(f"Source point {list(y)} lies inside the obstacle")
   values = np.zeros(grid.dims, dtype=complex)
   values[idx] = 1.0 / grid.cell_volume
   return GridField(grid=grid, values=values)


def resolvent(grid: Grid, z: complex, y: Sequence[float],
              settings: Optional[SolverConfig] = None) -> GridField:
   """
   Green's function G(., y; z) solving (H - z) G = delta_y / h^3

   Raises:
      ValueError: If z lies within 0.1 of [0, inf)
   """
   z = complex(z)
   gap = abs(z.imag) if z.real >= 0.0 else abs(z)
   if gap < 0.1:
      raise ValueError(f"z={z} is within {gap:.3f} of the spectrum [0, inf)")
   s = _settings(settings)
   H = dirichlet_hamiltonian(grid)
   rhs = gather(grid, point_source(grid, y).values)
   G = solve_shifted(H, z, rhs, rtol=s.resolvent_rtol, residual_target=s.resolvent_residual,
                     maxiter=s.max_iterations)
   return GridField(grid=grid, values=scatter(grid, G))


def free_resolvent_formula(z: complex, x: np.ndarray, y: Sequence[float]) -> np.ndarray:
   """exp(-sqrt(-z) |x - y|) / (4 pi |x - y|) with Re sqrt(-z) > 0"""
   r = np.linalg.norm(np.asarray(x, dtype=float) - np.asarray(y, dtype=float), axis=-1)
   k = np.sqrt(-complex(z))
   with np.errstate(divide='ignore', invalid='ignore'):
      return np.exp(-k * r) / (4.0 * math.pi * r)


def halfspace_resolvent_formula(z: complex, x: np.ndarray, y: Sequence[float]) -> np.ndarray:
   """Dirichlet Green's function of {x3 > 0}: G(x, y) - G(x, ybar)"""
   y = np.asarray(y, dtype=float)
   ybar = y * np.array([1.0, 1.0, -1.0])
   return free_resolvent_formula(z, x, y) - free_resolvent_formula(z, x, ybar)


def heat_kernel_formula(t: float, x: np.ndarray, y: Sequence[float]) -> np.ndarray:
   """(4 pi t)^(-3/2) exp(-|x - y|^2 / 4t)"""
   d = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
   return (4.0 * math.pi * t) ** -1.5 * np.exp(-np.sum(d * d, axis=-1) / (4.0 * t))


def boundary_mass_fraction(f: GridField, layers: int = 4) -> float:
   """Share of the discrete mass within `layers` cells of the box faces"""
   density = np.abs(f.values) ** 2
   total = float(density.sum())
   if total == 0.0:
      return 0.0
   inner = density[layers:-layers, layers:-layers, layers:-layers].sum()
   return (total - float(inner)) / total


STEPPERS: Dict[str, Callable[[GridField, float, Optional[SolverConfig]], GridField]] = {
   'linear': cn_step,
   'nls': nls_step,
   'heat': heat_step,
}


def propagate(f: GridField, dt: float, steps: int, kind: str = 'linear',
              record_every: int = 1, scalars: Optional[Dict[str, Callable[[GridField], float]]] = None,
              settings: Optional[SolverConfig] = None, keep_snapshots: bool = True,
              run_logger: Optional[logging.LoggerAdapter] = None) -> Tuple[GridField, RunTrace]:
   """
   March `steps` steps of the chosen flow, recording a trace

   The trace always carries boundary_mass; other scalars come from the
   `scalars` callables. A boundary mass above the configured flag level is
   logged as a warning.
   """
   if kind not in STEPPERS:
      raise ValueError(f"Unknown flow '{kind}', expected one of {sorted(STEPPERS)}")
   s = _settings(settings)
   step = STEPPERS[kind]
   log = run_logger or logger
   scalars = scalars or {}
   trace = RunTrace()

   def record(field: GridField) -> None:
      values = {name: fn(field) for name, fn in scalars.items()}
      values['boundary_mass'] = boundary_mass_fraction(field)
      trace.append(field.time, field if keep_snapshots else None, **values)

   record(f)
   flagged = False
   for k in range(1, steps + 1):
      f = step(f, dt, s)
      if k % record_every == 0 or k == steps:
         record(f)
         if not flagged and trace.scalars['boundary_mass'][-1] > s.boundary_mass_flag:
            flagged = True
            log.warning(f"Boundary mass {trace.scalars['boundary_mass'][-1]:.3e} at t={f.time:.4e} "
                        f"exceeds {s.boundary_mass_flag:.1e}")
      log.debug(f"Step {k}/{steps} t={f.time:.6e}")

   return f, trace
