"""
Sparse operators on the active cells of a masked grid
"""

import logging
from typing import Callable, Optional

import numpy as np
import scipy.sparse as sp
from scipy.sparse.linalg import LinearOperator, cg, bicgstab

from ..models.grid import Grid


logger = logging.getLogger(__name__)


class GridSolverError(Exception):
   """Base exception for grid solver failures"""
   pass


class SolverDivergence(GridSolverError):
   """Iterative solve missed its residual target or produced non-finite values"""
   pass


class ObstacleTouchesBoundary(GridSolverError):
   """Obstacle mask reaches the outer layer of the box"""
   pass


def _second_difference(n: int) -> sp.csr_matrix:
   return sp.diags([np.ones(n - 1), -2.0 * np.ones(n), np.ones(n - 1)], [-1, 0, 1], format='csr')


def box_laplacian(dims, spacing: float) -> sp.csr_matrix:
   """7-point Laplacian on the full box with zero values outside it"""
   n1, n2, n3 = dims
   I1, I2, I3 = (sp.identity(n, format='csr') for n in dims)
   L = (sp.kron(_second_difference(n1), sp.kron(I2, I3))
        + sp.kron(I1, sp.kron(_second_difference(n2), I3))
        + sp.kron(I1, sp.kron(I2, _second_difference(n3))))
   return (L / spacing ** 2).tocsr()


def dirichlet_hamiltonian(grid: Grid) -> sp.csr_matrix:
   """
   H = -Delta_h restricted to active cells

   Masked cells are removed from the unknowns, which imposes zero values
   there. H is real symmetric positive definite. Cached on the grid.
   """
   if 'H' not in grid._operators:
      active = np.flatnonzero(grid.active.ravel())
      H = -box_laplacian(grid.dims, grid.spacing)
      grid._operators['H'] = H[active][:, active].tocsr()
      grid._operators['active_index'] = active
      logger.debug(f"Assembled Dirichlet Laplacian on {active.size} active cells")
   return grid._operators['H']


def active_index(grid: Grid) -> np.ndarray:
   dirichlet_hamiltonian(grid)
   return grid._operators['active_index']


def gather(grid: Grid, values: np.ndarray) -> np.ndarray:
   """Field on the box to the vector of active unknowns"""
   return np.asarray(values).ravel()[active_index(grid)]


def scatter(grid: Grid, vector: np.ndarray) -> np.ndarray:
   """Vector of active unknowns to a box field, zero on the mask"""
   out = np.zeros(grid.size, dtype=complex)
   out[active_index(grid)] = vector
   return out.reshape(grid.dims)


def _check(A_apply: Callable[[np.ndarray], np.ndarray], x: np.ndarray, b: np.ndarray,
           residual_target: float, info: int, label: str) -> None:
   if not np.all(np.isfinite(x)):
      raise SolverDivergence(f"{label}: non-finite iterate")
   bnorm = float(np.linalg.norm(b))
   if bnorm == 0.0:
      return
   res = float(np.linalg.norm(A_apply(x) - b)) / bnorm
   if res > residual_target:
      raise SolverDivergence(f"{label}: relative residual {res:.3e} above {residual_target:.1e} (info={info})")
   logger.debug(f"{label}: relative residual {res:.3e}")


def solve_spd(A: sp.spmatrix, b: np.ndarray, x0: Optional[np.ndarray] = None,
              rtol: float = 1e-12, residual_target: float = 1e-10, maxiter: int = 10000,
              label: str = "cg") -> np.ndarray:
   """Conjugate gradients for a real symmetric positive definite A and complex b"""
   x, info = cg(A, b, x0=x0, rtol=rtol, atol=0.0, maxiter=maxiter)
   _check(lambda v: A @ v, x, b, residual_target, info, label)
   return x


def solve_shifted_normal(H: sp.spmatrix, a: float, b: np.ndarray, x0: Optional[np.ndarray] = None,
                         rtol: float = 1e-12, residual_target: float = 1e-10, maxiter: int = 10000,
                         label: str = "cn") -> np.ndarray:
   """
   Solve (I + i a H) x = b through the normal form (I + a^2 H^2) x = (I - i a H) b

   The normal operator is Hermitian positive definite with smallest
   eigenvalue 1, so CG applies.
   """
   n = H.shape[0]

   def normal(v: np.ndarray) -> np.ndarray:
      return v + a * a * (H @ (H @ v))

   op = LinearOperator((n, n), matvec=normal, dtype=complex)
   rhs = b - 1j * a * (H @ b)
   x, info = cg(op, rhs, x0=x0, rtol=rtol, atol=0.0, maxiter=maxiter)
   _check(lambda v: v + 1j * a * (H @ v), x, b, residual_target, info, label)
   return x


def solve_shifted(H: sp.spmatrix, z: complex, b: np.ndarray, rtol: float = 1e-11,
                  residual_target: float = 1e-9, maxiter: int = 10000,
                  label: str = "resolvent") -> np.ndarray:
   """
   Solve (H - z) x = b

   Real z below the spectrum gives an SPD system solved by CG; other z
   use BiCGSTAB on the complex symmetric matrix.
   """
   n = H.shape[0]
   z = complex(z)
   if z.imag == 0.0 and z.real < 0.0:
      A = (H - z.real * sp.identity(n, format='csr')).tocsr()
      return solve_spd(A, b, rtol=rtol, residual_target=residual_target, maxiter=maxiter, label=label)

   A = (H.astype(complex) - z * sp.identity(n, format='csr', dtype=complex)).tocsr()
   x, info = bicgstab(A, b.astype(complex), rtol=rtol, atol=0.0, maxiter=maxiter)
   _check(lambda v: A @ v, x, b, residual_target, info, label)
   return x
