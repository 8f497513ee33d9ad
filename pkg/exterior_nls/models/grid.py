"""
Uniform box grid with a Dirichlet obstacle mask
"""

from typing import Optional, Tuple, Sequence
from dataclasses import dataclass, field

import numpy as np

from .body import ConvexBody


@dataclass(eq=False)
class Grid:
   """
   Cell-centred grid; cell (i, j, k) sits at origin + h * (i, j, k)

   mask is True on obstacle cells, which carry zero values.
   """

   dims: Tuple[int, int, int]
   spacing: float
   origin: np.ndarray
   mask: np.ndarray
   body: Optional[ConvexBody] = None

   # Assembled operators, filled lazily by the solvers
   _operators: dict = field(default_factory=dict, repr=False)

   def __post_init__(self):
      self.dims = tuple(int(d) for d in self.dims)
      self.origin = np.asarray(self.origin, dtype=float).reshape(3)
      if any(d < 8 for d in self.dims):
         raise ValueError(f"Grid dims must each be >= 8, got {self.dims}")
      if self.mask.shape != self.dims:
         raise ValueError(f"Mask shape {self.mask.shape} does not match dims {self.dims}")

   @property
   def cell_volume(self) -> float:
      return self.spacing ** 3

   @property
   def size(self) -> int:
      return int(np.prod(self.dims))

   @property
   def active(self) -> np.ndarray:
      """True on cells carrying unknowns"""
      return ~self.mask

   @property
   def extent(self) -> np.ndarray:
      """Upper corner cell center"""
      return self.origin + self.spacing * (np.asarray(self.dims) - 1)

   def axes(self) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
      """1D coordinate arrays"""
      return tuple(self.origin[k] + self.spacing * np.arange(self.dims[k]) for k in range(3))

   def centers(self) -> np.ndarray:
      """Cell centers, shape dims + (3,)"""
      x, y, z = self.axes()
      X, Y, Z = np.meshgrid(x, y, z, indexing='ij')
      return np.stack([X, Y, Z], axis=-1)

   def index_of(self, point: Sequence[float]) -> Tuple[int, int, int]:
      """Index of the cell nearest to point"""
      rel = (np.asarray(point, dtype=float) - self.origin) / self.spacing
      idx = np.clip(np.rint(rel).astype(int), 0, np.asarray(self.dims) - 1)
      return tuple(int(i) for i in idx)

   def point_of(self, index: Sequence[int]) -> np.ndarray:
      return self.origin + self.spacing * np.asarray(index, dtype=float)

   @classmethod
   def empty(cls, dims: Sequence[int], spacing: float,
             origin: Optional[Sequence[float]] = None) -> 'Grid':
      """Grid without obstacle; origin defaults to centring the box on 0"""
      dims = tuple(int(d) for d in dims)
      if origin is None:
         origin = -0.5 * spacing * (np.asarray(dims) - 1)
      return cls(dims=dims, spacing=float(spacing), origin=np.asarray(origin, dtype=float),
                 mask=np.zeros(dims, dtype=bool))


@dataclass(eq=False)
class GridField:
   """Complex samples on a grid at a given time"""

   grid: Grid
   values: np.ndarray
   time: float = 0.0

   def __post_init__(self):
      self.values = np.asarray(self.values, dtype=complex)
      if self.values.shape != self.grid.dims:
         raise ValueError(f"Field shape {self.values.shape} does not match grid {self.grid.dims}")

   @classmethod
   def zeros(cls, grid: Grid, time: float = 0.0) -> 'GridField':
      return cls(grid=grid, values=np.zeros(grid.dims, dtype=complex), time=time)

   @classmethod
   def sample(cls, grid: Grid, fn, time: float = 0.0) -> 'GridField':
      """Sample fn(points) on active cells, zero on the mask"""
      values = np.asarray(fn(grid.centers()), dtype=complex)
      values[grid.mask] = 0.0
      return cls(grid=grid, values=values, time=time)

   def with_values(self, values: np.ndarray, time: Optional[float] = None) -> 'GridField':
      return GridField(grid=self.grid, values=values,
                       time=self.time if time is None else time)

   def is_finite(self) -> bool:
      return bool(np.all(np.isfinite(self.values)))

   def norm(self) -> float:
      """Discrete L2 norm"""
      return float(np.sqrt(self.grid.cell_volume * np.sum(np.abs(self.values) ** 2)))
