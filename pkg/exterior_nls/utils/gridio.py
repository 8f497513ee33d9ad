"""
Raw complex grid files and trilinear sampling of stored fields

Layout (little-endian): magic b"OBGF", version u32, dims 3 x u32,
spacing f64, origin 3 x f64, then re/im f64 pairs in row-major order.
"""

import struct
from pathlib import Path
from typing import Union

import numpy as np
from scipy.ndimage import map_coordinates

from ..models.grid import Grid, GridField


class GridFormatError(Exception):
   """File is not a readable OBGF grid"""
   pass


MAGIC = b"OBGF"
VERSION = 1
_HEADER = struct.Struct("<4sI3Id3d")


def write_field(f: GridField, path: Union[str, Path]) -> None:
   """Write a field; the obstacle mask is not stored (masked cells are zero)"""
   grid = f.grid
   header = _HEADER.pack(MAGIC, VERSION, *grid.dims, float(grid.spacing),
                         *(float(o) for o in grid.origin))
   payload = np.ascontiguousarray(f.values, dtype='<c16').tobytes(order='C')
   path = Path(path)
   path.parent.mkdir(parents=True, exist_ok=True)
   with open(path, 'wb') as fh:
      fh.write(header)
      fh.write(payload)


def read_field(path: Union[str, Path]) -> GridField:
   """
   Read a field written by write_field

   The returned grid has no mask; the stored values are returned bit for bit.

   Raises:
      GridFormatError: On bad magic, unknown version or truncated payload
   """
   with open(path, 'rb') as fh:
      data = fh.read()
   if len(data) < _HEADER.size:
      raise GridFormatError(f"{path}: file shorter than the {_HEADER.size}-byte header")

   magic, version, n1, n2, n3, spacing, o1, o2, o3 = _HEADER.unpack_from(data)
   if magic != MAGIC:
      raise GridFormatError(f"{path}: bad magic {magic!r}")
   if version != VERSION:
      raise GridFormatError(f"{path}: unsupported version {version}")

   dims = (n1, n2, n3)
   expected = _HEADER.size + 16 * n1 * n2 * n3
   if len(data) != expected:
      raise GridFormatError(f"{path}: expected {expected} bytes, found {len(data)}")

   values = np.frombuffer(data, dtype='<c16', offset=_HEADER.size).reshape(dims).astype(complex)
   grid = Grid.empty(dims, spacing, origin=(o1, o2, o3))
   return GridField(grid=grid, values=values)


def interpolate_field(f: GridField, points: np.ndarray) -> np.ndarray:
   """Trilinear values of f at points (..., 3); zero outside the grid box"""
   points = np.asarray(points, dtype=float)
   shape = points.shape[:-1]
   coords = ((points.reshape(-1, 3) - f.grid.origin) / f.grid.spacing).T
   values = np.asarray(f.values, dtype=complex)
   re = map_coordinates(values.real, coords, order=1, mode='constant', cval=0.0)
   im = map_coordinates(values.imag, coords, order=1, mode='constant', cval=0.0)
   return (re + 1j * im).reshape(shape)
