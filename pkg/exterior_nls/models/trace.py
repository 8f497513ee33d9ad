"""
Time traces of a run: snapshots plus scalar series
"""

from typing import Callable, Dict, List, Optional, Union
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from .grid import Grid, GridField


Snapshot = Union[GridField, Callable[[float], GridField]]


@dataclass(eq=False)
class RunTrace:
   """
   Snapshots u(t_k) at strictly increasing times with aligned scalar series

   A snapshot is either a GridField or a callable t -> GridField for
   closed-form evaluators; callables are materialized on demand.
   """

   times: List[float] = field(default_factory=list)
   snapshots: List[Snapshot] = field(default_factory=list)
   scalars: Dict[str, List[float]] = field(default_factory=dict)

   def append(self, t: float, snapshot: Optional[Snapshot] = None, **scalars: float) -> None:
      """Record a time step"""
      if self.times and t <= self.times[-1]:
         raise ValueError(f"Trace times must be strictly increasing: {t} after {self.times[-1]}")
      if self.times and set(scalars) != set(self.scalars):
         raise ValueError(f"Scalar series mismatch: {sorted(scalars)} vs {sorted(self.scalars)}")
      self.times.append(float(t))
      self.snapshots.append(snapshot)
      for name, value in scalars.items():
         self.scalars.setdefault(name, []).append(float(value))

   @classmethod
   def from_evaluator(cls, grid: Grid, evaluator: Callable[[float, np.ndarray], np.ndarray],
                      times: np.ndarray) -> 'RunTrace':
      """Trace of a closed-form solution evaluated lazily on grid"""
      trace = cls()
      for t in times:
         trace.append(float(t), _LazySnapshot(grid, evaluator, float(t)))
      return trace

   @classmethod
   def from_adaptive_evaluator(cls, grid_for: Callable[[float], Grid],
                               evaluator: Callable[[float, np.ndarray], np.ndarray],
                               times: np.ndarray) -> 'RunTrace':
      """Closed-form trace whose sampling box follows the solution in time"""
      trace = cls()
      for t in times:
         trace.append(float(t), _LazySnapshot(grid_for(float(t)), evaluator, float(t)))
      return trace

   def __len__(self) -> int:
      return len(self.times)

   def field_at(self, i: int) -> GridField:
      snap = self.snapshots[i]
      if snap is None:
         raise ValueError(f"No snapshot stored at index {i}")
      if isinstance(snap, GridField):
         return snap
      return snap(self.times[i])

   def window(self, t0: float, t1: float) -> 'RunTrace':
      """Sub-trace with times in [t0, t1]"""
      sub = RunTrace()
      for i, t in enumerate(self.times):
         if t0 <= t <= t1:
            sub.times.append(t)
            sub.snapshots.append(self.snapshots[i])
            for name, series in self.scalars.items():
               sub.scalars.setdefault(name, []).append(series[i])
      return sub

   @property
   def duration(self) -> float:
      return self.times[-1] - self.times[0] if self.times else 0.0

   def to_dataframe(self) -> pd.DataFrame:
      """Scalar series as a DataFrame with a leading t column"""
      data = {'t': self.times}
      data.update(self.scalars)
      return pd.DataFrame(data)


class _LazySnapshot:
   """Closed-form snapshot sampled on first use"""

   def __init__(self, grid: Grid, evaluator, t: float):
      self.grid = grid
      self.evaluator = evaluator
      self.t = t

   def __call__(self, t: float) -> GridField:
      return GridField.sample(self.grid, lambda x: self.evaluator(t, x), time=t)
