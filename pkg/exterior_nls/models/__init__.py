"""
Data models for obstacles, rays, frames, beams and grids
"""

from .body import ConvexBody, BoundaryFrame, ObstacleKind
from .ray import RayClass, RayEvent
from .frame import FrameParams, Decomposition
from .beam import FreePacket, ReflectedBeam, CovarianceReport
from .grid import Grid, GridField
from .trace import RunTrace

__all__ = [
   'ConvexBody', 'BoundaryFrame', 'ObstacleKind',
   'RayClass', 'RayEvent',
   'FrameParams', 'Decomposition',
   'FreePacket', 'ReflectedBeam', 'CovarianceReport',
   'Grid', 'GridField',
   'RunTrace',
]
