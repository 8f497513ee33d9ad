"""
Exterior NLS - wave packets, reflected Gaussian beams and a finite-difference
oracle for the Schrodinger equation outside a convex obstacle
"""

__version__ = "0.1.0"
__author__ = "Exterior NLS Team"
__description__ = "Numerical toolkit for dispersive evolution outside strictly convex obstacles"

from .config import Config, ScenarioConfig

__all__ = ['Config', 'ScenarioConfig']
