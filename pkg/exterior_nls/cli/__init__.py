"""
Command line interface for exterior-nls
"""

from .main import main
from .commands import (
   RunCommand, DoctorCommand, DecomposeCommand, ClassifyCommand, GreenCommand, VersionCommand
)

__all__ = ['main', 'RunCommand', 'DoctorCommand', 'DecomposeCommand', 'ClassifyCommand',
           'GreenCommand', 'VersionCommand']
