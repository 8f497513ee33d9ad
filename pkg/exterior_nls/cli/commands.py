"""
Command implementations for the exterior-nls CLI
"""

import argparse
import logging
import sys
from abc import ABC, abstractmethod
from functools import partial
from typing import List

import numpy as np
from rich.console import Console
from rich.table import Table
from tabulate import tabulate

from .. import __version__
from ..config import Config, ScenarioConfig
from ..doctor import doctor
from ..models.body import ConvexBody
from ..monitors.envelopes import CheckReport
from ..profiles import Profile
from ..rays import classify, default_thresholds, grazing_fraction, sphere_directions
from ..scenario_runner import run_many
from ..solvers.gridsolver import (
   free_copy, free_resolvent_formula, rasterize, resolvent
)
from ..utils.formatters import (
   format_duration, format_number, format_status, format_vector, truncate_string
)
from ..utils.gridio import GridFormatError, interpolate_field, read_field
from ..wavepackets import (
   coefficient_envelope, decompose, frame_params, periodization_bound, sample_on_cube
)


class BaseCommand(ABC):
   """Base class for CLI commands"""

   def __init__(self, config: Config):
      self.config = config
      self.logger = logging.getLogger(__name__)
      self.console = Console(
         width=self.config.display.max_table_width,
         force_terminal=True if config.display.use_colors else False
      )

   @abstractmethod
   def execute(self, args: argparse.Namespace) -> int:
      """Execute the command"""
      pass

   def _num(self, value) -> str:
      return format_number(value, self.config.display.float_digits)

   def _create_table(self, title: str, headers: List[str], rows: List[List[str]]) -> Table:
      table = Table(title=title, show_header=True, header_style="bold magenta")
      for header in headers:
         table.add_column(header, style="cyan")
      for row in rows:
         table.add_row(*row)
      return table

   def _print_table(self, title: str, headers: List[str], rows: List[List[str]]) -> None:
      """Rich table with colors, plain grid otherwise"""
      if self.config.display.use_colors:
         self.console.print(self._create_table(title, headers, rows))
      else:
         print(f"\n{title}")
         width = max(self.config.display.max_table_width // max(len(headers), 1), 8)
         rows = [[truncate_string(str(cell), width) for cell in row] for row in rows]
         print(tabulate(rows, headers=headers, tablefmt="grid"))

   def _print_checks(self, title: str, checks: List[CheckReport]) -> None:
      rows = [[c.name, self._num(c.lhs), self._num(c.rhs), self._num(c.fitted_constant),
               format_status(c.passed)] for c in checks]
      self._print_table(title, ["Check", "LHS", "RHS", "C", "Status"], rows)


class RunCommand(BaseCommand):
   """Run scenario files and write their results"""

   def execute(self, args: argparse.Namespace) -> int:
      try:
         configs = [ScenarioConfig.from_file(path) for path in args.scenarios]
      except Exception as e:
         self.logger.error(f"Failed to load scenarios: {str(e)}")
         print(f"Error: {str(e)}", file=sys.stderr)
         return 1

      results = run_many(configs, global_config=self.config, out_dir=args.out,
                         threads=args.threads, strict=True if args.strict else None,
                         seed=args.seed)

      for result in results:
         self._print_checks(f"{result.name} ({result.kind}) - {format_duration(result.elapsed)}",
                            result.checks)
         for flag in result.flags:
            print(f"  flag: {flag}")

      failed = [r.name for r in results if not r.passed]
      if failed:
         print(f"\nFailed scenarios: {', '.join(failed)}")
         return 1
      print(f"\nAll {len(results)} scenarios passed")
      return 0


class DoctorCommand(BaseCommand):
   """Fast invariant suite"""

   def execute(self, args: argparse.Namespace) -> int:
      report = doctor()
      self._print_checks(f"Doctor - {format_duration(report.elapsed)}", report.checks)
      return 0 if report.passed else 1


class DecomposeCommand(BaseCommand):
   """Frame decomposition of a scaled profile or of a stored grid field"""

   def execute(self, args: argparse.Namespace) -> int:
      delta = args.delta if args.delta is not None else args.epsilon
      params = frame_params(args.epsilon, delta)
      if args.field:
         try:
            stored = read_field(args.field)
         except (OSError, GridFormatError) as e:
            self.logger.error(f"Failed to read field: {str(e)}")
            print(f"Error: {str(e)}", file=sys.stderr)
            return 1
         self.logger.debug(f"Field {args.field}: dims={stored.grid.dims}, h={stored.grid.spacing:g}")
         psi_eps = partial(interpolate_field, stored)
         title = f"Decomposition of {args.field}"
      else:
         profile = Profile.from_spec({'kind': args.profile, 'width': args.width,
                                      'momentum': args.momentum})
         psi_eps = profile.scaled(args.epsilon)
         title = f"Decomposition of {args.profile}"
      psi = sample_on_cube(psi_eps, params, window=args.window)
      decomp = decompose(psi, params, window=args.window)
      envelope = coefficient_envelope(decomp)

      rows = [
         ["epsilon", self._num(params.epsilon)],
         ["delta", self._num(params.delta)],
         ["sigma", self._num(params.sigma)],
         ["L", self._num(params.L)],
         ["window", str(decomp.window)],
         ["samples", str(decomp.samples)],
         ["admissible packets", str(int(decomp.admissible.sum()))],
         ["||psi||", self._num(decomp.psi_norm)],
         ["residual", self._num(decomp.residual_l2)],
         ["tail bound", self._num(decomp.tail_bound)],
         ["periodization bound", self._num(periodization_bound(params))],
         ["envelope constant", self._num(float(envelope['ratio'].max()) if len(envelope) else 0.0)],
      ]
      self._print_table(title, ["Quantity", "Value"], rows)

      if args.csv:
         envelope.to_csv(args.csv, index=False, float_format="%.12e")
         print(f"Coefficients written to {args.csv}")
      return 0


def _body_from_args(args: argparse.Namespace) -> ConvexBody:
   spec = {'kind': args.obstacle, 'center': args.center, 'radius': args.radius,
           'semi_axes': args.semi_axes or [args.radius] * 3, 'exponent': args.exponent}
   return ConvexBody.from_spec(spec)


class ClassifyCommand(BaseCommand):
   """Classify one ray, or census a sphere of directions"""

   def execute(self, args: argparse.Namespace) -> int:
      body = _body_from_args(args)
      kappa, clearance = default_thresholds(args.epsilon)
      kappa = args.kappa if args.kappa is not None else kappa
      clearance = args.clearance if args.clearance is not None else clearance
      origin = np.asarray(args.origin, dtype=float)

      if args.directions:
         speed = float(np.linalg.norm(args.xi))
         fraction = grazing_fraction(body, origin, sphere_directions(args.directions), speed,
                                     kappa, clearance)
         rows = [["near-grazing fraction", self._num(fraction)], ["kappa", self._num(kappa)],
                 ["clearance", self._num(clearance)]]
         self._print_table(f"Ray census over {args.directions} directions", ["Quantity", "Value"], rows)
         return 0

      event = classify(body, origin, np.asarray(args.xi, dtype=float), kappa, clearance)
      record = event.to_dict()
      rows = [
         ["class", record['class']],
         ["xi", format_vector(event.xi)],
         ["t_c", self._num(record['t_c'])],
         ["x_c", format_vector(event.x_c)],
         ["incidence", self._num(record['incidence'])],
         ["R1", self._num(record['R1'])],
         ["R2", self._num(record['R2'])],
         ["min clearance ratio", self._num(record['min_clearance_ratio'])],
         ["kappa", self._num(kappa)],
         ["clearance", self._num(clearance)],
      ]
      self._print_table("Ray classification", ["Field", "Value"], rows)
      return 0


class GreenCommand(BaseCommand):
   """Obstacle and free resolvents at a probe point"""

   def execute(self, args: argparse.Namespace) -> int:
      body = _body_from_args(args)
      dims = [args.cells] * 3
      grid = rasterize(body, dims, args.spacing, origin=self._origin(args))
      free = free_copy(grid)
      y = np.asarray(args.source, dtype=float)
      ix = grid.index_of(args.probe)
      x = grid.point_of(ix)

      rows = []
      for z in args.z:
         G = np.real(resolvent(grid, z, y, self.config.solver).values)
         G_free = np.real(resolvent(free, z, y, self.config.solver).values)
         formula = float(np.real(free_resolvent_formula(z, x, grid.point_of(grid.index_of(y)))))
         rows.append([self._num(z), self._num(G[ix]), self._num(G_free[ix]), self._num(formula),
                      format_status(bool(0.0 <= G[ix] <= G_free[ix] * (1.0 + 1e-7)))])
      self._print_table(f"Resolvents at {format_vector(x)} from {format_vector(y)}",
                        ["z", "G_obstacle", "G_free (grid)", "G_free (formula)", "Sandwich"], rows)
      return 0

   @staticmethod
   def _origin(args: argparse.Namespace) -> np.ndarray:
      center = np.asarray(args.center, dtype=float)
      return center - 0.5 * args.spacing * (args.cells - 1)


class VersionCommand(BaseCommand):
   """Print the package version"""

   def execute(self, args: argparse.Namespace) -> int:
      print(f"exterior-nls {__version__}")
      return 0
