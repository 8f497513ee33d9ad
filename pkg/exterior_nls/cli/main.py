"""
Main CLI entry point for exterior-nls
"""

import argparse
import logging
import sys
from typing import List, Optional

from ..config import Config
from ..models.body import ObstacleKind
from ..profiles import ProfileKind
from ..utils.logging_setup import setup_logging
from .commands import (
   ClassifyCommand, DecomposeCommand, DoctorCommand, GreenCommand, RunCommand, VersionCommand
)


COMMANDS = {
   "run": RunCommand,
   "doctor": DoctorCommand,
   "decompose": DecomposeCommand,
   "classify": ClassifyCommand,
   "green": GreenCommand,
   "version": VersionCommand,
}


def _add_obstacle_arguments(parser: argparse.ArgumentParser) -> None:
   parser.add_argument(
      "--obstacle",
      choices=[k.value for k in ObstacleKind],
      default="sphere",
      help="Obstacle family (default: sphere)"
   )
   parser.add_argument(
      "--center",
      type=float, nargs=3, default=[0.0, 0.0, 0.0],
      metavar=("X", "Y", "Z"),
      help="Obstacle center"
   )
   parser.add_argument(
      "--radius",
      type=float, default=1.0,
      help="Sphere radius (default: 1.0)"
   )
   parser.add_argument(
      "--semi-axes",
      type=float, nargs=3, default=None,
      metavar=("A", "B", "C"),
      help="Semi-axes for ellipsoids and superellipsoids"
   )
   parser.add_argument(
      "--exponent",
      type=int, default=4,
      help="Superellipsoid exponent (even, default: 4)"
   )


def create_parser() -> argparse.ArgumentParser:
   """Create argument parser for the exterior-nls CLI"""

   parser = argparse.ArgumentParser(
      prog="exterior-nls",
      description="""Wave packets, reflected Gaussian beams and a finite-difference oracle
for the Schrodinger equation outside a convex obstacle

Configuration file locations (searched in order):
  ~/.exterior_nls.yaml
  ~/.config/exterior_nls/config.yaml
  /etc/exterior_nls/config.yaml
  exterior_nls.yaml (current directory)""",
      formatter_class=argparse.RawDescriptionHelpFormatter,
      epilog="""
Examples:
  exterior-nls doctor                              # Fast invariant suite
  exterior-nls run scenarios/beam_reflection.yaml  # Run one scenario
  exterior-nls run scenarios/*.yaml --threads 4    # Run several in parallel
  exterior-nls classify --origin 0 0 3 --xi 0 0 -10
  exterior-nls decompose --epsilon 0.05
  exterior-nls decompose --epsilon 0.05 --field psi.obgf
  exterior-nls green --z -1.5 --source -1.5 0 0 --probe 1.5 0 0
  exterior-nls config --create                     # Create sample configuration
      """
   )

   # Global options
   parser.add_argument(
      "-c", "--config",
      help="Configuration file path",
      default=None
   )

   parser.add_argument(
      "-v", "--verbose",
      action="store_true",
      help="Enable verbose logging"
   )

   parser.add_argument(
      "-q", "--quiet",
      action="store_true",
      help="Suppress normal output"
   )

   parser.add_argument(
      "--log-file",
      help="Log file path",
      default=None
   )

   parser.add_argument(
      "--no-color",
      action="store_true",
      help="Plain grid tables instead of rich output"
   )

   subparsers = parser.add_subparsers(
      dest="command",
      help="Available commands"
   )

   # Run command
   run_parser = subparsers.add_parser(
      "run",
      help="Run scenario files"
   )
   run_parser.add_argument(
      "scenarios",
      nargs="+",
      help="Scenario YAML files"
   )
   run_parser.add_argument(
      "--out",
      help="Output directory (overrides the scenario's output_dir)"
   )
   run_parser.add_argument(
      "--seed",
      type=int,
      help="Random seed (overrides the scenario's seed)"
   )
   run_parser.add_argument(
      "--threads",
      type=int, default=1,
      help="Scenarios run concurrently (default: 1)"
   )
   run_parser.add_argument(
      "--strict",
      action="store_true",
      help="Fail on any monitor flag, not only on failed checks"
   )
   run_parser.add_argument(
      "--workers",
      type=int,
      help="Threads for parametrix evaluation (overrides solver.parametrix_workers)"
   )

   # Doctor command
   subparsers.add_parser(
      "doctor",
      help="Run the fast invariant suite"
   )

   # Decompose command
   decompose_parser = subparsers.add_parser(
      "decompose",
      help="Frame decomposition of a scaled profile"
   )
   decompose_parser.add_argument(
      "--epsilon",
      type=float, default=0.05,
      help="Data scale epsilon (default: 0.05)"
   )
   decompose_parser.add_argument(
      "--delta",
      type=float,
      help="Distance delta (default: epsilon)"
   )
   decompose_parser.add_argument(
      "--profile",
      choices=[k.value for k in ProfileKind if k != ProfileKind.FILE],
      default="gaussian",
      help="Profile shape (default: gaussian)"
   )
   decompose_parser.add_argument(
      "--width",
      type=float, default=0.3,
      help="Gaussian width of the profile (default: 0.3)"
   )
   decompose_parser.add_argument(
      "--momentum",
      type=float, nargs=3, default=[0.0, 0.0, 0.0],
      metavar=("K1", "K2", "K3"),
      help="Carrier momentum of the profile"
   )
   decompose_parser.add_argument(
      "--window",
      type=int,
      help="Componentwise index window (default: covers the admissible shell)"
   )
   decompose_parser.add_argument(
      "--field",
      metavar="PATH",
      help="Decompose the stored grid field psi_eps at PATH instead of a built-in profile"
   )
   decompose_parser.add_argument(
      "--csv",
      help="Write per-packet coefficients and envelope ratios to this file"
   )

   # Classify command
   classify_parser = subparsers.add_parser(
      "classify",
      help="Classify a ray against an obstacle"
   )
   _add_obstacle_arguments(classify_parser)
   classify_parser.add_argument(
      "--origin",
      type=float, nargs=3, required=True,
      metavar=("X", "Y", "Z"),
      help="Ray origin"
   )
   classify_parser.add_argument(
      "--xi",
      type=float, nargs=3, required=True,
      metavar=("XI1", "XI2", "XI3"),
      help="Momentum; the ray moves with velocity 2 xi"
   )
   classify_parser.add_argument(
      "--epsilon",
      type=float, default=0.05,
      help="Scale used for the default thresholds (default: 0.05)"
   )
   classify_parser.add_argument(
      "--kappa",
      type=float,
      help="Grazing threshold (default: [loglog(1/eps)]^-4)"
   )
   classify_parser.add_argument(
      "--clearance",
      type=float,
      help="Missing-ray clearance (default: [loglog(1/eps)]^-4)"
   )
   classify_parser.add_argument(
      "--directions",
      type=int,
      help="Census of this many directions with speed |xi| instead of one ray"
   )

   # Green command
   green_parser = subparsers.add_parser(
      "green",
      help="Obstacle and free resolvents at a probe"
   )
   _add_obstacle_arguments(green_parser)
   green_parser.add_argument(
      "--z",
      type=float, nargs="+", default=[-1.9, -1.5, -1.1],
      help="Spectral parameters, negative reals (default: -1.9 -1.5 -1.1)"
   )
   green_parser.add_argument(
      "--source",
      type=float, nargs=3, default=[-1.5, 0.0, 0.0],
      metavar=("X", "Y", "Z"),
      help="Source point y"
   )
   green_parser.add_argument(
      "--probe",
      type=float, nargs=3, default=[1.5, 0.0, 0.0],
      metavar=("X", "Y", "Z"),
      help="Probe point x"
   )
   green_parser.add_argument(
      "--spacing",
      type=float, default=0.1,
      help="Grid spacing (default: 0.1)"
   )
   green_parser.add_argument(
      "--cells",
      type=int, default=64,
      help="Cells per axis (default: 64)"
   )

   # Version command
   subparsers.add_parser(
      "version",
      help="Show version"
   )

   # Config command
   config_parser = subparsers.add_parser(
      "config",
      help="Configuration management"
   )
   config_parser.add_argument(
      "--create",
      action="store_true",
      help="Create sample configuration file"
   )
   config_parser.add_argument(
      "--show",
      action="store_true",
      help="Show current configuration"
   )

   return parser


def setup_logging_from_args(args: argparse.Namespace, config: Config) -> None:
   """Setup logging based on command line arguments and configuration"""

   # Determine log level
   if args.verbose:
      level = logging.DEBUG
   elif args.quiet:
      level = logging.ERROR
   else:
      level = config.get_log_level()

   # Determine log file
   log_file = args.log_file or config.logging.log_file

   setup_logging(
      level=level,
      log_file=log_file,
      log_format=config.logging.log_format,
      date_format=config.logging.date_format,
      console_output=not args.quiet
   )


def apply_cli_overrides(args: argparse.Namespace, config: Config) -> None:
   """Apply command-line overrides to configuration"""

   if getattr(args, 'no_color', False):
      config.display.use_colors = False

   if getattr(args, 'workers', None):
      config.solver.parametrix_workers = args.workers


def handle_config_command(args: argparse.Namespace, config: Config) -> int:
   """Handle configuration management commands"""

   if args.create:
      config.create_sample_config()
      return 0

   if args.show:
      print(f"Configuration file: {config.config_file}")
      print(f"CG relative tolerance: {config.solver.cg_rtol}")
      print(f"CG residual target: {config.solver.residual_target}")
      print(f"Resolvent tolerance: {config.solver.resolvent_rtol}")
      print(f"Max iterations: {config.solver.max_iterations}")
      print(f"Boundary mass flag: {config.solver.boundary_mass_flag}")
      print(f"Parametrix workers: {config.solver.parametrix_workers}")
      print(f"Log level: {config.logging.level}")
      print(f"Use colors: {config.display.use_colors}")
      print(f"Max table width: {config.display.max_table_width}")
      return 0

   print("Use --create to create sample configuration or --show to display current settings")
   return 1


def main(argv: Optional[List[str]] = None) -> int:
   """
   Main entry point for the exterior-nls CLI

   Args:
      argv: Command line arguments (optional, for testing)

   Returns:
      Exit code
   """

   parser = create_parser()
   args = parser.parse_args(argv)

   try:
      config = Config(config_file=args.config)
   except Exception as e:
      print(f"Error loading configuration: {str(e)}", file=sys.stderr)
      return 1

   apply_cli_overrides(args, config)

   setup_logging_from_args(args, config)
   logger = logging.getLogger(__name__)

   if not args.command:
      parser.print_help()
      return 1

   if args.command == "config":
      return handle_config_command(args, config)

   command_class = COMMANDS.get(args.command)
   if command_class is None:
      print(f"Unknown command: {args.command}", file=sys.stderr)
      return 1

   try:
      return command_class(config).execute(args)

   except KeyboardInterrupt:
      print("\nInterrupted by user", file=sys.stderr)
      return 130

   except Exception as e:
      logger.error(f"Command execution failed: {str(e)}")
      print(f"Error: {str(e)}", file=sys.stderr)
      return 1


if __name__ == "__main__":
   sys.exit(main())
