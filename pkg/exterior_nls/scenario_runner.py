"""
Running scenarios and writing their results
"""

import logging
import os
import threading
from concurrent.futures import ThreadPoolExecutor
from typing import Dict, List, Optional, Sequence

from .config import Config, ScenarioConfig, ScenarioKind, solver_settings
from .export import emit
from .monitors.envelopes import ConstantBook
from .scenarios import ScenarioResult, scenario_class


logger = logging.getLogger(__name__)

CALIBRATION_FILE = 'calibration.yaml'


def calibration_path(cfg: ScenarioConfig, out_dir: str) -> str:
   """Frozen-constant book of a scenario: its own file, or the one shared by the output directory"""
   if cfg.calibration_file:
      return os.path.expanduser(cfg.calibration_file)
   return os.path.join(out_dir, CALIBRATION_FILE)


class ScenarioRunner:
   """
   Runs scenario configurations and writes their result directories

   Scenarios naming the same calibration file share one ConstantBook.
   Calibration scenarios fit constants into it; all others only read it.
   """

   def __init__(self, global_config: Optional[Config] = None, out_dir: Optional[str] = None,
                strict: Optional[bool] = None, seed: Optional[int] = None):
      self.global_config = global_config
      self.out_dir = out_dir
      self.strict = strict
      self.seed = seed
      self._books: Dict[str, ConstantBook] = {}
      self._lock = threading.Lock()

   def _book(self, path: str) -> ConstantBook:
      with self._lock:
         if path not in self._books:
            self._books[path] = ConstantBook(path)
         return self._books[path]

   def _resolve(self, cfg: ScenarioConfig) -> ScenarioConfig:
      if self.strict is not None:
         cfg.strict = bool(self.strict)
      if self.seed is not None:
         cfg.seed = int(self.seed)
      cfg.validate()
      return cfg

   def run(self, cfg: ScenarioConfig, write: bool = True) -> ScenarioResult:
      """
      Run one scenario

      Args:
         cfg: Scenario configuration
         write: Write the result directory

      Returns:
         ScenarioResult
      """
      cfg = self._resolve(cfg)
      out_dir = self.out_dir or cfg.output_dir
      book = self._book(calibration_path(cfg, out_dir))
      scenario = scenario_class(cfg.kind)(cfg, solver_settings(self.global_config, cfg), book)
      result = scenario.run()
      book.save()
      if write:
         emit(result, out_dir, cfg)
      return result

   def run_many(self, configs: Sequence[ScenarioConfig], threads: int = 1) -> List[ScenarioResult]:
      """
      Run scenarios; results keep the input order

      Calibration scenarios run first, one after another in input order, so
      every constant is frozen before anything reads it. The remaining
      scenarios only read the books and run in parallel when threads > 1.
      """
      configs = list(configs)
      calibrating = [i for i, cfg in enumerate(configs) if _is_calibration(cfg)]
      checking = [i for i, cfg in enumerate(configs) if not _is_calibration(cfg)]
      logger.info(f"Running {len(configs)} scenarios ({len(calibrating)} calibration) "
                  f"on {max(threads, 1)} threads")

      results: Dict[int, ScenarioResult] = {}
      for i in calibrating:
         results[i] = self.run(configs[i])
      if threads <= 1 or len(checking) < 2:
         for i in checking:
            results[i] = self.run(configs[i])
      else:
         with ThreadPoolExecutor(max_workers=threads) as pool:
            for i, result in zip(checking, pool.map(self.run, [configs[i] for i in checking])):
               results[i] = result
      return [results[i] for i in range(len(configs))]


def _is_calibration(cfg: ScenarioConfig) -> bool:
   return cfg.kind == ScenarioKind.CALIBRATION.value


def run_scenario(cfg: ScenarioConfig, global_config: Optional[Config] = None,
                 out_dir: Optional[str] = None, strict: Optional[bool] = None,
                 write: bool = True) -> ScenarioResult:
   """Run a single scenario with its own runner"""
   return ScenarioRunner(global_config, out_dir, strict).run(cfg, write=write)


def run_many(configs: Sequence[ScenarioConfig], global_config: Optional[Config] = None,
             out_dir: Optional[str] = None, threads: int = 1,
             strict: Optional[bool] = None, seed: Optional[int] = None) -> List[ScenarioResult]:
   """Run several scenarios on one runner, sharing calibration books"""
   return ScenarioRunner(global_config, out_dir, strict, seed).run_many(configs, threads)
