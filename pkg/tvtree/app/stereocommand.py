"""
Extension which adds the `stereo-ttv` subcommand: truncated TV with non-convex per-pixel unaries read from a unary volume.

The disparity map goes to `--out`: CSV keeps the disparities, PGM maps the disparity window linearly onto the gray values.
"""
from argparse import ArgumentParser, Namespace
from pathlib import Path
from typing import Optional, Tuple

from tvtree.nonconvex import NonconvexSolver
from tvtree.prox2d import NonconvexPdResult, RowSolverPool, UnaryGrid, solve_ttv_nonconvex
from tvtree.tools import TvInputError

import logging

import numpy as np

# extension dependencies
from tvtree.app.core import RunConfig
from tvtree.app.denoisecommands import PrimalDualCommand
from tvtree.app.unaryvolumesaving import UnaryVolume

rootLogger = logging.getLogger("tvtree")

logger = rootLogger.getChild(__name__)

class StereoTtvCommand(PrimalDualCommand):
    """ Disparity estimation with truncated TV by primal-dual iterations over exact non-convex row and column solves. """

    _TITLE = "truncated TV stereo"

    _PGM_SUFFIX = ".pgm"

    _USER_CONFIG_SECTION_STEREO = "Stereo"

    _TAU0_KEY = "tau0"
    _TAU0_DEFAULT = 300.0

    _TRUNCATION_KEY = "truncation"
    _TRUNCATION_DEFAULT = 10.0

    _WEIGHT_KEY = "weight"
    _WEIGHT_DEFAULT = 1.0

    _WALL_FACTOR_KEY = "wall-factor"
    _WALL_FACTOR_DEFAULT = 4.0

    _BOUND_EVERY_KEY = "bound-every"
    _BOUND_EVERY_DEFAULT = 1

    _USER_CONFIG_SECTION_NONCONVEX = "Nonconvex Solver"

    _BREAKPOINT_BUDGET_KEY = "breakpoint-budget"
    _BREAKPOINT_BUDGET_DEFAULT = NonconvexSolver.DEFAULT_BREAKPOINT_BUDGET

    @classmethod
    def configureParser(cls, parser: ArgumentParser):
        super().configureParser(parser)
        parser.add_argument("--unaries", help = "unary volume (.bin, .vol)")
        parser.add_argument("--C", dest = "C", type = float, help = "truncation of the pairwise terms")
        parser.add_argument("--w", type = float, help = "edge weight")
        parser.add_argument("--tau0", type = float, help = "initial primal step, steps are tau0/k")
        parser.add_argument("--wall-factor", dest = "wall_factor", type = float, help = "slope factor of the walls outside the disparity window")
        parser.add_argument("--bound-every", dest = "bound_every", type = int, help = "lower bound evaluation interval, 0 disables the gap")
        parser.add_argument("--window", help = "disparity window lo,hi; defaults to the breakpoint range")
        parser.add_argument("--budget", type = int, help = "breakpoint budget of the row and column messages")

    def _stereoValue(self, runConfig: RunConfig, name: str, key: str, default, converter):
        value = runConfig.get(name)
        if value is None:
            return self.getConfigValue(self._USER_CONFIG_SECTION_STEREO, key, default, converter)
        return converter(value)

    @staticmethod
    def parseWindow(value) -> Optional[Tuple[float, float]]:
        """ `lo,hi` from a string or a two element list of a run file. """
        if value is None:
            return None
        parts = value.split(",") if isinstance(value, str) else list(value)
        try:
            lo, hi = (float(part) for part in parts)
        except (TypeError, ValueError) as ex:
            raise TvInputError("Disparity window has to be given as 'lo,hi', got '{}'.".format(value)) from ex
        if not lo < hi:
            raise TvInputError("Empty disparity window '[{}, {}]'.".format(lo, hi))
        return lo, hi

    def execute(self, arguments: Namespace) -> int:
        runConfig = self.runConfig(arguments)
        volume = self.loadObject(Path(runConfig.require("unaries")), UnaryVolume)

        truncation = self._stereoValue(runConfig, "C", self._TRUNCATION_KEY, self._TRUNCATION_DEFAULT, float)
        weight = self._stereoValue(runConfig, "w", self._WEIGHT_KEY, self._WEIGHT_DEFAULT, float)
        tau0 = self._stereoValue(runConfig, "tau0", self._TAU0_KEY, self._TAU0_DEFAULT, float)
        wallFactor = self._stereoValue(runConfig, "wall_factor", self._WALL_FACTOR_KEY, self._WALL_FACTOR_DEFAULT, float)
        boundEvery = self._stereoValue(runConfig, "bound_every", self._BOUND_EVERY_KEY, self._BOUND_EVERY_DEFAULT, int)

        budget = runConfig.getInt("budget")
        if budget is None:
            budget = self.getConfigValue(self._USER_CONFIG_SECTION_NONCONVEX, self._BREAKPOINT_BUDGET_KEY, self._BREAKPOINT_BUDGET_DEFAULT, int)

        grid = UnaryGrid(volume.toUnaryRows(), weight, weight, truncation)
        window = self.parseWindow(runConfig.get("window")) or grid.breakRange()
        iterations = self.iterations(runConfig)

        logger.info("%s on a %d x %d grid with %d breakpoints per pixel: w = %s, C = %s, tau0 = %s, window [%s, %s].", self._TITLE,
            grid.Shape[0], grid.Shape[1], volume.BreakCount, self.format(weight), self.format(truncation), self.format(tau0),
            self.format(window[0]), self.format(window[1]))

        with RowSolverPool(self.threadCount(runConfig)) as pool:
            result: NonconvexPdResult = solve_ttv_nonconvex(grid, iterations, tau0, wallFactor, window, boundEvery, budget, pool, self.OnIteration)

        if runConfig.has("out"):
            location = runConfig.getPath("out")
            disparities = result.x
            if location.name.lower().endswith(self._PGM_SUFFIX):
                disparities = np.clip((result.x - window[0]) / (window[1] - window[0]), 0.0, 1.0)
            location = self.saveObject(disparities, location, np.ndarray)
            logger.info("Disparity map saved to '%s'.", location)

        self.saveLog(runConfig, result.log, self._TITLE)
        self.writeSummary(result.log)
        self.writeLine("best-energy {}".format(self.format(grid.energy(result.x))))
        return 0

# extension area

from tvtree.app.manifest import manifest

# commands
manifest.insert(StereoTtvCommand, "stereo-ttv", help = "truncated TV stereo on a unary volume")
