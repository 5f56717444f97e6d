"""
Extension which adds the image restoration subcommands `denoise-l2` and `denoise-l1`.

Both read a binary PGM, run the primal-dual row/column splitting (or the per-pixel baseline with `--method points`) and save the
restored image, the convergence log and optionally a convergence plot.

Derivables
----------
Commands: `PrimalDualCommand`, base of all commands which drive a primal-dual loop.

Implementations
---------------
Commands: `DenoiseL2Command` and `DenoiseL1Command`.
"""
from argparse import ArgumentParser, Namespace
from pathlib import Path

from tvtree.event import Event
from tvtree.prox2d import ConvergenceLog, ConvergenceRecord, Grid2D, PdResult, RowSolverPool, solve_tvl1, solve_tvl2, solve_tv_points

import logging
import math

import numpy as np

# extension dependencies
from tvtree.app.core import SolverCommand, RunConfig

rootLogger = logging.getLogger("tvtree")

logger = rootLogger.getChild(__name__)

METHOD_ROWS = "rows"
METHOD_POINTS = "points"

def plotConvergence(log: ConvergenceLog, path: Path, title: str = ""):
    """ Energy (best so far) and gap over the iterations, written as SVG or PDF depending on `path`. """
    from matplotlib.figure import Figure

    figure = Figure(figsize = (6, 4))
    axes = figure.add_subplot(1, 1, 1)
    k = [record.k for record in log]
    axes.plot(k, log.BestEnergies, label = "best energy")
    gaps = log.Gaps
    if np.any(np.isfinite(gaps)):
        axes.plot(k, gaps, label = "gap")
    axes.set_xlabel("iteration")
    axes.set_yscale("symlog")
    if title:
        axes.set_title(title)
    axes.legend()
    figure.savefig(Path(path).as_posix())

class PrimalDualCommand(SolverCommand):
    """ Common options, progress logging and result saving of the primal-dual subcommands. """

    _ITERATIONS_DEFAULT = 100
    _PROGRESS_STEPS = 10

    _USER_CONFIG_SECTION_PD = "Primal Dual"

    def __init__(self, context):
        super().__init__(context)

        self._iterations = 0
        self._onIteration = Event()
        self._onIteration += self._logProgress

    @property
    def OnIteration(self) -> Event:
        """ Fired with the solver state and the new log record after every iteration. """
        return self._onIteration

    @classmethod
    def configureParser(cls, parser: ArgumentParser):
        parser.add_argument("--iters", type = int, help = "number of primal-dual iterations")
        parser.add_argument("--out", help = "file to save the result to")
        parser.add_argument("--log", help = "convergence log, CSV or jsonpickle (.jsi, .jsi.gz)")
        parser.add_argument("--plot", help = "convergence plot, SVG or PDF")

    def _logProgress(self, state, record: ConvergenceRecord):
        every = max(self._iterations // self._PROGRESS_STEPS, 1)
        if record.k % every == 0 or record.k == self._iterations:
            logger.info("Iteration %d/%d: energy %s, gap %s, %.3f s.", record.k, self._iterations, self.format(record.energy),
                self.format(record.gap), record.seconds)

    def iterations(self, runConfig: RunConfig) -> int:
        self._iterations = runConfig.getInt("iters", self._ITERATIONS_DEFAULT)
        return self._iterations

    def saveLog(self, runConfig: RunConfig, log: ConvergenceLog, title: str):
        if runConfig.has("log"):
            location = self.saveObject(log, runConfig.getPath("log"), ConvergenceLog)
            logger.info("Convergence log saved to '%s'.", location)
        if runConfig.has("plot"):
            plotConvergence(log, runConfig.getPath("plot"), title)
            logger.info("Convergence plot saved to '%s'.", runConfig.getPath("plot"))

    def writeSummary(self, log: ConvergenceLog):
        last = log.Last
        self.writeLine("iterations {}".format(last.k))
        self.writeLine("energy {}".format(self.format(last.energy)))
        if not math.isnan(last.gap):
            self.writeLine("gap {}".format(self.format(last.gap)))
        if log.Aborted:
            self.writeLine("aborted {}".format(log.Aborted))

class DenoiseCommand(PrimalDualCommand):
    """ Restores a PGM image with a total variation regularizer of weight `--w` on every edge. """

    _TITLE = "denoise"

    @classmethod
    def configureParser(cls, parser: ArgumentParser):
        super().configureParser(parser)
        parser.add_argument("--in", dest = "image", help = "binary PGM image")
        parser.add_argument("--w", type = float, help = "edge weight")
        parser.add_argument("--method", choices = (METHOD_ROWS, METHOD_POINTS), help = "row/column splitting or per-pixel baseline")

    def execute(self, arguments: Namespace) -> int:
        runConfig = self.runConfig(arguments)
        values = self.loadObject(Path(runConfig.require("image")), np.ndarray)
        grid = Grid2D(values, runConfig.getFloat("w", 0.0), runConfig.getFloat("w", 0.0))
        iterations = self.iterations(runConfig)

        logger.info("%s of a %d x %d image, w = %s, %d iterations.", self._TITLE, grid.Shape[0], grid.Shape[1],
            self.format(runConfig.getFloat("w", 0.0)), iterations)

        if runConfig.get("method", METHOD_ROWS) == METHOD_POINTS:
            result = solve_tv_points(grid, iterations, self._dataTerm(), self.OnIteration)
        else:
            with RowSolverPool(self.threadCount(runConfig)) as pool:
                result = self._solve(runConfig, grid, iterations, pool)

        if runConfig.has("out"):
            location = self.saveObject(result.x, runConfig.getPath("out"), np.ndarray)
            logger.info("Restored image saved to '%s'.", location)

        self.saveLog(runConfig, result.log, self._TITLE)
        self.writeSummary(result.log)
        return 0

    def _dataTerm(self) -> str:
        raise NotImplementedError

    def _solve(self, runConfig: RunConfig, grid: Grid2D, iterations: int, pool: RowSolverPool) -> PdResult:
        raise NotImplementedError

class DenoiseL2Command(DenoiseCommand):
    """ TV-ℓ2 (ROF) restoration with the exact primal-dual gap. """

    _TITLE = "TV-l2"

    _GAP_THRESHOLD_KEY = "gap-threshold"
    _GAP_THRESHOLD_DEFAULT = 0.0

    @classmethod
    def configureParser(cls, parser: ArgumentParser):
        super().configureParser(parser)
        parser.add_argument("--accel", action = "store_true", default = None, help = "strong convexity step acceleration")
        parser.add_argument("--gap-threshold", dest = "gap_threshold", type = float, help = "stop once the gap is below, 0 disables")

    def _dataTerm(self) -> str:
        return "l2"

    def _solve(self, runConfig: RunConfig, grid: Grid2D, iterations: int, pool: RowSolverPool) -> PdResult:
        gapThreshold = runConfig.getFloat("gap_threshold")
        if gapThreshold is None:
            gapThreshold = self.getConfigValue(self._USER_CONFIG_SECTION_PD, self._GAP_THRESHOLD_KEY, self._GAP_THRESHOLD_DEFAULT, float)
        return solve_tvl2(grid, iterations, runConfig.getBool("accel"), gapThreshold, pool, self.OnIteration)

class DenoiseL1Command(DenoiseCommand):
    """ TV-ℓ1 restoration; `--accel` applies the varying step schedule with the configured modulus, without a convergence guarantee. """

    _TITLE = "TV-l1"

    _GAMMA_KEY = "tvl1-acceleration-gamma"
    _GAMMA_DEFAULT = 0.5

    @classmethod
    def configureParser(cls, parser: ArgumentParser):
        super().configureParser(parser)
        parser.add_argument("--accel", action = "store_true", default = None, help = "varying step sizes (no convergence guarantee)")
        parser.add_argument("--accel-gamma", dest = "accel_gamma", type = float, help = "modulus of the varying step schedule")

    def _dataTerm(self) -> str:
        return "l1"

    def _solve(self, runConfig: RunConfig, grid: Grid2D, iterations: int, pool: RowSolverPool) -> PdResult:
        gamma = 0.0
        if runConfig.getBool("accel"):
            gamma = runConfig.getFloat("accel_gamma")
            if gamma is None:
                gamma = self.getConfigValue(self._USER_CONFIG_SECTION_PD, self._GAMMA_KEY, self._GAMMA_DEFAULT, float)
        return solve_tvl1(grid, iterations, gamma, pool, self.OnIteration)

# extension area

from tvtree.app.manifest import manifest

# commands
manifest.insert(DenoiseL2Command, "denoise-l2", help = "TV-l2 image restoration of a PGM image")
manifest.insert(DenoiseL1Command, "denoise-l1", help = "TV-l1 image restoration of a PGM image")
