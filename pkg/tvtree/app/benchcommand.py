"""
Extension which adds the `bench` subcommand: median solve times of a 1D solver over ascending signal lengths.

Prints `n,seconds,hash` per size and the fitted log-log slope; `--out` saves `n,seconds` as CSV, `--plot` a log-log plot.
"""
from argparse import ArgumentParser, Namespace

from tvtree.bench import SIGNALS, SOLVERS, fitScalingSlope, plotScaling, run_scaling_bench
from tvtree.tools import TvInputError

import logging

import numpy as np

# extension dependencies
from tvtree.app.arraytextsaving import LabeledArray
from tvtree.app.core import SolverCommand

rootLogger = logging.getLogger("tvtree")

logger = rootLogger.getChild(__name__)

class BenchCommand(SolverCommand):
    """ Scaling benchmark on seeded synthetic signals. """

    _USER_CONFIG_SECTION_BENCH = "Bench"

    _REPS_KEY = "reps"
    _REPS_DEFAULT = 3

    _SIGMA_KEY = "noise-sigma"
    _SIGMA_DEFAULT = 0.1

    _OUTPUT_COLUMNS = ("n", "seconds")

    @classmethod
    def configureParser(cls, parser: ArgumentParser):
        parser.add_argument("--solver", choices = SOLVERS, help = "solver to time")
        parser.add_argument("--sizes", help = "ascending signal lengths a,b,c")
        parser.add_argument("--reps", type = int, help = "repetitions per size, the median is reported")
        parser.add_argument("--seed", type = int, help = "seed of the instance generation")
        parser.add_argument("--signal", choices = SIGNALS, help = "clean signal, noisy sine or staircase")
        parser.add_argument("--sigma", type = float, help = "deviation of the Gaussian noise")
        parser.add_argument("--out", help = "CSV file for the times")
        parser.add_argument("--plot", help = "log-log plot, SVG or PDF")

    @staticmethod
    def parseSizes(value) -> list:
        parts = value.split(",") if isinstance(value, str) else list(value)
        try:
            return [int(part) for part in parts]
        except (TypeError, ValueError) as ex:
            raise TvInputError("Sizes have to be given as integers 'a,b,c', got '{}'.".format(value)) from ex

    def execute(self, arguments: Namespace) -> int:
        runConfig = self.runConfig(arguments)

        solverId = runConfig.require("solver")
        sizes = self.parseSizes(runConfig.require("sizes"))
        reps = runConfig.getInt("reps")
        if reps is None:
            reps = self.getConfigValue(self._USER_CONFIG_SECTION_BENCH, self._REPS_KEY, self._REPS_DEFAULT, int)
        sigma = runConfig.getFloat("sigma")
        if sigma is None:
            sigma = self.getConfigValue(self._USER_CONFIG_SECTION_BENCH, self._SIGMA_KEY, self._SIGMA_DEFAULT, float)
        seed = self.seed(runConfig)
        signal = runConfig.get("signal", SIGNALS[0])

        logger.info("Benchmark of %s on %s signals, sizes %s, %d repetitions, seed %d.", solverId, signal, sizes, reps, seed)
        rows = run_scaling_bench(solverId, sizes, reps, seed, signal, sigma)

        self.writeLine("n,seconds,hash")
        for row in rows:
            self.writeLine("{},{},{}".format(row.n, self.format(row.seconds), row.hash))

        if len(rows) > 1:
            fit = fitScalingSlope(rows)
            logger.info("Fitted log-log slope %.3f (r = %.3f).", fit.slope, fit.rvalue)
            self.writeLine("slope {}".format(self.format(fit.slope)))

        if runConfig.has("out"):
            table = LabeledArray(np.array([[row.n, row.seconds] for row in rows]), self._OUTPUT_COLUMNS)
            location = self.saveObject(table, runConfig.getPath("out"), np.ndarray)
            logger.info("Benchmark times saved to '%s'.", location)

        if runConfig.has("plot"):
            plotScaling(rows, runConfig.getPath("plot").as_posix(), "{} on {} signals".format(solverId, signal))
            logger.info("Scaling plot saved to '%s'.", runConfig.getPath("plot"))
        return 0

# extension area

from tvtree.app.manifest import manifest

# commands
manifest.insert(BenchCommand, "bench", help = "scaling benchmark of a 1D solver")
