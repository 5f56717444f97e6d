"""
Extension which adds the `tv1d` subcommand: exact 1D solves on chains and trees.

Solvers
-------
`quad`: quadratic unaries on a chain, `--in` names a CSV with columns `a,b` or a single column `c` (`a = 1`, `b = c`).
`pwl`, `pwq`: convex piecewise-linear or piecewise-quadratic unaries on a tree (`--tree`) or on a chain (`--w`).
`pwl-fast`: convex piecewise-linear unaries on a chain by the subsampled divide and conquer solver.
`nonconvex`: piecewise-linear unaries with truncated TV on a tree or chain.

Prints the solution, one value per line, followed by `energy <value>`, or saves the solution to `--out`.
"""
from argparse import ArgumentParser, BooleanOptionalAction, Namespace
from pathlib import Path
from typing import Tuple

from tvtree.convextree import ConvexPwq, solve_convex_tree
from tvtree.dnc import solve_fast, solve_hochbaum
from tvtree.nonconvex import NonconvexSolver
from tvtree.pwl import UnaryPwl
from tvtree.quadchain import solve_quad_chain, quadChainEnergy
from tvtree.tree import Tree, TreeFile, ConvexWeights, TruncatedWeights, convexEnergy
from tvtree.tools import TvInputError

import logging
import math

import numpy as np

# extension dependencies
from tvtree.app.core import SolverCommand, RunConfig

rootLogger = logging.getLogger("tvtree")

logger = rootLogger.getChild(__name__)

SOLVER_QUAD = "quad"
SOLVER_PWL = "pwl"
SOLVER_PWQ = "pwq"
SOLVER_PWL_FAST = "pwl-fast"
SOLVER_NONCONVEX = "nonconvex"

METHOD_TREE = "tree"
METHOD_MEDIAN = "median"

class Tv1dCommand(SolverCommand):
    """ Solves one 1D total variation problem read from files. """

    _NONCONVEX_USER_CONFIG_SECTION = "Nonconvex Solver"

    _BREAKPOINT_BUDGET_KEY = "breakpoint-budget"
    _BREAKPOINT_BUDGET_DEFAULT = NonconvexSolver.DEFAULT_BREAKPOINT_BUDGET

    _DNC_USER_CONFIG_SECTION = "Divide And Conquer Solver"

    _STRIDE_KEY = "stride"
    _STRIDE_DEFAULT = 0

    @classmethod
    def configureParser(cls, parser: ArgumentParser):
        solvers = parser.add_subparsers(dest = "solver", metavar = "solver")
        solvers.required = True

        quad = solvers.add_parser(SOLVER_QUAD, help = "quadratic unaries on a chain")
        quad.add_argument("--in", "--signal", dest = "signal", help = "CSV with columns a,b or c")
        quad.add_argument("--compact-memory", dest = "compact_memory", action = BooleanOptionalAction, default = None,
            help = "keep the left clip bounds in the output array (default)")

        pwl = solvers.add_parser(SOLVER_PWL, help = "convex piecewise-linear unaries on a tree")
        pwl.add_argument("--method", choices = (METHOD_TREE, METHOD_MEDIAN), help = "tree message passing or median pivoting (chains only)")

        pwq = solvers.add_parser(SOLVER_PWQ, help = "convex piecewise-quadratic unaries on a tree")

        fast = solvers.add_parser(SOLVER_PWL_FAST, help = "convex piecewise-linear unaries on a chain, subsampled divide and conquer")
        fast.add_argument("--stride", type = int, help = "subsampling stride, 0 for ceil(log2 n)")

        nonconvex = solvers.add_parser(SOLVER_NONCONVEX, help = "piecewise-linear unaries with truncated TV on a tree")
        nonconvex.add_argument("--C", dest = "C", type = float, help = "truncation of every edge, overrides the tree file")
        nonconvex.add_argument("--budget", type = int, help = "breakpoint budget of the messages")

        for subparser in (pwl, pwq, fast, nonconvex):
            subparser.add_argument("--unaries", "--in", dest = "unaries", help = "unary file, one spec line per node")
        for subparser in (pwl, pwq, nonconvex):
            subparser.add_argument("--tree", help = "tree file; without it the unaries form a chain")
        for subparser in (quad, pwl, pwq, fast, nonconvex):
            subparser.add_argument("--w", help = "chain edge weight, a number or a CSV with columns w or w-,w+")
            subparser.add_argument("--out", help = "save the solution as CSV instead of printing it")

    def execute(self, arguments: Namespace) -> int:
        runConfig = self.runConfig(arguments)
        solver = runConfig.require("solver")

        if solver == SOLVER_QUAD:
            x, energy = self._solveQuad(runConfig)
        elif solver in (SOLVER_PWL, SOLVER_PWQ):
            x, energy = self._solveConvex(runConfig, solver)
        elif solver == SOLVER_PWL_FAST:
            x, energy = self._solveFast(runConfig)
        elif solver == SOLVER_NONCONVEX:
            x, energy = self._solveNonconvex(runConfig)
        else:
            raise TvInputError("Unknown solver '{}'.".format(solver))

        logger.info("tv1d %s: %d nodes, energy %s.", solver, len(x), self.format(energy))

        if runConfig.has("out"):
            location = self.saveObject(np.asarray(x, dtype = float), runConfig.getPath("out"), np.ndarray)
            logger.info("Solution saved to '%s'.", location)
            self.writeLine("energy {}".format(self.format(energy)))
        else:
            self.writeSolution(x, energy)
        return 0

    def chainWeights(self, runConfig: RunConfig, n: int) -> Tuple[np.ndarray, np.ndarray]:
        """ Edge weights `(w⁻, w⁺)` of a chain of `n` nodes from a number or a CSV file. """
        value = runConfig.require("w")
        try:
            weight = float(value)
        except (TypeError, ValueError):
            weight = None

        if weight is not None:
            if weight < 0:
                raise TvInputError("Edge weight has to be non-negative, got '{}'.".format(weight))
            edges = np.full(max(n - 1, 0), weight)
            return -edges, edges

        table = np.asarray(self.loadObject(Path(value), np.ndarray), dtype = float)
        if table.ndim != 2 or table.shape[1] not in (1, 2):
            raise TvInputError("Weight file '{}' needs one column w or two columns w-,w+.".format(value))
        if table.shape[0] == n and n > 0:
            table = table[:n - 1]
        if table.shape[0] != max(n - 1, 0):
            raise TvInputError("Weight file '{}' has '{}' rows, a chain of '{}' nodes needs '{}'.".format(value, table.shape[0], n, n - 1))

        if table.shape[1] == 1:
            if np.any(table[:, 0] < 0):
                raise TvInputError("Symmetric edge weights in '{}' have to be non-negative.".format(value))
            return -table[:, 0], table[:, 0].copy()
        return table[:, 0].copy(), table[:, 1].copy()

    def _signal(self, runConfig: RunConfig) -> Tuple[np.ndarray, np.ndarray]:
        table = self.loadObject(Path(runConfig.require("signal")), np.ndarray)
        columns = tuple(name.lower() for name in getattr(table, "Columns", ()))
        table = np.asarray(table, dtype = float)

        if table.ndim != 2 or table.shape[1] not in (1, 2):
            raise TvInputError("Signal file needs columns a,b or c, got shape '{}'.".format(table.shape))

        if table.shape[1] == 2:
            a, b = (table[:, 1], table[:, 0]) if columns == ("b", "a") else (table[:, 0], table[:, 1])
        else:
            a, b = np.ones(table.shape[0]), table[:, 0]

        if np.any(~(a > 0)):
            raise TvInputError("Quadratic coefficients a have to be positive.")
        return a.copy(), b.copy()

    def _solveQuad(self, runConfig: RunConfig) -> Tuple[np.ndarray, float]:
        a, b = self._signal(runConfig)
        lower, upper = self.chainWeights(runConfig, len(a))
        x = solve_quad_chain(a, b, lower, upper, compact = runConfig.getBool("compact_memory", True))
        return x, quadChainEnergy(a, b, lower, upper, x)

    def _treeAndWeights(self, runConfig: RunConfig, n: int) -> TreeFile:
        """ The tree file or a chain built from `--w`. """
        if runConfig.has("tree"):
            treeFile = self.loadObject(runConfig.getPath("tree"), TreeFile)
            if treeFile.tree.NodeCount != n:
                raise TvInputError("Tree has '{}' nodes but '{}' unaries were given.".format(treeFile.tree.NodeCount, n))
            return treeFile

        lower, upper = self.chainWeights(runConfig, n)
        return TreeFile(Tree.chain(n), np.append(lower, 0.0), np.append(upper, 0.0), np.full(n, math.inf))

    def _unaries(self, runConfig: RunConfig, unaryType) -> list:
        unaries = self.loadObject(Path(runConfig.require("unaries")), unaryType)
        if not unaries:
            raise TvInputError("The unary file is empty.")
        return list(unaries)

    def _solveConvex(self, runConfig: RunConfig, solver: str) -> Tuple[np.ndarray, float]:
        unaries = self._unaries(runConfig, UnaryPwl if solver == SOLVER_PWL else ConvexPwq)
        treeFile = self._treeAndWeights(runConfig, len(unaries))
        weights = treeFile.convexWeights()

        if runConfig.get("method", METHOD_TREE) == METHOD_MEDIAN:
            if solver != SOLVER_PWL or not treeFile.tree.IsChain:
                raise TvInputError("Median pivoting solves piecewise-linear chains only.")
            order = self._chainOrder(treeFile.tree)
            x = np.empty(len(unaries))
            x[order] = solve_hochbaum([unaries[i] for i in order], weights.Lower[order[:-1]], weights.Upper[order[:-1]])
            return x, convexEnergy(treeFile.tree, unaries, weights, x)

        result = solve_convex_tree(treeFile.tree, unaries, weights)
        return result.x, result.energy

    @staticmethod
    def _chainOrder(tree: Tree) -> np.ndarray:
        """ Nodes of a chain from its leaf to its root; the edge weights are stored at each node but the root. """
        leaves = [node for node in range(tree.NodeCount) if not tree.Children[node]]
        node = leaves[0]
        order = [node]
        while tree.Parents[node] >= 0:
            node = tree.Parents[node]
            order.append(node)
        return np.asarray(order, dtype = int)

    def _solveFast(self, runConfig: RunConfig) -> Tuple[np.ndarray, float]:
        unaries = self._unaries(runConfig, UnaryPwl)
        n = len(unaries)
        lower, upper = self.chainWeights(runConfig, n)

        stride = runConfig.getInt("stride")
        if stride is None:
            stride = self.getConfigValue(self._DNC_USER_CONFIG_SECTION, self._STRIDE_KEY, self._STRIDE_DEFAULT, int)

        x = solve_fast(unaries, lower, upper, stride = stride or None)
        return x, convexEnergy(Tree.chain(n), unaries, ConvexWeights.chain(lower, upper), x)

    def _solveNonconvex(self, runConfig: RunConfig) -> Tuple[np.ndarray, float]:
        unaries = self._unaries(runConfig, UnaryPwl)
        treeFile = self._treeAndWeights(runConfig, len(unaries))
        weights = treeFile.truncatedWeights()

        if runConfig.has("C"):
            weights = TruncatedWeights(weights.Weights, np.full(len(unaries), runConfig.getFloat("C")))

        budget = runConfig.getInt("budget")
        if budget is None:
            budget = self.getConfigValue(self._NONCONVEX_USER_CONFIG_SECTION, self._BREAKPOINT_BUDGET_KEY, self._BREAKPOINT_BUDGET_DEFAULT, int)

        solver = NonconvexSolver(budget)
        result = solver.solve(treeFile.tree, unaries, weights)
        logger.debug("Largest message: %d breakpoints, %d edges over the breakpoint law.", result.statistics.MaxMessageSize, len(result.statistics.violations()))
        return result.x, result.energy

# extension area

from tvtree.app.manifest import manifest

# commands
manifest.insert(Tv1dCommand, "tv1d", help = "exact 1D total variation solve on a chain or tree")
