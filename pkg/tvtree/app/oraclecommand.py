"""
Extension which adds the `oracle` subcommand: seeded cross-checks of the exact solvers against each other and against brute force.

Checks
------
`convex`: median pivoting, subsampled divide and conquer and tree message passing agree on random chains; solutions lie on breakpoints.
`exhaustive`: the convex tree solver matches full enumeration over the breakpoints on chains of at most 5 nodes.
`nonconvex`: the truncated TV solver is at least as good as dynamic programming on a refined label grid and keeps the breakpoint law.
`binary`: the binary cut matches full enumeration of `{0, 1}^n`.
`sort`: the forward pass of the sort fixture returns its inputs in order.

Prints `<check> <passed>/<count>` per check and fails with exit code 1 on any mismatch.
"""
from argparse import ArgumentParser, Namespace
from typing import Callable, Dict, List, Optional

from tvtree.convextree import solve_convex_tree
from tvtree.dnc import binary_cut, solve_fast, solve_hochbaum
from tvtree.nonconvex import NonconvexSolver
from tvtree.oracle import GridOracleSpec, SortFixture, discrete_viterbi, exhaustive_binary, exhaustive_grid, randomChainInstance, randomTreeInstance
from tvtree.tree import convexEnergy

import bisect
import logging

import numpy as np

# extension dependencies
from tvtree.app.core import SolverCommand, RunConfig

rootLogger = logging.getLogger("tvtree")

logger = rootLogger.getChild(__name__)

CHECK_CONVEX = "convex"
CHECK_EXHAUSTIVE = "exhaustive"
CHECK_NONCONVEX = "nonconvex"
CHECK_BINARY = "binary"
CHECK_SORT = "sort"

CHECKS = (CHECK_CONVEX, CHECK_EXHAUSTIVE, CHECK_NONCONVEX, CHECK_BINARY, CHECK_SORT)

ENERGY_TOLERANCE = 1e-9

def _close(a: float, b: float) -> bool:
    return abs(a - b) <= ENERGY_TOLERANCE * max(1.0, abs(a), abs(b))

class OracleCommand(SolverCommand):
    """ Runs the solver cross-checks on seeded random instances. """

    _COUNT_DEFAULT = 20
    _N_DEFAULT = 10
    _STEP_DEFAULT = 1e-2

    _EXHAUSTIVE_MAX_NODES = 5
    _BINARY_MAX_NODES = 12
    _SORT_MAX_INPUTS = 32

    @classmethod
    def configureParser(cls, parser: ArgumentParser):
        parser.add_argument("--check", choices = CHECKS + ("all",), help = "check to run, all by default")
        parser.add_argument("--count", type = int, help = "random instances per check")
        parser.add_argument("--n", type = int, help = "nodes per instance")
        parser.add_argument("--seed", type = int, help = "seed of the instance generation")
        parser.add_argument("--step", type = float, help = "label grid step of the non-convex check")

    def __init__(self, context):
        super().__init__(context)

        self._checks: Dict[str, Callable[[np.random.Generator, int, RunConfig], Optional[str]]] = {
            CHECK_CONVEX: self.checkConvex,
            CHECK_EXHAUSTIVE: self.checkExhaustive,
            CHECK_NONCONVEX: self.checkNonconvex,
            CHECK_BINARY: self.checkBinary,
            CHECK_SORT: self.checkSort,
        }

    def execute(self, arguments: Namespace) -> int:
        runConfig = self.runConfig(arguments)
        count = runConfig.getInt("count", self._COUNT_DEFAULT)
        n = max(runConfig.getInt("n", self._N_DEFAULT), 1)
        seed = self.seed(runConfig)
        selected = runConfig.get("check", "all")
        names = CHECKS if selected == "all" else (selected,)

        logger.info("Oracle checks %s: %d instances of %d nodes, seed %d.", ", ".join(names), count, n, seed)

        failures = 0
        for name in names:
            rng = np.random.default_rng([seed, CHECKS.index(name)])
            mismatches: List[str] = list()
            for index in range(count):
                mismatch = self._checks[name](rng, n, runConfig)
                if mismatch:
                    logger.warning("Check %s instance %d: %s", name, index, mismatch)
                    mismatches.append(mismatch)

            failures += len(mismatches)
            self.writeLine("{} {}/{}".format(name, count - len(mismatches), count))

        return 0 if failures == 0 else 1

    def checkConvex(self, rng: np.random.Generator, n: int, runConfig: RunConfig) -> Optional[str]:
        instance = randomChainInstance(rng, n)
        tree, weights = instance.Tree, instance.convexWeights()

        solutions = {
            "median": solve_hochbaum(instance.unaries, instance.lower, instance.upper),
            "fast": solve_fast(instance.unaries, instance.lower, instance.upper),
            "tree": solve_convex_tree(tree, instance.unaries, weights).x,
        }
        energies = {name: convexEnergy(tree, instance.unaries, weights, x) for name, x in solutions.items()}

        reference = energies["tree"]
        for name, energy in energies.items():
            if not _close(energy, reference):
                return "{} energy {} differs from the tree solver energy {}".format(name, energy, reference)

        breakpoints = instance.breakpoints()
        for name, x in solutions.items():
            distance = np.min(np.abs(np.asarray(x)[:, None] - breakpoints[None, :]), axis = 1)
            if np.any(distance > ENERGY_TOLERANCE * (1.0 + np.abs(x))):
                return "{} solution leaves the breakpoint set".format(name)
        return None

    def checkExhaustive(self, rng: np.random.Generator, n: int, runConfig: RunConfig) -> Optional[str]:
        instance = randomChainInstance(rng, min(n, self._EXHAUSTIVE_MAX_NODES), maxBreaks = 1, integer = True)
        tree, weights = instance.Tree, instance.convexWeights()

        energy = solve_convex_tree(tree, instance.unaries, weights).energy
        _, bruteForce = exhaustive_grid(tree, instance.unaries, weights, instance.breakpoints())
        if not _close(energy, bruteForce):
            return "solver energy {} differs from the enumerated minimum {}".format(energy, bruteForce)
        return None

    def checkNonconvex(self, rng: np.random.Generator, n: int, runConfig: RunConfig) -> Optional[str]:
        instance = randomTreeInstance(rng, n, truncated = True)
        result = NonconvexSolver().solve(instance.tree, instance.unaries, instance.weights)

        breakpoints = instance.breakpoints()
        labels = GridOracleSpec.covering(breakpoints, runConfig.getFloat("step", self._STEP_DEFAULT)).labels(breakpoints)
        _, gridEnergy = discrete_viterbi(instance.tree, instance.unaries, instance.weights, labels)

        if result.energy > gridEnergy + ENERGY_TOLERANCE * max(1.0, abs(gridEnergy)):
            return "solver energy {} exceeds the grid minimum {}".format(result.energy, gridEnergy)
        violations = result.statistics.violations()
        if violations:
            return "{} edges break the breakpoint count law".format(len(violations))
        return None

    def checkBinary(self, rng: np.random.Generator, n: int, runConfig: RunConfig) -> Optional[str]:
        instance = randomChainInstance(rng, min(n, self._BINARY_MAX_NODES))
        breakpoints = instance.breakpoints()
        lam = float(rng.choice(breakpoints)) if rng.random() < 0.5 else float(rng.uniform(breakpoints[0] - 1.0, breakpoints[-1] + 1.0))

        coefficients = [unary.Slopes[bisect.bisect_left(unary.Breaks, lam)] for unary in instance.unaries]
        expected = exhaustive_binary(coefficients, instance.lower, instance.upper, tolerance = 1e-12)
        labels = binary_cut(instance.unaries, instance.lower, instance.upper, lam)
        if not np.array_equal(labels, expected):
            return "cut at {} gives {} instead of {}".format(lam, labels.tolist(), expected.tolist())
        return None

    def checkSort(self, rng: np.random.Generator, n: int, runConfig: RunConfig) -> Optional[str]:
        inputs = rng.uniform(0.1, 10.0, size = int(rng.integers(4, self._SORT_MAX_INPUTS + 1)))
        result = SortFixture(inputs).sorted()
        if not np.array_equal(result, np.sort(inputs)):
            return "forward pass returned {} for {}".format(result.tolist(), inputs.tolist())
        return None

# extension area

from tvtree.app.manifest import manifest

# commands
manifest.insert(OracleCommand, "oracle", help = "cross-check the exact solvers on seeded random instances")
