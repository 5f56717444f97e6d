"""
Scaling benchmarks of the 1D solvers on seeded synthetic signals.

Instances are generated from `(seed, n)` only, so repeated runs time identical inputs; every instance is identified by a sha256
hash of its data. Times are the median over the repetitions, the empirical complexity is the slope of a log-log regression.
"""

from typing import Callable, List, NamedTuple, Sequence, Tuple

from tvtree.convextree import ConvexPwq, solve_convex_tree
from tvtree.dnc import solve_fast, solve_hochbaum
from tvtree.nonconvex import solve_nonconvex
from tvtree.pwl import UnaryPwl
from tvtree.quadchain import ClipChain, solve_quad_chain
from tvtree.tree import Tree, ConvexWeights, TruncatedWeights
from tvtree.tools import TvInputError

from scipy.stats import linregress

import hashlib
import logging
import time

import numpy as np

logger = logging.getLogger(__name__)

SOLVERS = ("quad", "pwl", "pwq", "pwl-fast", "nonconvex")
SIGNALS = ("sine", "step")

# quadratic part of the piecewise-quadratic unaries
PWQ_QUADRATIC = 1e-6

class BenchInstance(NamedTuple):
    solverId: str
    n: int
    signal: np.ndarray
    hash: str
    run: Callable[[], np.ndarray]

class BenchRow(NamedTuple):
    n: int
    seconds: float
    hash: str

class ScalingFit(NamedTuple):
    slope: float
    intercept: float
    rvalue: float

def makeSignal(n: int, signal: str, rng: np.random.Generator, sigma: float = 0.1) -> np.ndarray:
    """ Two periods of a sine or a four level staircase on `[0, 1)`, plus Gaussian noise of deviation `sigma`. """
    t = np.arange(n) / n
    if signal == "sine":
        clean = np.sin(4.0 * np.pi * t)
    elif signal == "step":
        clean = np.floor(4.0 * t) / 3.0
    else:
        raise TvInputError("Unknown signal '{}', expected one of '{}'.".format(signal, ", ".join(SIGNALS)))
    return clean + rng.normal(scale = sigma, size = n)

def instanceHash(solverId: str, signal: np.ndarray, weight: float) -> str:
    digest = hashlib.sha256()
    digest.update(solverId.encode("utf-8"))
    digest.update(np.asarray(signal, dtype = "<f8").tobytes())
    digest.update(np.asarray([weight], dtype = "<f8").tobytes())
    return digest.hexdigest()

def _doubleWell(center: float) -> UnaryPwl:
    """ `min(|x - c + ½|, |x - c - ½|)`. """
    return UnaryPwl((-1.0, 1.0, -1.0, 1.0), (center - 0.5, center, center + 0.5), (center - 0.5, 0.0))

def buildInstance(solverId: str, n: int, signal: str, rng: np.random.Generator, sigma: float = 0.1) -> BenchInstance:
    """ Denoising instance of the given solver family: weight `n/500` for quadratic data, `200/n` for absolute data terms. """
    if solverId not in SOLVERS:
        raise TvInputError("Unknown solver '{}', expected one of '{}'.".format(solverId, ", ".join(SOLVERS)))
    if n < 2:
        raise TvInputError("Benchmark sizes have to be at least 2, got '{}'.".format(n))

    f = makeSignal(n, signal, rng, sigma)

    if solverId == "quad":
        weight = n / 500.0
        a = np.ones(n)
        w = np.full(n - 1, weight)
        workspace = ClipChain(n)
        run = lambda: solve_quad_chain(a, f, -w, w, workspace = workspace)
    else:
        weight = 200.0 / n
        w = np.full(n - 1, weight)
        tree = Tree.chain(n)
        if solverId in ("pwl", "pwl-fast"):
            unaries = [UnaryPwl.absolute(value) for value in f]
            solver = solve_hochbaum if solverId == "pwl" else solve_fast
            run = lambda: solver(unaries, -w, w)
        elif solverId == "pwq":
            unaries = [ConvexPwq.l1Tether(value, value, 1.0 / PWQ_QUADRATIC) for value in f]
            weights = ConvexWeights.chain(-w, w)
            run = lambda: solve_convex_tree(tree, unaries, weights).x
        else:
            unaries = [_doubleWell(value) for value in f]
            weights = TruncatedWeights(np.append(w, 0.0))
            run = lambda: solve_nonconvex(tree, unaries, weights).x

    return BenchInstance(solverId, n, f, instanceHash(solverId, f, weight), run)

def run_scaling_bench(solverId: str, sizes: Sequence[int], reps: int = 3, seed: int = 42, signal: str = "sine",
        sigma: float = 0.1) -> List[BenchRow]:
    """ Median wall time of `reps` solves per size. The instance of size `n` depends on `(seed, n)` only. """
    sizes = [int(size) for size in sizes]
    if not sizes:
        raise TvInputError("No benchmark sizes given.")
    if any(later <= earlier for earlier, later in zip(sizes, sizes[1:])):
        raise TvInputError("Benchmark sizes have to be ascending, got '{}'.".format(sizes))
    if reps < 1:
        raise TvInputError("At least one repetition is needed, got '{}'.".format(reps))

    rows = list()
    for n in sizes:
        instance = buildInstance(solverId, n, signal, np.random.default_rng([seed, n]), sigma)
        logger.info("Benchmark instance %s n=%d: %s", solverId, n, instance.hash)

        times = [timeSolve(instance.run)[1] for _ in range(reps)]

        rows.append(BenchRow(n, float(np.median(times)), instance.hash))
        logger.debug("Solver %s n=%d: median %.6f s over %d runs.", solverId, n, rows[-1].seconds, reps)
    return rows

def fitScalingSlope(rows: Sequence[BenchRow]) -> ScalingFit:
    """ Least squares slope of `log t` over `log n`. """
    if len(rows) < 2:
        raise TvInputError("A scaling fit needs at least two sizes, got '{}'.".format(len(rows)))
    result = linregress(np.log([row.n for row in rows]), np.log([max(row.seconds, 1e-12) for row in rows]))
    return ScalingFit(float(result.slope), float(result.intercept), float(result.rvalue))

def plotScaling(rows: Sequence[BenchRow], path: str, title: str = ""):
    """ Log-log plot of the median times with the fitted slope, written as SVG or PDF depending on `path`. """
    from matplotlib.figure import Figure

    fit = fitScalingSlope(rows)
    sizes = np.array([row.n for row in rows], dtype = float)

    figure = Figure(figsize = (5, 4))
    axes = figure.add_subplot(1, 1, 1)
    axes.loglog(sizes, [row.seconds for row in rows], "o-", label = "median time")
    axes.loglog(sizes, np.exp(fit.intercept) * sizes ** fit.slope, "--", label = "slope {:.3f}".format(fit.slope))
    axes.set_xlabel("n")
    axes.set_ylabel("seconds")
    if title:
        axes.set_title(title)
    axes.legend()
    figure.savefig(path)

def timeSolve(function: Callable[[], object]) -> Tuple[object, float]:
    started = time.perf_counter()
    result = function()
    return result, time.perf_counter() - started
