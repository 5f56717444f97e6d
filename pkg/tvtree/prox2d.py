"""
Primal-dual image restoration on `m x n` grids by row/column decomposition.

The grid energy is split into horizontal and vertical chains. Every iteration solves the proximal maps of the row and column parts
exactly with the 1D chain solvers, independently per row or column, inside a first order primal-dual loop.

Implementations
---------------
`Grid2D`: image values with horizontal and vertical edge weights.
`UnaryGrid`: per-pixel piecewise-linear unaries with truncated TV weights.
`PdState`, `ConvergenceLog`, `RowSolverPool`

Operations
----------
`prox_tv_quadratic_rows`, `prox_tv_conjugate_cols`, `solve_tvl2`, `solve_tvl1`, `solve_tv_points`, `solve_ttv_nonconvex`
"""

from concurrent.futures import ThreadPoolExecutor
from typing import Callable, Iterator, List, NamedTuple, Optional, Sequence, Tuple

from tvtree.convextree import ConvexPwq, solve_convex_tree
from tvtree.event import Event
from tvtree.nonconvex import NonconvexSolver
from tvtree.pwl import PwlFunction, sum_many
from tvtree.quadchain import ClipChain, solve_quad_chain
from tvtree.tree import Tree, ConvexWeights, TruncatedWeights
from tvtree.tools import TvInputError, BreakpointBudgetError, UnboundedEnergyError

import logging
import math
import os
import threading
import time

import numpy as np

logger = logging.getLogger(__name__)

class Grid2D:
    """ Image values `m x n` with non-negative weights on the `m x (n-1)` horizontal and `(m-1) x n` vertical edges. """

    def __init__(self, values, horizontal = 0.0, vertical = 0.0):
        self._values = np.array(values, dtype = float)
        if self._values.ndim != 2 or min(self._values.shape) < 1:
            raise TvInputError("Grid values need a two dimensional shape of at least 1 x 1, got '{}'.".format(self._values.shape))

        m, n = self._values.shape
        try:
            self._horizontal = np.array(np.broadcast_to(np.asarray(horizontal, dtype = float), (m, n - 1)))
            self._vertical = np.array(np.broadcast_to(np.asarray(vertical, dtype = float), (m - 1, n)))
        except ValueError as ex:
            raise TvInputError("Edge weights don't fit a '{}' grid.".format(self._values.shape)) from ex

        if np.any(self._horizontal < 0) or np.any(self._vertical < 0):
            raise TvInputError("Grid edge weights have to be non-negative.")

    @property
    def Values(self) -> np.ndarray:
        return self._values

    @property
    def Horizontal(self) -> np.ndarray:
        return self._horizontal

    @property
    def Vertical(self) -> np.ndarray:
        return self._vertical

    @property
    def Shape(self) -> Tuple[int, int]:
        return self._values.shape

    def withValues(self, values) -> "Grid2D":
        return Grid2D(values, self._horizontal, self._vertical)

    def transposed(self) -> "Grid2D":
        return Grid2D(self._values.T, self._vertical.T, self._horizontal.T)

    def tvHorizontal(self, x: np.ndarray) -> float:
        return float(np.sum(self._horizontal * np.abs(np.diff(x, axis = 1))))

    def tvVertical(self, x: np.ndarray) -> float:
        return float(np.sum(self._vertical * np.abs(np.diff(x, axis = 0))))

def tvl2Energy(grid: Grid2D, x: np.ndarray) -> float:
    """ `TV_h(x) + TV_v(x) + ½ |x - f|²`. """
    return grid.tvHorizontal(x) + grid.tvVertical(x) + 0.5 * float(np.sum((x - grid.Values) ** 2))

def tvl1Energy(grid: Grid2D, x: np.ndarray) -> float:
    """ `TV_h(x) + TV_v(x) + |x - f|₁`. """
    return grid.tvHorizontal(x) + grid.tvVertical(x) + float(np.sum(np.abs(x - grid.Values)))

class RowSolverPool:
    """ Runs independent row solves on a thread pool. Every worker thread owns its chain solver scratch.

    Row functions must only read shared inputs and write their own output row.
    """

    def __init__(self, threads: int = 0):
        self._threads = int(threads) if threads and threads > 0 else (os.cpu_count() or 1)
        self._executor = ThreadPoolExecutor(max_workers = self._threads, thread_name_prefix = "tvtree-rows") if self._threads > 1 else None
        self._local = threading.local()

    @property
    def ThreadCount(self) -> int:
        return self._threads

    def scratch(self) -> ClipChain:
        """ Chain workspace of the calling thread. """
        workspace = getattr(self._local, "workspace", None)
        if workspace is None:
            workspace = ClipChain()
            self._local.workspace = workspace
        return workspace

    def run(self, function: Callable[[int], None], count: int):
        """ Calls `function(i)` for `i < count` and returns when all calls are done. Raises the first failure. """
        if self._executor is None or count < 2:
            for i in range(count):
                function(i)
        else:
            for _ in self._executor.map(function, range(count)):
                pass

    def close(self):
        if self._executor is not None:
            self._executor.shutdown(wait = True)
            self._executor = None

    def __enter__(self):
        return self

    def __exit__(self, *args):
        self.close()

_serialPool = RowSolverPool(1)

class ConvergenceRecord(NamedTuple):
    k: int
    energy: float
    gap: float
    seconds: float
    best: float

class ConvergenceLog:
    """ Append-only per-iteration record of primal energy, gap and wall time, with the best energy so far. """

    HEADER = ("k", "energy", "gap", "seconds")

    def __init__(self):
        self._records: List[ConvergenceRecord] = list()
        self.Aborted: Optional[str] = None

    def append(self, k: int, energy: float, gap: float, seconds: float) -> ConvergenceRecord:
        best = min(self._records[-1].best, energy) if self._records else energy
        record = ConvergenceRecord(int(k), float(energy), float(gap), float(seconds), float(best))
        self._records.append(record)
        return record

    @property
    def Records(self) -> Tuple[ConvergenceRecord, ...]:
        return tuple(self._records)

    @property
    def Last(self) -> Optional[ConvergenceRecord]:
        return self._records[-1] if self._records else None

    def __len__(self):
        return len(self._records)

    def __iter__(self) -> Iterator[ConvergenceRecord]:
        return iter(self._records)

    @property
    def Energies(self) -> np.ndarray:
        return np.array([record.energy for record in self._records])

    @property
    def Gaps(self) -> np.ndarray:
        return np.array([record.gap for record in self._records])

    @property
    def BestEnergies(self) -> np.ndarray:
        return np.array([record.best for record in self._records])

    def rows(self) -> List[Tuple[int, float, float, float]]:
        return [(record.k, record.energy, record.gap, record.seconds) for record in self._records]

    def __getstate__(self):
        return {"rows": [list(row) for row in self.rows()], "aborted": self.Aborted}

    def __setstate__(self, state):
        self._records = list()
        self.Aborted = state.get("aborted", None)
        for k, energy, gap, seconds in state.get("rows", ()):
            self.append(k, energy, gap, seconds)

class PdState:
    """ Iterate of a primal-dual loop: primal `X` (`XH`, `XV` for the split non-convex model), dual `Y`, extrapolations and steps. """

    def __init__(self, x: np.ndarray, y: np.ndarray, tau: float, sigma: float):
        self.K = 0
        self.X = x
        self.XBar = x.copy()
        self.Y = y
        self.YBar = y.copy()
        self.XH: Optional[np.ndarray] = None
        self.XV: Optional[np.ndarray] = None
        self.Tau = tau
        self.Sigma = sigma
        self.Theta = 1.0

class PdResult(NamedTuple):
    x: np.ndarray
    log: ConvergenceLog

def _quadRows(a: float, b: np.ndarray, weights: np.ndarray, pool: RowSolverPool) -> np.ndarray:
    """ Solves `min ½ a x² - b x + Σ w |Δx|` independently on every row of `b`. """
    rows, n = b.shape
    out = np.empty_like(b)
    coefficients = np.full(n, a)

    def solveRow(r: int):
        solve_quad_chain(coefficients, b[r], -weights[r], weights[r], workspace = pool.scratch(), out = out[r])

    pool.run(solveRow, rows)
    return out

def _checkShape(grid: Grid2D, array: np.ndarray, name: str) -> np.ndarray:
    array = np.asarray(array, dtype = float)
    if array.shape != grid.Shape:
        raise TvInputError("'{}' has shape '{}', the grid has '{}'.".format(name, array.shape, grid.Shape))
    return array

def prox_tv_quadratic_rows(xi: np.ndarray, grid: Grid2D, tau: float, pool: Optional[RowSolverPool] = None) -> np.ndarray:
    """ `prox_{τ (TV_h + ½|· - f|²)}(ξ)`: per row `argmin TV_h(x) + (1 + 1/τ)/2 |x - (f + ξ/τ)/(1 + 1/τ)|²`. """
    if not tau > 0:
        raise TvInputError("Primal step has to be positive, got '{}'.".format(tau))
    xi = _checkShape(grid, xi, "xi")
    return _quadRows(1.0 + 1.0 / tau, grid.Values + xi / tau, grid.Horizontal, pool or _serialPool)

def prox_tv_conjugate_cols(eta: np.ndarray, grid: Grid2D, sigma: float, pool: Optional[RowSolverPool] = None) -> np.ndarray:
    """ `prox_{σ TV_v*}(η) = η - σ argmin_x TV_v(x) + σ/2 |x - η/σ|²` by the Moreau identity, solved per column. """
    if not sigma > 0:
        raise TvInputError("Dual step has to be positive, got '{}'.".format(sigma))
    eta = _checkShape(grid, eta, "eta")
    columns = _quadRows(sigma, np.ascontiguousarray(eta.T), np.ascontiguousarray(grid.Vertical.T), pool or _serialPool)
    return eta - sigma * columns.T

def tvl2Dual(grid: Grid2D, y: np.ndarray, pool: Optional[RowSolverPool] = None) -> float:
    """ Exact dual value `min_x <x, y> + TV_h(x) + ½|x - f|²` at a feasible `y`; the inner problem is one row solve at `f - y`. """
    target = grid.Values - y
    x = _quadRows(1.0, target, grid.Horizontal, pool or _serialPool)
    return grid.tvHorizontal(x) + 0.5 * float(np.sum((x - target) ** 2)) + float(np.sum(grid.Values * y)) - 0.5 * float(np.sum(y * y))

def _finishIteration(log: ConvergenceLog, state: PdState, energy: float, gap: float, started: float, onIteration: Optional[Event]) -> ConvergenceRecord:
    record = log.append(state.K, energy, gap, time.perf_counter() - started)
    logger.debug("Iteration %d: energy %.12g, gap %.12g.", record.k, record.energy, record.gap)
    if onIteration is not None:
        onIteration.fire(state, record)
    return record

def solve_tvl2(grid: Grid2D, iters: int, accel: bool = True, gapThreshold: float = 0.0, pool: Optional[RowSolverPool] = None,
        onIteration: Optional[Event] = None) -> PdResult:
    """ ROF denoising `min TV(x) + ½|x - f|²` by the primal-dual row/column splitting.

    With `accel` the steps follow the strong convexity schedule `θ = 1/sqrt(1 + 2τ)`, `τ ← θτ`, `σ ← σ/θ`, keeping `τσ = 1`.
    The logged gap is the exact primal-dual gap.
    """
    if iters < 1:
        raise TvInputError("At least one iteration is needed, got '{}'.".format(iters))

    pool = pool or _serialPool
    state = PdState(grid.Values.copy(), np.zeros(grid.Shape), 1.0, 1.0)
    log = ConvergenceLog()
    started = time.perf_counter()

    for k in range(1, iters + 1):
        state.K = k
        state.Y = prox_tv_conjugate_cols(state.Y + state.Sigma * state.XBar, grid, state.Sigma, pool)
        previous = state.X
        state.X = prox_tv_quadratic_rows(state.X - state.Tau * state.Y, grid, state.Tau, pool)

        if accel:
            state.Theta = 1.0 / math.sqrt(1.0 + 2.0 * state.Tau)
            state.Tau *= state.Theta
            state.Sigma /= state.Theta
        state.XBar = state.X + state.Theta * (state.X - previous)

        energy = tvl2Energy(grid, state.X)
        gap = energy - tvl2Dual(grid, state.Y, pool)
        _finishIteration(log, state, energy, gap, started, onIteration)

        if gapThreshold > 0 and gap <= gapThreshold:
            break

    logger.info("TV-l2 primal-dual finished after %d iterations, energy %.12g.", state.K, log.Last.energy)
    return PdResult(state.X, log)

def prox_tvl1_rows(xi: np.ndarray, grid: Grid2D, tau: float, pool: Optional[RowSolverPool] = None) -> np.ndarray:
    """ `prox_{τ (TV_h + |· - f|₁)}(ξ)`: per row a convex tree solve with the unaries `|x - f| + (x - ξ)²/2τ`. """
    if not tau > 0:
        raise TvInputError("Primal step has to be positive, got '{}'.".format(tau))
    xi = _checkShape(grid, xi, "xi")
    pool = pool or _serialPool
    m, n = grid.Shape
    tree = Tree.chain(n)
    out = np.empty((m, n))

    def solveRow(r: int):
        weights = ConvexWeights.chain(-grid.Horizontal[r], grid.Horizontal[r])
        unaries = [ConvexPwq.l1Tether(grid.Values[r, c], xi[r, c], tau) for c in range(n)]
        out[r] = solve_convex_tree(tree, unaries, weights).x

    pool.run(solveRow, m)
    return out

def solve_tvl1(grid: Grid2D, iters: int, accelerationGamma: float = 0.0, pool: Optional[RowSolverPool] = None,
        onIteration: Optional[Event] = None) -> PdResult:
    """ TV-ℓ1 restoration `min TV(x) + |x - f|₁` by the primal-dual row/column splitting.

    The model is not strongly convex; a positive `accelerationGamma` still applies the varying step schedule with that modulus,
    without a convergence guarantee. The gap column is NaN.
    """
    if iters < 1:
        raise TvInputError("At least one iteration is needed, got '{}'.".format(iters))

    pool = pool or _serialPool
    state = PdState(grid.Values.copy(), np.zeros(grid.Shape), 1.0, 1.0)
    log = ConvergenceLog()
    started = time.perf_counter()

    for k in range(1, iters + 1):
        state.K = k
        state.Y = prox_tv_conjugate_cols(state.Y + state.Sigma * state.XBar, grid, state.Sigma, pool)
        previous = state.X
        state.X = prox_tvl1_rows(state.X - state.Tau * state.Y, grid, state.Tau, pool)

        if accelerationGamma > 0:
            state.Theta = 1.0 / math.sqrt(1.0 + 2.0 * accelerationGamma * state.Tau)
            state.Tau *= state.Theta
            state.Sigma /= state.Theta
        state.XBar = state.X + state.Theta * (state.X - previous)

        _finishIteration(log, state, tvl1Energy(grid, state.X), math.nan, started, onIteration)

    logger.info("TV-l1 primal-dual finished after %d iterations, energy %.12g.", state.K, log.Last.energy)
    return PdResult(state.X, log)

def _gradient(x: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    return np.diff(x, axis = 1), np.diff(x, axis = 0)

def _gradientAdjoint(horizontal: np.ndarray, vertical: np.ndarray, shape: Tuple[int, int]) -> np.ndarray:
    result = np.zeros(shape)
    result[:, :-1] -= horizontal
    result[:, 1:] += horizontal
    result[:-1, :] -= vertical
    result[1:, :] += vertical
    return result

def solve_tv_points(grid: Grid2D, iters: int, dataTerm: str = "l2", onIteration: Optional[Event] = None) -> PdResult:
    """ Per-pixel baseline: primal-dual on forward differences with steps `τ = σ = 1/sqrt(8)` and the weights as dual bounds. """
    if dataTerm not in ("l1", "l2"):
        raise TvInputError("Unknown data term '{}'.".format(dataTerm))
    if iters < 1:
        raise TvInputError("At least one iteration is needed, got '{}'.".format(iters))

    f = grid.Values
    step = 1.0 / math.sqrt(8.0)
    energy = tvl2Energy if dataTerm == "l2" else tvl1Energy

    state = PdState(f.copy(), np.zeros(grid.Shape), step, step)
    dualH = np.zeros(grid.Horizontal.shape)
    dualV = np.zeros(grid.Vertical.shape)
    log = ConvergenceLog()
    started = time.perf_counter()

    for k in range(1, iters + 1):
        state.K = k
        gradH, gradV = _gradient(state.XBar)
        dualH = np.clip(dualH + step * gradH, -grid.Horizontal, grid.Horizontal)
        dualV = np.clip(dualV + step * gradV, -grid.Vertical, grid.Vertical)

        previous = state.X
        v = state.X - step * _gradientAdjoint(dualH, dualV, grid.Shape)
        if dataTerm == "l2":
            state.X = (v + step * f) / (1.0 + step)
        else:
            d = v - f
            state.X = f + np.sign(d) * np.maximum(np.abs(d) - step, 0.0)
        state.XBar = 2.0 * state.X - previous

        _finishIteration(log, state, energy(grid, state.X), math.nan, started, onIteration)

    return PdResult(state.X, log)

class UnaryGrid:
    """ Per-pixel piecewise-linear unaries of an `m x n` grid with truncated TV `min(w |Δx|, C)` on its edges. """

    def __init__(self, unaries: Sequence[Sequence[PwlFunction]], horizontal = 0.0, vertical = 0.0, truncation: float = math.inf):
        self._unaries: List[List[PwlFunction]] = [list(row) for row in unaries]
        m = len(self._unaries)
        n = len(self._unaries[0]) if m else 0
        if m < 1 or n < 1 or any(len(row) != n for row in self._unaries):
            raise TvInputError("Unary grid needs equal, non-empty rows.")
        for row in self._unaries:
            for unary in row:
                if not unary.HasAnchor:
                    raise TvInputError("Unary grid entries need anchors.")

        if not truncation > 0:
            raise TvInputError("Truncation has to be positive, got '{}'.".format(truncation))
        self._truncation = float(truncation)
        self._weights = Grid2D(np.zeros((m, n)), horizontal, vertical)

    @property
    def Unaries(self) -> List[List[PwlFunction]]:
        return self._unaries

    @property
    def Shape(self) -> Tuple[int, int]:
        return self._weights.Shape

    @property
    def Horizontal(self) -> np.ndarray:
        return self._weights.Horizontal

    @property
    def Vertical(self) -> np.ndarray:
        return self._weights.Vertical

    @property
    def Truncation(self) -> float:
        return self._truncation

    def transposed(self) -> "UnaryGrid":
        columns = [list(column) for column in zip(*self._unaries)]
        return UnaryGrid(columns, self.Vertical.T, self.Horizontal.T, self._truncation)

    def breakRange(self) -> Tuple[float, float]:
        """ Smallest and largest unary breakpoint. """
        breaks = [lam for row in self._unaries for unary in row for lam in unary.Breaks]
        if not breaks:
            raise TvInputError("Unary grid has no breakpoints, a disparity window can't be derived.")
        return min(breaks), max(breaks)

    def maxAbsSlope(self) -> float:
        return max(abs(slope) for row in self._unaries for unary in row for slope in unary.Slopes)

    def energy(self, x: np.ndarray) -> float:
        """ `Σ f_i(x_i) + Σ min(w |Δx|, C)` over both edge directions. """
        x = np.asarray(x, dtype = float)
        unary = math.fsum(unary.evaluate(x[r, c]) for r, row in enumerate(self._unaries) for c, unary in enumerate(row))
        horizontal = np.minimum(self.Horizontal * np.abs(np.diff(x, axis = 1)), self._truncation)
        vertical = np.minimum(self.Vertical * np.abs(np.diff(x, axis = 0)), self._truncation)
        return unary + float(np.sum(horizontal)) + float(np.sum(vertical))

class NonconvexPdResult(NamedTuple):
    xh: np.ndarray
    xv: np.ndarray
    y: np.ndarray
    log: ConvergenceLog
    x: np.ndarray

def _tether(knots: np.ndarray, xi: float, tau: float, wall: float) -> PwlFunction:
    """ Interpolant of `(z - ξ)²/2τ` on the knots, continued by walls of slope at least `wall` outside them. """
    values = (knots - xi) ** 2 / (2.0 * tau)
    if len(knots) > 1:
        first = (values[1] - values[0]) / (knots[1] - knots[0])
        last = (values[-1] - values[-2]) / (knots[-1] - knots[-2])
    else:
        first = last = 0.0
    return PwlFunction.fromPoints(knots, values, min(-wall, first), max(wall, last))

def _wallFunction(lo: float, hi: float, wall: float) -> PwlFunction:
    return PwlFunction((-wall, 0.0, wall), (lo, hi), (lo, 0.0))

class _NonconvexSweep:
    """ Row solves of one direction of the split stereo model, with precomputed knots and weights. """

    def __init__(self, grid: UnaryGrid, window: Tuple[float, float], breakpointBudget: int, pool: RowSolverPool):
        self._grid = grid
        self._window = window
        self._budget = breakpointBudget
        self._pool = pool

        m, n = grid.Shape
        lo, hi = window
        self._tree = Tree.chain(n)
        self._halves = [[unary.scaled(0.5) for unary in row] for row in grid.Unaries]
        self._knots = [[np.unique(np.clip(np.concatenate([np.asarray(unary.Breaks), [lo, hi]]), lo, hi)) for unary in row] for row in grid.Unaries]
        self._weights = [TruncatedWeights(np.append(grid.Horizontal[r], 0.0), np.full(n, grid.Truncation)) for r in range(m)]

    def _solveRows(self, rowUnaries: Callable[[int], List[PwlFunction]]) -> Tuple[np.ndarray, float]:
        """ Returns the row minimizers and the sum of the row minima. """
        m, n = self._grid.Shape
        out = np.empty((m, n))
        energies = np.empty(m)

        def solveRow(r: int):
            result = NonconvexSolver(self._budget).solve(self._tree, rowUnaries(r), self._weights[r])
            out[r] = result.x
            energies[r] = result.energy

        self._pool.run(solveRow, m)
        return out, math.fsum(energies)

    def initial(self, wall: float) -> np.ndarray:
        """ Row solves of the full unaries, confined to the window. """
        walls = _wallFunction(self._window[0], self._window[1], wall)
        return self._solveRows(lambda r: [sum_many([unary, walls]) for unary in self._grid.Unaries[r]])[0]

    def prox(self, xi: np.ndarray, tau: float, wall: float) -> np.ndarray:
        """ Rows of `argmin Ψ(x) + |x - ξ|²/2τ` with the tether replaced by its interpolant on the knots. """
        return self._solveRows(lambda r: [sum_many([half, _tether(knots, xi[r, c], tau, wall)])
            for c, (half, knots) in enumerate(zip(self._halves[r], self._knots[r]))])[0]

    def bound(self, tilt: np.ndarray, wall: float) -> float:
        """ `min_x Ψ(x) + <tilt, x>` over the window, `-inf` when unbounded. """
        walls = _wallFunction(self._window[0], self._window[1], wall)
        try:
            return self._solveRows(lambda r: [sum_many([half.addLinear(tilt[r, c]), walls]) for c, half in enumerate(self._halves[r])])[1]
        except UnboundedEnergyError:
            return -math.inf

def solve_ttv_nonconvex(grid: UnaryGrid, iters: int, tau0: float = 300.0, wallFactor: float = 4.0,
        window: Optional[Tuple[float, float]] = None, boundEvery: int = 1, breakpointBudget: int = NonconvexSolver.DEFAULT_BREAKPOINT_BUDGET,
        pool: Optional[RowSolverPool] = None, onIteration: Optional[Event] = None) -> NonconvexPdResult:
    """ Truncated TV with non-convex piecewise-linear unaries by primal-dual iterations on the split `Ψ_h(x_h) + Ψ_v(x_v)`.

    Each part carries half of every unary; the rows of `Ψ_h` and the columns of `Ψ_v` are solved exactly by the non-convex tree
    solver after adding a piecewise-linear interpolant of the proximal tether. Steps are `τ_k = τ0/k`, `σ_k = 1/(2 τ_k)`, `θ = 1`.
    Convergence is not guaranteed; the log keeps the best energy over `x_h`, `x_v` and their mean, and the gap to the Lagrangian
    lower bound evaluated every `boundEvery` iterations (0 disables it). A breakpoint budget failure ends the loop with a partial log.
    """
    if iters < 1:
        raise TvInputError("At least one iteration is needed, got '{}'.".format(iters))
    if not tau0 > 0:
        raise TvInputError("Initial primal step has to be positive, got '{}'.".format(tau0))

    pool = pool or _serialPool
    lo, hi = window if window is not None else grid.breakRange()
    if not lo < hi:
        raise TvInputError("Empty disparity window '[{}, {}]'.".format(lo, hi))

    maxWeight = max(float(grid.Horizontal.max(initial = 0.0)), float(grid.Vertical.max(initial = 0.0)))
    wall = wallFactor * (1.0 + grid.maxAbsSlope()) + 2.0 * maxWeight

    rows = _NonconvexSweep(grid, (lo, hi), breakpointBudget, pool)
    columns = _NonconvexSweep(grid.transposed(), (lo, hi), breakpointBudget, pool)

    log = ConvergenceLog()
    started = time.perf_counter()

    xh = rows.initial(wall)
    xv = columns.initial(wall).T
    state = PdState(0.5 * (xh + xv), np.zeros(grid.Shape), tau0, 1.0 / (2.0 * tau0))
    state.XH, state.XV = xh, xv

    def candidates(xh, xv):
        best = None
        for x in (xh, xv, 0.5 * (xh + xv)):
            energy = grid.energy(x)
            if best is None or energy < best[0]:
                best = (energy, x)
        return best

    bestEnergy, bestX = candidates(xh, xv)
    _finishIteration(log, state, bestEnergy, math.nan, started, onIteration)

    for k in range(1, iters + 1):
        state.K = k
        state.Tau = tau0 / k
        state.Sigma = 1.0 / (2.0 * state.Tau)

        try:
            xh = rows.prox(state.XH - state.Tau * state.YBar, state.Tau, wall)
            xv = columns.prox(np.ascontiguousarray((state.XV + state.Tau * state.YBar).T), state.Tau, wall).T
        except BreakpointBudgetError as ex:
            log.Aborted = str(ex)
            logger.warning("Iteration %d aborted: %s", k, ex)
            break

        state.XH, state.XV = xh, xv
        previous = state.Y
        state.Y = state.Y + state.Sigma * (xh - xv)
        state.YBar = state.Y + state.Theta * (state.Y - previous)

        energy, x = candidates(xh, xv)
        if energy < bestEnergy:
            bestEnergy, bestX = energy, x
        state.X = x

        gap = math.nan
        if boundEvery and k % boundEvery == 0:
            boundWall = wall + float(np.abs(state.Y).max(initial = 0.0))
            lower = rows.bound(state.Y, boundWall) + columns.bound(np.ascontiguousarray(-state.Y.T), boundWall)
            gap = bestEnergy - lower

        _finishIteration(log, state, energy, gap, started, onIteration)

    logger.info("Truncated TV primal-dual stopped after %d iterations, best energy %.12g.", state.K, bestEnergy)
    return NonconvexPdResult(state.XH, state.XV, state.Y, log, bestX)
