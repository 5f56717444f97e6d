"""
Brute force oracles, adversarial fixtures and random instance generators used to validate the exact solvers.

Implementations
---------------
`GridOracleSpec`, `SortFixture`, `ChainInstance`, `TreeInstance`

Operations
----------
`discrete_viterbi`, `exhaustive_grid`, `exhaustive_binary`, `minConvolutionOracle`, `randomChainInstance`, `randomTreeInstance`
"""

from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

from tvtree.convextree import forwardPass
from tvtree.pwl import PwlFunction, UnaryPwl
from tvtree.tree import Tree, ConvexWeights, TruncatedWeights, convexEnergy, truncatedEnergy, pairwiseConvex, ROOT_PARENT
from tvtree.tools import TvInputError

import itertools
import logging
import math

import numpy as np

logger = logging.getLogger(__name__)

Weights = Union[ConvexWeights, TruncatedWeights]

EXHAUSTIVE_BINARY_LIMIT = 20
EXHAUSTIVE_GRID_LIMIT = 6

def _unaryTable(unary, labels: np.ndarray) -> np.ndarray:
    if hasattr(unary, "evaluateMany"):
        return np.asarray(unary.evaluateMany(labels), dtype = float)
    return np.array([unary.evaluate(label) for label in labels], dtype = float)

def _edgeCost(weights: Weights, child: int, z: np.ndarray) -> np.ndarray:
    if isinstance(weights, ConvexWeights):
        return pairwiseConvex(z, weights.Lower[child], weights.Upper[child])
    return np.minimum(weights.Weights[child] * np.abs(z), weights.Truncations[child])

def _energy(tree: Tree, unaries, weights: Weights, x) -> float:
    if isinstance(weights, ConvexWeights):
        return convexEnergy(tree, unaries, weights, x)
    return truncatedEnergy(tree, unaries, weights, x)

def _edgeMessage(message: np.ndarray, labels: np.ndarray, weights: Weights, child: int) -> np.ndarray:
    """ `M(y) = min_x M̂(x) + f(y - x)` on the sorted label set by prefix and suffix minima. """
    if isinstance(weights, ConvexWeights):
        lower, upper = weights.Lower[child], weights.Upper[child]
        truncation = math.inf
    else:
        lower, upper = -weights.Weights[child], weights.Weights[child]
        truncation = weights.Truncations[child]

    # x <= y pays w⁺ (y - x), x >= y pays w⁻ (y - x)
    below = upper * labels + np.minimum.accumulate(message - upper * labels)
    above = lower * labels + np.minimum.accumulate((message - lower * labels)[::-1])[::-1]
    result = np.minimum(below, above)
    if math.isfinite(truncation):
        result = np.minimum(result, message.min() + truncation)
    return result

def discrete_viterbi(tree: Tree, unaries: Sequence, weights: Weights, labels: Sequence[float]) -> Tuple[np.ndarray, float]:
    """ Exact minimum of the energy over `labels^n` by dynamic programming, `O(n |labels|)` per edge.

    Backtracking takes the lowest minimizing label of each child given its parent.
    """
    labels = np.unique(np.asarray(labels, dtype = float))
    if labels.size == 0:
        raise TvInputError("The label set is empty.")
    if len(unaries) != tree.NodeCount:
        raise TvInputError("Expected '{}' unaries, got '{}'.".format(tree.NodeCount, len(unaries)))

    messages: List[Optional[np.ndarray]] = [None] * tree.NodeCount
    incoming = [np.zeros(labels.size) for _ in range(tree.NodeCount)]
    for node in tree.Order:
        messages[node] = _unaryTable(unaries[node], labels) + incoming[node]
        if node != tree.Root:
            incoming[tree.Parents[node]] += _edgeMessage(messages[node], labels, weights, node)

    index = np.empty(tree.NodeCount, dtype = int)
    index[tree.Root] = int(np.argmin(messages[tree.Root]))
    for node in reversed(tree.Order):
        if node != tree.Root:
            parentValue = labels[index[tree.Parents[node]]]
            index[node] = int(np.argmin(messages[node] + _edgeCost(weights, node, parentValue - labels)))

    x = labels[index]
    return x, _energy(tree, unaries, weights, x)

def exhaustive_grid(tree: Tree, unaries: Sequence, weights: Weights, labels: Sequence[float]) -> Tuple[np.ndarray, float]:
    """ Enumerates all of `labels^n` for `n <= 6`; returns the lexicographically first minimizer. """
    if tree.NodeCount > EXHAUSTIVE_GRID_LIMIT:
        raise TvInputError("Exhaustive grid search supports at most '{}' nodes, got '{}'.".format(EXHAUSTIVE_GRID_LIMIT, tree.NodeCount))

    labels = np.unique(np.asarray(labels, dtype = float))
    best, bestEnergy = None, math.inf
    for candidate in itertools.product(labels, repeat = tree.NodeCount):
        energy = _energy(tree, unaries, weights, candidate)
        if energy < bestEnergy:
            best, bestEnergy = candidate, energy
    return np.asarray(best), bestEnergy

def exhaustive_binary(coefficients: Sequence[float], lower: Sequence[float], upper: Sequence[float], tolerance: float = 0.0) -> np.ndarray:
    """ Lowest minimizer over `{0, 1}^n` of `Σ c_i y_i + Σ f_i(y_{i+1} - y_i)` by enumerating all `2^n` labelings.

    The lowest minimizer is the component-wise minimum of all labelings within `tolerance` of the optimum.
    """
    c = np.asarray(coefficients, dtype = float)
    n = len(c)
    if n > EXHAUSTIVE_BINARY_LIMIT:
        raise TvInputError("Exhaustive binary search supports at most '{}' nodes, got '{}'.".format(EXHAUSTIVE_BINARY_LIMIT, n))
    if n == 0:
        return np.zeros(0, dtype = int)

    lower = np.asarray(lower, dtype = float)[:n - 1]
    upper = np.asarray(upper, dtype = float)[:n - 1]

    codes = np.arange(2 ** n)
    y = (codes[:, None] >> np.arange(n)[None, :]) & 1
    z = np.diff(y, axis = 1)
    energies = y @ c + np.sum(np.where(z < 0, lower * z, upper * z), axis = 1)

    minimizers = y[energies <= energies.min() + tolerance]
    return minimizers.min(axis = 0).astype(int)

def minConvolutionOracle(h: PwlFunction, w: float, C: float, ys: Sequence[float], grid: Optional[Sequence[float]] = None) -> np.ndarray:
    """ `min_x h(x) + min(w|y - x|, C)` at every `y`, minimizing over the breakpoints of `h`, `y`, `y ± C/w` and an optional grid. """
    breaks = np.asarray(h.Breaks, dtype = float)
    extra = np.asarray(grid if grid is not None else [], dtype = float)
    values = list()
    for y in ys:
        candidates = [breaks, extra, np.array([y])]
        if w > 0 and math.isfinite(C):
            candidates.append(np.array([y - C / w, y + C / w]))
        xs = np.concatenate(candidates)
        values.append(float(np.min(h.evaluateMany(xs) + np.minimum(w * np.abs(y - xs), C))))
    return np.asarray(values)

class GridOracleSpec(NamedTuple):
    """ Uniform label grid `[lo, hi]` with spacing `step` and the energy it is evaluated with. """
    lo: float
    hi: float
    step: float
    energy: Optional[Callable[[np.ndarray], float]] = None

    @classmethod
    def covering(cls, breakpoints: Sequence[float], step: float, energy = None) -> "GridOracleSpec":
        """ Grid over the breakpoint hull widened by `1 + range` on each side. """
        if not step > 0:
            raise TvInputError("Grid step has to be positive, got '{}'.".format(step))
        breakpoints = np.asarray(breakpoints, dtype = float)
        lo, hi = (float(breakpoints.min()), float(breakpoints.max())) if breakpoints.size else (0.0, 0.0)
        margin = 1.0 + (hi - lo)
        return cls(lo - margin, hi + margin, step, energy)

    def labels(self, include: Sequence[float] = ()) -> np.ndarray:
        """ The grid points, merged with `include`. """
        count = int(math.floor((self.hi - self.lo) / self.step + 1e-9)) + 1
        return np.unique(np.concatenate([self.lo + self.step * np.arange(count), np.asarray(include, dtype = float)]))

class SortFixture:
    """ Chain whose forward pass sorts its inputs.

    For inputs `b_0..b_{N-1}` the chain has `2N` nodes; the first `N` carry the step unaries `max(0, x - b_i)` and the clip upper
    bounds `λ⁺` of the edges `N-1..2N-2` come out as the inputs in decreasing order.
    """

    def __init__(self, inputs: Sequence[float]):
        self._inputs = np.asarray(inputs, dtype = float)
        if self._inputs.ndim != 1 or self._inputs.size == 0:
            raise TvInputError("Sort fixture needs a non-empty list of inputs.")
        if np.any(self._inputs <= 0):
            raise TvInputError("Sort fixture inputs have to be positive.")

        N = self._inputs.size
        n = 2 * N
        self._tree = Tree.chain(n)
        self._unaries = [UnaryPwl((0.0, 1.0), (b,), (b, 0.0)) for b in self._inputs] + [UnaryPwl((0.0,), (), (0.0, 0.0))] * N

        upper = [N + 1.0 if p + 1 < N else 2.0 * N - (p + 1) - 0.5 for p in range(n - 1)]
        self._weights = ConvexWeights.chain([0.0] * (n - 1), upper)

    @property
    def Inputs(self) -> np.ndarray:
        return self._inputs

    @property
    def Tree(self) -> Tree:
        return self._tree

    @property
    def Unaries(self) -> List[UnaryPwl]:
        return self._unaries

    @property
    def Weights(self) -> ConvexWeights:
        return self._weights

    def upperBounds(self) -> np.ndarray:
        """ `λ⁺` of the edges `N-1..2N-2`, from the forward pass of the convex tree solver. """
        N = self._inputs.size
        _, upper = forwardPass(self._tree, self._unaries, self._weights)
        return upper[N - 1:2 * N - 1]

    def sorted(self) -> np.ndarray:
        """ The inputs in increasing order, as produced by the forward pass. """
        return self.upperBounds()[::-1].copy()

class ChainInstance(NamedTuple):
    unaries: List[UnaryPwl]
    lower: np.ndarray
    upper: np.ndarray

    @property
    def Tree(self) -> Tree:
        return Tree.chain(len(self.unaries))

    def convexWeights(self) -> ConvexWeights:
        return ConvexWeights.chain(self.lower, self.upper)

    def breakpoints(self) -> np.ndarray:
        return np.unique(np.concatenate([np.asarray(unary.Breaks) for unary in self.unaries]))

class TreeInstance(NamedTuple):
    tree: Tree
    unaries: List[UnaryPwl]
    weights: Weights

    def breakpoints(self) -> np.ndarray:
        return np.unique(np.concatenate([np.asarray(unary.Breaks) for unary in self.unaries]))

def randomConvexUnary(rng: np.random.Generator, maxBreaks: int = 3, integer: bool = False) -> UnaryPwl:
    """ Bounded below convex unary with `1..maxBreaks` breakpoints. """
    t = int(rng.integers(1, maxBreaks + 1))
    if integer:
        breaks = np.sort(rng.integers(-5, 6, size = t)).astype(float)
        slopes = np.sort(rng.integers(-3, 4, size = t + 1)).astype(float)
        slopes[0] = min(slopes[0], -1.0)
        slopes[-1] = max(slopes[-1], 1.0)
    else:
        breaks = np.sort(rng.uniform(-2.0, 2.0, size = t))
        slopes = np.sort(rng.normal(size = t + 1))
        slopes[0] = -abs(slopes[0]) - 0.1
        slopes[-1] = abs(slopes[-1]) + 0.1
    return UnaryPwl(slopes, breaks, (breaks[0], 0.0))

def randomNonconvexUnary(rng: np.random.Generator, breakCount: int = 3) -> UnaryPwl:
    """ Bounded below, generally non-convex unary with `breakCount` breakpoints. """
    breaks = np.sort(rng.uniform(-2.0, 2.0, size = breakCount))
    slopes = rng.normal(scale = 2.0, size = breakCount + 1)
    slopes[0] = -abs(slopes[0]) - 0.1
    slopes[-1] = abs(slopes[-1]) + 0.1
    return UnaryPwl(slopes, breaks, (breaks[0], float(rng.uniform(-1.0, 1.0))))

def randomChainInstance(rng: np.random.Generator, n: int, maxBreaks: int = 3, integer: bool = False) -> ChainInstance:
    """ Chain with convex unaries and mixed symmetric and asymmetric weights `w⁻ <= 0 <= w⁺`. """
    unaries = [randomConvexUnary(rng, maxBreaks, integer) for _ in range(n)]
    if integer:
        upper = rng.integers(0, 4, size = max(n - 1, 0)).astype(float)
        lower = np.where(rng.random(max(n - 1, 0)) < 0.5, -upper, -rng.integers(0, 4, size = max(n - 1, 0)).astype(float))
    else:
        upper = rng.uniform(0.0, 2.0, size = max(n - 1, 0))
        lower = np.where(rng.random(max(n - 1, 0)) < 0.5, -upper, -rng.uniform(0.0, 2.0, size = max(n - 1, 0)))
    return ChainInstance(unaries, lower, upper)

def randomParents(rng: np.random.Generator, n: int) -> List[int]:
    """ Random tree rooted at node `n - 1` where every parent index exceeds its child's. """
    return [int(rng.integers(i + 1, n)) for i in range(n - 1)] + [ROOT_PARENT]

def randomTreeInstance(rng: np.random.Generator, n: int, truncated: bool = True, breakCount: int = 3) -> TreeInstance:
    """ Random tree; truncated TV with non-convex unaries, or convex TV with convex unaries. """
    tree = Tree(randomParents(rng, n))
    if truncated:
        unaries = [randomNonconvexUnary(rng, breakCount) for _ in range(n)]
        weights = TruncatedWeights(rng.uniform(0.0, 2.0, size = n), rng.uniform(0.2, 2.0, size = n))
    else:
        unaries = [randomConvexUnary(rng, breakCount) for _ in range(n)]
        upper = rng.uniform(0.0, 2.0, size = n)
        weights = ConvexWeights(-rng.uniform(0.0, 2.0, size = n), upper)
    return TreeInstance(tree, unaries, weights)
