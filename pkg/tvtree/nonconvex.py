"""
Exact dynamic programming for truncated total variation with (possibly non-convex) piecewise-linear unaries on trees.

The edge term `min(w|z|, C)` is the pointwise minimum of three elementary terms: `f¹` (`w z` for `z >= 0`, infinite otherwise), `f²`
(its mirror) and `f³` (zero at `z = 0`, `C` elsewhere). The min-convolution with the edge term is therefore the composition of three
cheap min-convolutions, each of which records a piecewise mapping from the parent value to a minimizing child value.

Implementations
---------------
`PiMapping`, `EdgeMapping`, `NonconvexSolver`

Operations
----------
`minconv_f1`, `minconv_f2`, `minconv_f3`, `edge_minconv`, `solve_nonconvex`
"""

from typing import List, NamedTuple, Sequence, Tuple

from tvtree.pwl import PwlFunction, sum_many
from tvtree.tree import Tree, TruncatedWeights, IMessageOperations, IBackPointer, dp_solve, truncatedEnergy
from tvtree.tools import TvInputError, UnboundedEnergyError, BreakpointBudgetError

import bisect
import logging
import math

import numpy as np

logger = logging.getLogger(__name__)

class PiMapping(IBackPointer):
    """ Sorted, disjoint interval set describing the minimizer mapping of one elementary min-convolution.

    Variants
    --------
    `F1`: `y` in the closed interval `[L, R]` maps to `L`.
    `F2`: `y` in the half-open interval `(L, R]` maps to `R`.
    `F3`: `y` in the open interval `(L, R)` maps to the target, `y` on an end point maps to `min(y, target)`.

    Values outside every interval map to themselves.
    """

    F1 = "f1"
    F2 = "f2"
    F3 = "f3"

    __slots__ = ("_variant", "_lows", "_highs", "_target")

    def __init__(self, variant: str, lows: Sequence[float] = (), highs: Sequence[float] = (), target: float = math.nan):
        if variant not in (PiMapping.F1, PiMapping.F2, PiMapping.F3):
            raise TvInputError("Unknown mapping variant '{}'.".format(variant))
        self._variant = variant
        self._lows = list(lows)
        self._highs = list(highs)
        self._target = target

    @property
    def Variant(self) -> str:
        return self._variant

    @property
    def Intervals(self) -> List[Tuple[float, float]]:
        return list(zip(self._lows, self._highs))

    @property
    def Target(self) -> float:
        """ The common target of an `F3` mapping. """
        return self._target

    def __len__(self):
        return len(self._lows)

    def query(self, y: float) -> float:
        if not self._lows:
            return y

        if self._variant == PiMapping.F1:
            index = bisect.bisect_right(self._lows, y) - 1
            if index >= 0 and y <= self._highs[index]:
                return self._lows[index]
            return y

        if self._variant == PiMapping.F2:
            index = bisect.bisect_left(self._lows, y) - 1
            if index >= 0 and y <= self._highs[index]:
                return self._highs[index]
            return y

        index = bisect.bisect_right(self._lows, y) - 1
        if index < 0:
            return y
        if y == self._lows[index] or y == self._highs[index]:
            return min(y, self._target)
        if y < self._highs[index]:
            return self._target
        return y

class EdgeMapping(IBackPointer):
    """ Composition `π¹ ∘ π² ∘ π³` of the elementary mappings of one edge. """

    __slots__ = ("_mappings",)

    def __init__(self, mappings: Sequence[PiMapping]):
        self._mappings = tuple(mappings)

    @property
    def Mappings(self) -> Tuple[PiMapping, ...]:
        return self._mappings

    def query(self, y: float) -> float:
        for mapping in reversed(self._mappings):
            y = mapping.query(y)
        return y

def _anchored(h: PwlFunction) -> PwlFunction:
    if h.HasAnchor:
        return h
    return h.withAnchor((h.Breaks[0] if h.Breaks else 0.0, 0.0))

def minconv_f1(h: PwlFunction, w: float) -> Tuple[PwlFunction, PiMapping]:
    """ Min-convolution with `f¹`: `M(y) = min over x <= y of h(x) + w (y - x)`.

    Every run of segments steeper than `w` is replaced by a ray of slope `w` until `h` drops below the ray again.
    The result has at most as many breakpoints as `h`.
    """
    if w < 0:
        raise TvInputError("Edge weight has to be non-negative, got '{}'.".format(w))

    slopes, breaks = h.Slopes, h.Breaks
    if slopes[0] > w:
        raise UnboundedEnergyError("Min-convolution is unbounded, left slope '{}' exceeds the weight '{}'.".format(slopes[0], w))

    t = len(breaks)
    if t == 0:
        return h, PiMapping(PiMapping.F1)

    values = _anchored(h).breakValues()
    outSlopes = [slopes[0]]
    outBreaks: List[float] = []
    lows: List[float] = []
    highs: List[float] = []

    k = 1
    while k <= t:
        if slopes[k] < w:
            outBreaks.append(breaks[k - 1])
            outSlopes.append(slopes[k])
            k += 1
            continue

        start, startValue = breaks[k - 1], values[k - 1]

        crossing = None
        for j in range(k, t):
            if values[j] < startValue + w * (breaks[j] - start):
                crossing = j
                break

        if crossing is None and slopes[t] >= w:
            outBreaks.append(start)
            outSlopes.append(w)
            lows.append(start)
            highs.append(math.inf)
            break

        # the ray is crossed on segment `j`, between breaks j - 1 and j
        j = t if crossing is None else crossing
        excess = values[j - 1] - (startValue + w * (breaks[j - 1] - start))
        if slopes[j] < w:
            lam = breaks[j - 1] + excess / (w - slopes[j])
            if j < t:
                lam = min(lam, breaks[j])
        else:
            # rounding only, the segment runs parallel to the ray
            lam = breaks[j]

        outBreaks.append(start)
        outSlopes.append(w)
        outBreaks.append(lam)
        outSlopes.append(slopes[j])
        lows.append(start)
        highs.append(lam)
        k = j + 1

    return PwlFunction(outSlopes, outBreaks, (breaks[0], values[0]) if h.HasAnchor else None), PiMapping(PiMapping.F1, lows, highs)

def minconv_f2(h: PwlFunction, w: float) -> Tuple[PwlFunction, PiMapping]:
    """ Min-convolution with `f²`: `M(y) = min over x >= y of h(x) + w (x - y)`, computed as `f¹` under reversal. """
    reversedResult, reversedMapping = minconv_f1(h.reverse(), w)

    lows = [-high for high in reversed([high for _, high in reversedMapping.Intervals])]
    highs = [-low for low in reversed([low for low, _ in reversedMapping.Intervals])]

    return reversedResult.reverse(), PiMapping(PiMapping.F2, lows, highs)

def minconv_f3(h: PwlFunction, C: float) -> Tuple[PwlFunction, PiMapping]:
    """ Min-convolution with `f³`: `M(y) = min(h(y), min h + C)`.

    The result has at most `2t + 1` breakpoints. Breakpoints inside the truncated regions are dropped.
    """
    if not C > 0:
        raise TvInputError("Truncation has to be positive, got '{}'.".format(C))

    slopes, breaks = h.Slopes, h.Breaks
    t = len(breaks)

    if t == 0:
        if slopes[0] != 0.0:
            raise UnboundedEnergyError("Truncated min-convolution of a linear function with slope '{}' is unbounded.".format(slopes[0]))
        return h, PiMapping(PiMapping.F3)

    if slopes[0] > 0.0 or slopes[-1] < 0.0:
        raise UnboundedEnergyError("Truncated min-convolution needs a function bounded below, end slopes are '{}' and '{}'.".format(
            slopes[0], slopes[-1]))

    values = _anchored(h).breakValues()
    q = int(np.argmin(values))
    level = values[q] + C

    def aboveLeft(p: int) -> bool:
        """ Whether `h > level` just right of the left end of piece `p`. """
        if p == 0:
            return slopes[0] < 0.0 or (slopes[0] == 0.0 and values[0] > level)
        return values[p - 1] > level or (values[p - 1] == level and slopes[p] > 0.0)

    def aboveRight(p: int) -> bool:
        """ Whether `h > level` just left of the right end of piece `p`. """
        if p == t:
            return slopes[t] > 0.0 or (slopes[t] == 0.0 and values[t - 1] > level)
        return values[p] > level or (values[p] == level and slopes[p] < 0.0)

    outSlopes: List[float] = []
    outBreaks: List[float] = []
    lows: List[float] = []
    highs: List[float] = []

    above = aboveLeft(0)
    outSlopes.append(0.0 if above else slopes[0])
    if above:
        lows.append(-math.inf)

    def switch(position: float, toAbove: bool, slope: float):
        outBreaks.append(position)
        outSlopes.append(0.0 if toAbove else slope)
        if toAbove:
            lows.append(position)
        else:
            highs.append(position)

    for p in range(t + 1):
        if p > 0:
            position = breaks[p - 1]
            nextAbove = aboveLeft(p)
            if above and nextAbove:
                if values[p - 1] <= level:
                    highs.append(position)
                    lows.append(position)
            elif above != nextAbove:
                switch(position, nextAbove, slopes[p])
            else:
                outBreaks.append(position)
                outSlopes.append(slopes[p])
            above = nextAbove

        endAbove = aboveRight(p)
        if endAbove != above:
            reference, referenceValue = (breaks[p], values[p]) if p < t else (breaks[p - 1], values[p - 1])
            position = reference + (level - referenceValue) / slopes[p]
            if p > 0:
                position = max(position, breaks[p - 1])
            if p < t:
                position = min(position, breaks[p])
            switch(position, endAbove, slopes[p])
            above = endAbove

    if above:
        highs.append(math.inf)

    result = PwlFunction(outSlopes, outBreaks, (breaks[q], values[q]))
    return result, PiMapping(PiMapping.F3, lows, highs, breaks[q])

def edge_minconv(h: PwlFunction, w: float, C: float = math.inf) -> Tuple[PwlFunction, EdgeMapping]:
    """ Min-convolution with `min(w|z|, C)` as `((h ⊗ f¹) ⊗ f²) ⊗ f³`, the last step only for finite `C`. """
    message, first = minconv_f1(h, w)
    message, second = minconv_f2(message, w)
    mappings = [first, second]

    if math.isfinite(C):
        message, third = minconv_f3(message, C)
        mappings.append(third)

    return message, EdgeMapping(mappings)

class EdgeStatistic(NamedTuple):
    node: int
    countIn: int
    countOut: int
    truncated: bool

class NonconvexStatistics:
    """ Per-edge breakpoint counts of one solve. """

    def __init__(self):
        self._edges: List[EdgeStatistic] = list()
        self._totalBreakpoints = 0

    @property
    def Edges(self) -> List[EdgeStatistic]:
        return self._edges

    @property
    def TotalBreakpoints(self) -> int:
        """ Total number of breakpoints of all node and edge messages created so far. """
        return self._totalBreakpoints

    @property
    def MaxMessageSize(self) -> int:
        return max((edge.countOut for edge in self._edges), default = 0)

    def countMessage(self, count: int):
        self._totalBreakpoints += count

    def addEdge(self, statistic: EdgeStatistic):
        self._edges.append(statistic)
        self._totalBreakpoints += statistic.countOut

    def violations(self) -> List[EdgeStatistic]:
        """ Edges breaking the breakpoint count law: `out <= in` without truncation, `out <= 2 in + 1` with. """
        return [edge for edge in self._edges if edge.countOut > (2 * edge.countIn + 1 if edge.truncated else edge.countIn)]

class NonconvexResult(NamedTuple):
    x: np.ndarray
    energy: float
    statistics: NonconvexStatistics
    # minimum of the root message
    rootValue: float = math.nan

class _NonconvexMessageOperations(IMessageOperations):

    def __init__(self, unaries: Sequence[PwlFunction], weights: TruncatedWeights, budget: int, statistics: NonconvexStatistics):
        self._unaries = unaries
        self._weights = weights
        self._budget = budget
        self._statistics = statistics

    def _checkBudget(self):
        if self._statistics.TotalBreakpoints > self._budget:
            raise BreakpointBudgetError("Messages exceeded the breakpoint budget of '{}'.".format(self._budget))

    def accumulate(self, node, childMessages):
        message = sum_many([self._unaries[node]] + childMessages)
        self._statistics.countMessage(message.BreakCount)
        self._checkBudget()
        return message

    def convolve(self, node, message):
        w, C = float(self._weights.Weights[node]), float(self._weights.Truncations[node])
        edgeMessage, mapping = edge_minconv(message, w, C)
        self._statistics.addEdge(EdgeStatistic(node, message.BreakCount, edgeMessage.BreakCount, math.isfinite(C)))
        self._checkBudget()
        return edgeMessage, mapping

    def minimize(self, message):
        return message.minimum()

class NonconvexSolver:
    """ Reusable non-convex tree solver owning the breakpoint budget and the statistics of the last solve. """

    DEFAULT_BREAKPOINT_BUDGET = 10_000_000

    def __init__(self, breakpointBudget: int = DEFAULT_BREAKPOINT_BUDGET):
        self._breakpointBudget = int(breakpointBudget)
        self._statistics = NonconvexStatistics()

    @property
    def BreakpointBudget(self) -> int:
        return self._breakpointBudget

    @property
    def Statistics(self) -> NonconvexStatistics:
        """ Statistics of the last solve. """
        return self._statistics

    def solve(self, tree: Tree, unaries: Sequence[PwlFunction], weights: TruncatedWeights) -> NonconvexResult:
        if len(unaries) != tree.NodeCount or len(weights) != tree.NodeCount:
            raise TvInputError("Expected '{}' unaries and weights, got '{}' and '{}'.".format(tree.NodeCount, len(unaries), len(weights)))

        for i, unary in enumerate(unaries):
            if not unary.HasAnchor:
                raise TvInputError("Unary of node '{}' has no anchor.".format(i))

        self._statistics = NonconvexStatistics()
        operations = _NonconvexMessageOperations(unaries, weights, self._breakpointBudget, self._statistics)
        result = dp_solve(tree, operations)

        energy = truncatedEnergy(tree, unaries, weights, result.x)
        logger.debug("Non-convex solve of '%d' nodes: energy %s, root value %s, largest message %d.",
            tree.NodeCount, energy, result.value, self._statistics.MaxMessageSize)

        return NonconvexResult(result.x, energy, self._statistics, result.value)

def solve_nonconvex(tree: Tree, unaries: Sequence[PwlFunction], weights: TruncatedWeights,
        breakpointBudget: int = NonconvexSolver.DEFAULT_BREAKPOINT_BUDGET) -> NonconvexResult:
    """ Global minimizer of a truncated TV energy with piecewise-linear unaries on a tree. """
    return NonconvexSolver(breakpointBudget).solve(tree, unaries, weights)
