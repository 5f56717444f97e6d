"""
Divide and conquer solvers for weighted TV with convex piecewise-linear unaries on a chain.

Both solvers threshold the problem at a pivot `λ`: the lowest minimizer `y` of the binary energy with unary coefficients `g_i(λ)`
(the left-continuous unary derivatives) tells which nodes of the continuous lowest minimizer lie below `λ` and which at or above.
Each side is then solved recursively on a window of values with the breakpoints outside the window removed.

`solve_hochbaum` recurses on all nodes, `O(n log n)`. `solve_fast` recurses on every `m`-th node only, passing binary messages over
the skipped runs through contracted maps in `O(log m)`, and fills the gaps afterwards; `O(n log log n)` for `m ~ log n`.

Implementations
---------------
`TauTriple`, `ContractedMap`, `ContractedView`, `SolveFrame`, `DncStatistics`

Operations
----------
`binary_cut`, `solve_hochbaum`, `contract`, `solve_fast`, `weightedMedian`
"""

from typing import List, NamedTuple, Optional, Sequence, Tuple

from tvtree.pwl import PwlFunction, UnaryPwl, sum_many
from tvtree.tools import TvInputError, UnboundedEnergyError, clip

import bisect
import logging
import math
import random

import numpy as np

logger = logging.getLogger(__name__)

class TauTriple(NamedTuple):
    """ Scalar message transform `v -> δ + clip(v, [a, b])`. """
    delta: float
    low: float
    high: float

    def apply(self, value: float) -> float:
        return self.delta + clip(value, self.low, self.high)

    def then(self, outer: "TauTriple") -> "TauTriple":
        """ Returns the composition `outer ∘ self`. """
        delta, low, high = self
        outerDelta, outerLow, outerHigh = outer
        intervalLow, intervalHigh = outerLow - delta, outerHigh - delta

        if high < intervalLow:
            return TauTriple(outerDelta + outerLow - high, high, high)
        if low > intervalHigh:
            return TauTriple(outerDelta + outerHigh - low, low, low)
        return TauTriple(outerDelta + delta, max(low, intervalLow), min(high, intervalHigh))

class ContractedMap:
    """ Message transform of a run of edges for all `λ`: `τ_k` applies for `λ` in `(λ_{k-1}, λ_k]`.

    Breakpoints are kept with multiplicity, one per unary breakpoint of the run.
    """

    __slots__ = ("_lambdas", "_taus")

    def __init__(self, lambdas: List[float], taus: List[TauTriple]):
        if len(taus) != len(lambdas) + 1:
            raise TvInputError("A map with '{}' breakpoints needs '{}' triples, got '{}'.".format(len(lambdas), len(lambdas) + 1, len(taus)))
        self._lambdas = lambdas
        self._taus = taus

    @classmethod
    def edge(cls, unary: PwlFunction, lower: float, upper: float) -> "ContractedMap":
        """ Single edge into a node with the given unary: `T^λ = <g(λ), w⁻, w⁺>`. """
        return cls(list(unary.Breaks), [TauTriple(slope, lower, upper) for slope in unary.Slopes])

    @property
    def Lambdas(self) -> List[float]:
        return self._lambdas

    @property
    def Taus(self) -> List[TauTriple]:
        return self._taus

    @property
    def BreakCount(self) -> int:
        return len(self._lambdas)

    def lookup(self, lam: float, lo: int = 0, hi: Optional[int] = None) -> TauTriple:
        return self._taus[bisect.bisect_left(self._lambdas, lam, lo, len(self._lambdas) if hi is None else hi)]

    def apply(self, lam: float, value: float) -> float:
        return self.lookup(lam).apply(value)

    def then(self, outer: "ContractedMap") -> "ContractedMap":
        """ Returns the map of this run followed by `outer`, merging both breakpoint lists. """
        inner, innerTaus = self._lambdas, self._taus
        following, outerTaus = outer._lambdas, outer._taus
        lambdas: List[float] = []
        taus: List[TauTriple] = []

        i = j = 0
        while True:
            taus.append(innerTaus[i].then(outerTaus[j]))
            if i < len(inner) and (j >= len(following) or inner[i] <= following[j]):
                lambdas.append(inner[i])
                i += 1
            elif j < len(following):
                lambdas.append(following[j])
                j += 1
            else:
                break

        return ContractedMap(lambdas, taus)

class ContractedView:
    """ Window `[lo, hi)` of the breakpoints of a contracted map still active in a solve frame. """

    __slots__ = ("Map", "Lo", "Hi")

    def __init__(self, contractedMap: ContractedMap, lo: int = 0, hi: Optional[int] = None):
        self.Map = contractedMap
        self.Lo = lo
        self.Hi = contractedMap.BreakCount if hi is None else hi

    @property
    def Size(self) -> int:
        return self.Hi - self.Lo

    def lowerMedian(self) -> float:
        return self.Map.Lambdas[self.Lo + (self.Size - 1) // 2]

    def lookup(self, lam: float) -> TauTriple:
        return self.Map.lookup(lam, self.Lo, self.Hi)

    def trimmed(self, low: float, high: float) -> "ContractedView":
        """ View of the breakpoints strictly inside `(low, high)`. """
        lambdas = self.Map.Lambdas
        lo = bisect.bisect_right(lambdas, low, self.Lo, self.Hi)
        hi = bisect.bisect_left(lambdas, high, lo, self.Hi)
        return ContractedView(self.Map, lo, hi)

    def active(self) -> List[float]:
        return self.Map.Lambdas[self.Lo:self.Hi]

class FrameStatistic(NamedTuple):
    depth: int
    size: int
    pivot: float
    atMostPivot: int
    atLeastPivot: int
    largestChild: int
    window: Tuple[float, float]
    parentWindow: Tuple[float, float]

class DncStatistics:
    """ Per-frame pivot balance and window nesting of the divide and conquer recursions. """

    def __init__(self):
        self.Frames: List[FrameStatistic] = list()

    def add(self, frame: FrameStatistic):
        self.Frames.append(frame)

    @property
    def MaxDepth(self) -> int:
        return max((frame.depth for frame in self.Frames), default = 0)

def _unaryTables(unaries: Sequence[PwlFunction]) -> Tuple[List[List[float]], List[List[float]]]:
    breaks, slopes = list(), list()
    for i, unary in enumerate(unaries):
        if not unary.IsConvex:
            raise TvInputError("Unary of node '{}' is not convex.".format(i))
        breaks.append(list(unary.Breaks))
        slopes.append(list(unary.Slopes))
    return breaks, slopes

def _chainWeights(unaries, lower, upper) -> Tuple[List[float], List[float]]:
    n = len(unaries)
    lower = [float(value) for value in lower][:max(n - 1, 0)]
    upper = [float(value) for value in upper][:max(n - 1, 0)]
    if len(lower) != max(n - 1, 0) or len(upper) != len(lower):
        raise TvInputError("Expected '{}' edge weights, got '{}' and '{}'.".format(n - 1, len(lower), len(upper)))
    for i, (low, high) in enumerate(zip(lower, upper)):
        if not low <= high:
            raise TvInputError("Edge '{}' violates w⁻ <= w⁺ with '{}' > '{}'.".format(i, low, high))
    return lower, upper

def _binaryLabels(coefficients: Sequence[float], lower: Sequence[float], upper: Sequence[float]) -> List[int]:
    """ Lowest minimizer of `Σ c_i y_i + Σ f_i(y_{i+1} - y_i)` over `{0, 1}^n` by scalar messages `M(1) - M(0)`. """
    n = len(coefficients)
    messages = [0.0] * n
    message = coefficients[0]
    messages[0] = message
    for i in range(1, n):
        message = coefficients[i] + clip(message, lower[i - 1], upper[i - 1])
        messages[i] = message

    labels = [0] * n
    labels[n - 1] = 1 if messages[n - 1] < 0 else 0
    for i in range(n - 2, -1, -1):
        value = messages[i]
        if value < lower[i]:
            labels[i] = 1
        elif value < upper[i]:
            labels[i] = labels[i + 1]
        else:
            labels[i] = 0
    return labels

def _derivativeAt(breaks: List[float], slopes: List[float], lam: float) -> float:
    return slopes[bisect.bisect_left(breaks, lam)]

def binary_cut(unaries: Sequence[PwlFunction], lower: Sequence[float], upper: Sequence[float], lam: float) -> np.ndarray:
    """ Lowest minimizer `y ∈ {0, 1}^n` of `Σ g_i(λ) y_i + Σ f_i(y_{i+1} - y_i)` with the left-continuous derivatives `g_i`. """
    if not unaries:
        return np.zeros(0, dtype = int)
    lower, upper = _chainWeights(unaries, lower, upper)
    coefficients = [_derivativeAt(list(unary.Breaks), list(unary.Slopes), lam) for unary in unaries]
    return np.asarray(_binaryLabels(coefficients, lower, upper), dtype = int)

def _runs(labels: Sequence[int]) -> List[Tuple[int, int, int]]:
    """ Maximal runs `(start, end, label)` of equal labels. """
    runs = list()
    start = 0
    for i in range(1, len(labels) + 1):
        if i == len(labels) or labels[i] != labels[start]:
            runs.append((start, i, labels[start]))
            start = i
    return runs

def solve_hochbaum(unaries: Sequence[PwlFunction], lower: Sequence[float], upper: Sequence[float],
        window: Tuple[float, float] = (-math.inf, math.inf), statistics: Optional[DncStatistics] = None) -> np.ndarray:
    """ Lowest minimizer over `[a, b]^n` of a chain with convex piecewise-linear unaries, pivoting on the median breakpoint.

    Parameters
    ----------
    window:
        Value window `(a, b)`, the result equals the unconstrained lowest minimizer clipped to `[a, b]`.
    """
    n = len(unaries)
    if n == 0:
        return np.empty(0)

    lower, upper = _chainWeights(unaries, lower, upper)
    breaks, slopes = _unaryTables(unaries)
    a, b = float(window[0]), float(window[1])
    if not a < b:
        raise TvInputError("Value window '[{}, {}]' is empty.".format(a, b))

    lo = [bisect.bisect_right(unaryBreaks, a) for unaryBreaks in breaks]
    hi = [bisect.bisect_left(unaryBreaks, b) for unaryBreaks in breaks]
    x = np.empty(n)

    # frames (start, end, a, b, leftPin, rightPin, depth, parentWindow)
    stack = []
    if math.isfinite(b):
        # split at the upper window end, nodes at or above it are done
        labels = _binaryLabels([_derivativeAt(breaks[i], slopes[i], b) for i in range(n)], lower, upper)
        for runStart, runEnd, label in _runs(labels):
            if label == 1:
                x[runStart:runEnd] = b
            else:
                stack.append((runStart, runEnd, a, b, None if runStart == 0 else b, None if runEnd == n else b, 1, (a, b)))
    else:
        stack.append((0, n, a, b, None, None, 0, (a, b)))

    while stack:
        start, end, a, b, leftPin, rightPin, depth, parentWindow = stack.pop()

        active = [lam for i in range(start, end) for lam in breaks[i][lo[i]:hi[i]]]
        if not active:
            if a == -math.inf:
                raise UnboundedEnergyError("Nodes '{}' to '{}' have no lowest minimizer.".format(start, end - 1))
            x[start:end] = a
            continue

        values = np.asarray(active)
        pivot = float(np.partition(values, (len(values) - 1) // 2)[(len(values) - 1) // 2])

        coefficients = [_derivativeAt(breaks[i], slopes[i], pivot) for i in range(start, end)]
        if leftPin is not None:
            coefficients[0] += lower[start - 1] if pivot <= leftPin else upper[start - 1]
        if rightPin is not None:
            coefficients[-1] += -upper[end - 1] if pivot <= rightPin else -lower[end - 1]

        labels = _binaryLabels(coefficients, lower[start:end - 1], upper[start:end - 1])

        childSizes = []
        for runStart, runEnd, label in _runs(labels):
            size = 0
            for i in range(start + runStart, start + runEnd):
                if label == 0:
                    hi[i] = bisect.bisect_left(breaks[i], pivot, lo[i], hi[i])
                else:
                    lo[i] = bisect.bisect_right(breaks[i], pivot, lo[i], hi[i])
                size += hi[i] - lo[i]
            childSizes.append(size)

            runLeftPin = leftPin if runStart == 0 else pivot
            runRightPin = rightPin if runEnd == len(labels) else pivot
            childWindow = (a, pivot) if label == 0 else (pivot, b)
            stack.append((start + runStart, start + runEnd, childWindow[0], childWindow[1], runLeftPin, runRightPin, depth + 1, (a, b)))

        if statistics is not None:
            statistics.add(FrameStatistic(depth, len(values), pivot, int(np.sum(values <= pivot)), int(np.sum(values >= pivot)),
                max(childSizes), (a, b), parentWindow))

    return x

def contract(unaries: Sequence[PwlFunction], lower: Sequence[float], upper: Sequence[float], i: int, j: int) -> ContractedMap:
    """ Contracted map of the edge run `i..j`: transforms the message at node `i` into the message at node `j`.

    The single-edge maps of edges `(k - 1, k)` for `k = i + 1..j` are merged pairwise in a balanced way.
    """
    if not 0 <= i < j < len(unaries):
        raise TvInputError("Invalid edge run '{}..{}' of a chain with '{}' nodes.".format(i, j, len(unaries)))

    maps = [ContractedMap.edge(unaries[k], float(lower[k - 1]), float(upper[k - 1])) for k in range(i + 1, j + 1)]
    while len(maps) > 1:
        merged = [maps[q].then(maps[q + 1]) for q in range(0, len(maps) - 1, 2)]
        if len(maps) % 2 == 1:
            merged.append(maps[-1])
        maps = merged
    return maps[0]

_selectionRandom = random.Random(0x7f4a)

def weightedMedian(values: Sequence[float], weights: Sequence[float]) -> float:
    """ Lowest weighted median: smallest value `v` with `Σ_{values <= v} weights >= W / 2`. Expected linear quickselect. """
    items = [(value, weight) for value, weight in zip(values, weights) if weight > 0]
    if not items:
        raise TvInputError("Weighted median needs a positive total weight.")

    target = 0.5 * sum(weight for _, weight in items)
    while True:
        pivot = items[_selectionRandom.randrange(len(items))][0]
        less = [item for item in items if item[0] < pivot]
        lessWeight = sum(weight for _, weight in less)
        equalWeight = sum(weight for value, weight in items if value == pivot)

        if lessWeight >= target:
            items = less
        elif lessWeight + equalWeight >= target:
            return pivot
        else:
            target -= lessWeight + equalWeight
            items = [item for item in items if item[0] > pivot]

class SolveFrame(NamedTuple):
    """ Subsampled nodes `first..last` (indices into the subsampled list), the views of their `last - first + 2` edges,
    value window `[a, b)` and the boundary labels. """
    first: int
    last: int
    views: List[ContractedView]
    a: float
    b: float
    leftLabel: int
    rightLabel: int
    depth: int
    parentWindow: Tuple[float, float]

def _pinnedUnary(unary: PwlFunction, pin: float, lower: float, upper: float, left: bool) -> PwlFunction:
    if left:
        edge = PwlFunction((lower, upper), (pin,), (pin, 0.0))
    else:
        edge = PwlFunction((-upper, -lower), (pin,), (pin, 0.0))
    return sum_many([unary, edge])

def solve_fast(unaries: Sequence[PwlFunction], lower: Sequence[float], upper: Sequence[float], stride: Optional[int] = None,
        statistics: Optional[DncStatistics] = None) -> np.ndarray:
    """ Lowest minimizer of a chain with convex piecewise-linear unaries in `O(n log log n)`.

    Parameters
    ----------
    stride:
        Subsampling stride `m >= 1`; defaults to `max(1, ceil(log2 n))`.
    """
    n = len(unaries)
    if n == 0:
        return np.empty(0)

    lower, upper = _chainWeights(unaries, lower, upper)
    _unaryTables(unaries)

    m = max(1, math.ceil(math.log2(n))) if not stride else int(stride)
    if m < 1:
        raise TvInputError("Stride has to be positive, got '{}'.".format(stride))

    # sentinel nodes 0 and n + 1 with zero unaries and zero weight edges
    zero = UnaryPwl((0.0,), (), (0.0, 0.0))
    extUnaries = [zero] + list(unaries) + [zero]
    extLower = [0.0] + lower + [0.0]
    extUpper = [0.0] + upper + [0.0]

    subsampled = list(range(1, n + 1, m))
    if subsampled[-1] != n:
        subsampled.append(n)
    count = len(subsampled)
    ends = [0] + subsampled + [n + 1]
    views = [ContractedView(contract(extUnaries, extLower, extUpper, ends[k], ends[k + 1])) for k in range(count + 1)]

    values = [math.nan] * count
    stack = [SolveFrame(0, count - 1, views, -math.inf, math.inf, 0, 0, 0, (-math.inf, math.inf))]
    while stack:
        frame = stack.pop()
        sizes = [view.Size for view in frame.views]
        total = sum(sizes)

        if total == 0:
            if frame.a == -math.inf:
                raise UnboundedEnergyError("Subsampled nodes '{}' to '{}' have no lowest minimizer.".format(
                    subsampled[frame.first] - 1, subsampled[frame.last] - 1))
            for k in range(frame.first, frame.last + 1):
                values[k] = frame.a
            continue

        medians = [view.lowerMedian() for view in frame.views if view.Size]
        pivot = weightedMedian(medians, [size for size in sizes if size])

        # forward pass over the subsampled nodes of the frame
        message = math.inf if frame.leftLabel == 0 else -math.inf
        messages = []
        for view in frame.views[:-1]:
            message = view.lookup(pivot).apply(message)
            messages.append(message)

        labels = [0] * len(messages)
        label = frame.rightLabel
        for k in range(len(messages) - 1, -1, -1):
            tau = frame.views[k + 1].lookup(pivot)
            if messages[k] < tau.low:
                label = 1
            elif messages[k] >= tau.high:
                label = 0
            labels[k] = label

        runs = _runs(labels)
        childSizes = []
        for index, (runStart, runEnd, runLabel) in enumerate(runs):
            a, b = (frame.a, pivot) if runLabel == 0 else (pivot, frame.b)
            childViews = [view.trimmed(a, b) for view in frame.views[runStart:runEnd + 1]]
            childSizes.append(sum(view.Size for view in childViews))
            leftLabel = runs[index - 1][2] if index > 0 else frame.leftLabel
            rightLabel = runs[index + 1][2] if index + 1 < len(runs) else frame.rightLabel
            stack.append(SolveFrame(frame.first + runStart, frame.first + runEnd - 1, childViews, a, b, leftLabel, rightLabel,
                frame.depth + 1, (frame.a, frame.b)))

        if statistics is not None:
            active = np.concatenate([view.active() for view in frame.views])
            statistics.add(FrameStatistic(frame.depth, total, pivot, int(np.sum(active <= pivot)), int(np.sum(active >= pivot)),
                max(childSizes), (frame.a, frame.b), frame.parentWindow))

    x = np.empty(n)
    for k, node in enumerate(subsampled):
        x[node - 1] = values[k]

    # fill the gaps between subsampled nodes with pinned end points
    for k in range(count - 1):
        left, right = subsampled[k], subsampled[k + 1]
        if right - left < 2:
            continue

        gap = list(extUnaries[left + 1:right])
        gap[0] = _pinnedUnary(gap[0], values[k], extLower[left], extUpper[left], True)
        gap[-1] = _pinnedUnary(gap[-1], values[k + 1], extLower[right - 1], extUpper[right - 1], False)
        x[left:right - 1] = solve_hochbaum(gap, extLower[left + 1:right - 1], extUpper[left + 1:right - 1])

    logger.debug("Fast chain solve of '%d' nodes with stride %d over %d subsampled nodes.", n, m, count)
    return x
