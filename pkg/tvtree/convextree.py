"""
Weighted TV on trees with convex piecewise-linear or piecewise-quadratic unaries in `O(n log n)`.

Messages are represented by their derivative: boundary coefficients `h⁻ = (a⁻, b⁻)` valid left of every breakpoint, `h⁺` valid right of
every breakpoint, and a double ended queue of slope events `σ = (λ, δa, δb)`. Derivatives are left-continuous, an event at `λ` applies
to `z > λ`. Passing a message along an edge clips the derivative to `[w⁻, w⁺]` by consuming events from both ends of the queue.

Implementations
---------------
`SlopeEvent`, `ConvexPwq`, `SlopeEventQueue`

Operations
----------
`accumulate_unary`, `clip_message`, `solve_convex_tree`, `forwardPass`
"""

from typing import Callable, List, NamedTuple, Optional, Sequence, Tuple, Union

from tvtree.depq import DepqEntry, IDoubleEndedQueue, IntervalHeap, PairingDepq, OperationCounters
from tvtree.pwl import PwlFunction
from tvtree.tree import Tree, ConvexWeights, IMessageOperations, ClipBackPointer, BackPointerStore, dp_solve, convexEnergy
from tvtree.tools import TvInputError, ConvexityError, UnboundedEnergyError, FileFormatError, formatReal

import bisect
import logging
import math

import numpy as np

logger = logging.getLogger(__name__)

Coefficients = Tuple[float, float]

class SlopeEvent(DepqEntry):
    """ Change `(δa, δb)` of the derivative coefficients at position `λ`. """

    __slots__ = ("DeltaA", "DeltaB")

    def __init__(self, position: float, deltaA: float, deltaB: float):
        super().__init__(position)
        self.DeltaA = deltaA
        self.DeltaB = deltaB

    @property
    def Position(self) -> float:
        return self.Key

    def __repr__(self):
        return "SlopeEvent({}, {}, {})".format(self.Key, self.DeltaA, self.DeltaB)

class ConvexPwq:
    """ Convex piecewise-quadratic function given by its derivative `g(z) = a_k z + b_k` on segment `k`.

    Segment `k` lies between the breaks `λ_k` and `λ_{k+1}`. The derivative has to be non-decreasing, jumps included. The anchor
    `(x0, value)` fixes the additive constant.
    """

    __slots__ = ("_breaks", "_a", "_b", "_anchor")

    def __init__(self, breaks: Sequence[float], a: Sequence[float], b: Sequence[float], anchor: Tuple[float, float] = (0.0, 0.0)):
        self._breaks = tuple(float(lam) for lam in breaks)
        self._a = tuple(float(value) for value in a)
        self._b = tuple(float(value) for value in b)
        self._anchor = (float(anchor[0]), float(anchor[1]))

        if len(self._a) != len(self._breaks) + 1 or len(self._b) != len(self._a):
            raise TvInputError("A derivative with '{}' breakpoints needs '{}' segments, got '{}' and '{}'.".format(
                len(self._breaks), len(self._breaks) + 1, len(self._a), len(self._b)))

        for k, slope in enumerate(self._a):
            if not slope >= 0.0:
                raise ConvexityError("Segment '{}' has negative quadratic coefficient '{}'.".format(k, slope))

        for k, lam in enumerate(self._breaks):
            if k > 0 and not self._breaks[k - 1] <= lam:
                raise TvInputError("Breakpoints have to be sorted, got '{}' before '{}'.".format(self._breaks[k - 1], lam))
            left = self._a[k] * lam + self._b[k]
            right = self._a[k + 1] * lam + self._b[k + 1]
            if not left <= right:
                raise ConvexityError("Derivative decreases at breakpoint '{}' from '{}' to '{}'.".format(lam, left, right))

    @classmethod
    def fromUnary(cls, unary: PwlFunction) -> "ConvexPwq":
        """ Derivative description of a convex piecewise-linear unary. """
        if not unary.IsConvex:
            raise ConvexityError("Unary with slopes '{}' is not convex.".format(list(unary.Slopes)))
        anchor = unary.Anchor if unary.HasAnchor else (0.0, 0.0)
        return cls(unary.Breaks, [0.0] * len(unary.Slopes), unary.Slopes, anchor)

    @classmethod
    def quadratic(cls, a: float, b: float) -> "ConvexPwq":
        """ `½ a z² - b z`. """
        return cls((), (a,), (-b,), (0.0, 0.0))

    @classmethod
    def l1Tether(cls, f: float, xi: float, tau: float, weight: float = 1.0) -> "ConvexPwq":
        """ `weight |z - f| + (z - ξ)² / 2τ`, the unary of the TV-ℓ1 proximal step. """
        return cls((f,), (1.0 / tau, 1.0 / tau), (-weight - xi / tau, weight - xi / tau), (f, (f - xi) ** 2 / (2.0 * tau)))

    @property
    def Breaks(self) -> Tuple[float, ...]:
        return self._breaks

    @property
    def BreakCount(self) -> int:
        return len(self._breaks)

    @property
    def A(self) -> Tuple[float, ...]:
        return self._a

    @property
    def B(self) -> Tuple[float, ...]:
        return self._b

    @property
    def Anchor(self) -> Tuple[float, float]:
        return self._anchor

    def derivativeAt(self, z: float) -> float:
        """ Left-continuous derivative at `z`. """
        k = bisect.bisect_left(self._breaks, z)
        return self._a[k] * z + self._b[k]

    def _primitive(self, x: float) -> float:
        """ Integral of the derivative from zero to `x`. """
        def integral(k, left, right):
            return 0.5 * self._a[k] * (right * right - left * left) + self._b[k] * (right - left)

        # integrate segment by segment between 0 and x
        lo, hi, sign = (0.0, x, 1.0) if x >= 0.0 else (x, 0.0, -1.0)
        total = 0.0
        k = bisect.bisect_left(self._breaks, lo)
        position = lo
        while True:
            end = self._breaks[k] if k < len(self._breaks) else math.inf
            segmentEnd = min(end, hi)
            total += integral(k, position, segmentEnd)
            if segmentEnd >= hi:
                break
            position = segmentEnd
            k += 1
        return sign * total

    def evaluate(self, x: float) -> float:
        x0, value0 = self._anchor
        return value0 + self._primitive(float(x)) - self._primitive(x0)

def parsePwqLine(line: str, lineNumber: int = 0) -> ConvexPwq:
    """ Parses a PWQ unary line `t a0 b0 λ1 a1 b1 ... λt at bt anchorX anchorV` of derivative segments. """
    tokens = line.split()
    try:
        t = int(tokens[0])
        values = [float(token) for token in tokens[1:]]
    except (IndexError, ValueError) as ex:
        raise FileFormatError("Line '{}': can't parse PWQ unary '{}'.".format(lineNumber, line.strip())) from ex

    if t < 0 or len(values) != 3 * t + 4:
        raise FileFormatError("Line '{}': a PWQ unary with '{}' breakpoints needs '{}' numbers after the count, got '{}'.".format(
            lineNumber, t, 3 * t + 4, len(values)))

    a, b, breaks = [values[0]], [values[1]], []
    for k in range(t):
        breaks.append(values[2 + 3 * k])
        a.append(values[3 + 3 * k])
        b.append(values[4 + 3 * k])

    try:
        return ConvexPwq(breaks, a, b, (values[-2], values[-1]))
    except TvInputError as ex:
        raise FileFormatError("Line '{}': {}".format(lineNumber, ex)) from ex

def formatPwqLine(unary: ConvexPwq) -> str:
    tokens = [str(unary.BreakCount), formatReal(unary.A[0]), formatReal(unary.B[0])]
    for k, lam in enumerate(unary.Breaks):
        tokens.extend((formatReal(lam), formatReal(unary.A[k + 1]), formatReal(unary.B[k + 1])))
    tokens.extend((formatReal(unary.Anchor[0]), formatReal(unary.Anchor[1])))
    return " ".join(tokens)

class SlopeEventQueue:
    """ Derivative message: boundary coefficients `h⁻`, `h⁺` and the slope events in between. """

    def __init__(self, queue: IDoubleEndedQueue):
        self._queue = queue
        self._lower: Coefficients = (0.0, 0.0)
        self._upper: Coefficients = (0.0, 0.0)

    @property
    def Queue(self) -> IDoubleEndedQueue:
        return self._queue

    @property
    def Lower(self) -> Coefficients:
        """ `h⁻`, derivative coefficients left of every event. """
        return self._lower

    @property
    def Upper(self) -> Coefficients:
        """ `h⁺`, derivative coefficients right of every event. """
        return self._upper

    def __len__(self):
        return len(self._queue)

    def accumulateUnary(self, unary: ConvexPwq):
        """ Adds a unary derivative: one event per breakpoint, end segments go to the boundary coefficients. """
        a, b = unary.A, unary.B
        for k, lam in enumerate(unary.Breaks):
            self._queue.insert(SlopeEvent(lam, a[k + 1] - a[k], b[k + 1] - b[k]))
        self._lower = (self._lower[0] + a[0], self._lower[1] + b[0])
        self._upper = (self._upper[0] + a[-1], self._upper[1] + b[-1])

    def meld(self, other: "SlopeEventQueue"):
        """ Adds the derivative of `other`, consuming it. """
        self._queue.meld(other._queue)
        self._lower = (self._lower[0] + other._lower[0], self._lower[1] + other._lower[1])
        self._upper = (self._upper[0] + other._upper[0], self._upper[1] + other._upper[1])
        other._lower = other._upper = (0.0, 0.0)

    def derivativeAt(self, z: float) -> float:
        """ Reconstructs the left-continuous derivative at `z` from all events, `O(size)`. """
        a, b = self._lower
        for event in self._queue.entries():
            if event.Key < z:
                a += event.DeltaA
                b += event.DeltaB
        return a * z + b

    def _clipAbove(self, w: float) -> float:
        """ Replaces the derivative `m` by `min(m, w)` and returns `sup{z | m(z) < w}`. """
        queue = self._queue
        ca, cb = self._upper

        while True:
            event = queue.findMax()
            if event is None:
                break

            lam = event.Key
            valueRight = ca * lam + cb
            valueAt = valueRight - (event.DeltaA * lam + event.DeltaB)

            if valueAt >= w:
                queue.removeMax()
                ca -= event.DeltaA
                cb -= event.DeltaB
                continue

            if valueRight >= w:
                # the derivative jumps across w at λ
                event.DeltaA = -(ca - event.DeltaA)
                event.DeltaB = w - (cb - event.DeltaB)
                if event.DeltaA == 0.0 and event.DeltaB == 0.0:
                    queue.removeMax()
                self._upper = (0.0, w)
                return lam

            return self._crossAbove(ca, cb, w)

        if ca > 0.0 or cb < w:
            return self._crossAbove(ca, cb, w)
        raise UnboundedEnergyError("Message derivative is at least '{}' everywhere, no lowest minimizer exists.".format(w))

    def _crossAbove(self, ca: float, cb: float, w: float) -> float:
        if ca > 0.0:
            position = (w - cb) / ca
            self._queue.insert(SlopeEvent(position, -ca, w - cb))
            self._upper = (0.0, w)
            return position
        self._upper = (ca, cb)
        return math.inf

    def _clipBelow(self, w: float) -> float:
        """ Replaces the derivative `m` by `max(m, w)` and returns `sup{z | m(z) < w}`. """
        queue = self._queue
        ca, cb = self._lower

        while True:
            event = queue.findMin()
            if event is None:
                break

            lam = event.Key
            valueAt = ca * lam + cb
            valueAfter = valueAt + event.DeltaA * lam + event.DeltaB

            if valueAfter < w:
                queue.removeMin()
                ca += event.DeltaA
                cb += event.DeltaB
                continue

            if valueAt < w:
                # the derivative jumps across w at λ
                event.DeltaA = ca + event.DeltaA
                event.DeltaB = cb + event.DeltaB - w
                if event.DeltaA == 0.0 and event.DeltaB == 0.0:
                    queue.removeMin()
                self._lower = (0.0, w)
                return lam

            return self._crossBelow(ca, cb, w)

        if ca > 0.0 or cb >= w:
            return self._crossBelow(ca, cb, w)
        raise UnboundedEnergyError("Message derivative stays below '{}' everywhere, no lowest minimizer exists.".format(w))

    def _crossBelow(self, ca: float, cb: float, w: float) -> float:
        if ca > 0.0:
            position = (w - cb) / ca
            self._queue.insert(SlopeEvent(position, ca, cb - w))
            self._lower = (0.0, w)
            return position
        self._lower = (ca, cb)
        return -math.inf

    def clip(self, lower: float, upper: float) -> Tuple[float, float]:
        """ Clips the derivative to `[w⁻, w⁺]` and returns the clip interval `(λ⁻, λ⁺)`, both `sup{z | m(z) < w}`. """
        if not lower <= upper:
            raise TvInputError("Edge weights violate w⁻ <= w⁺ with '{}' > '{}'.".format(lower, upper))

        upperBound = self._clipAbove(upper)
        lowerBound = self._clipBelow(lower)

        if lowerBound == math.inf or upperBound == -math.inf:
            raise UnboundedEnergyError("Clip interval '[{}, {}]' is empty.".format(lowerBound, upperBound))
        return lowerBound, upperBound

    def lowestMinimizer(self) -> float:
        """ Lowest minimizer `sup{z | m(z) < 0}` of the message. Consumes the message. """
        position = self._clipAbove(0.0)
        if not math.isfinite(position):
            raise UnboundedEnergyError("Root message has no lowest minimizer, search ended at '{}'.".format(position))
        return position

def accumulate_unary(message: SlopeEventQueue, unary: ConvexPwq):
    message.accumulateUnary(unary)

def clip_message(message: SlopeEventQueue, lower: float, upper: float) -> Tuple[float, float]:
    return message.clip(lower, upper)

QueueFactory = Callable[[OperationCounters], IDoubleEndedQueue]

def _asConvexPwq(unary: Union[ConvexPwq, PwlFunction]) -> ConvexPwq:
    return unary if isinstance(unary, ConvexPwq) else ConvexPwq.fromUnary(unary)

class _ConvexMessageOperations(IMessageOperations):

    def __init__(self, unaries: Sequence[ConvexPwq], weights: ConvexWeights, queueFactory: QueueFactory, counters: OperationCounters):
        self._unaries = unaries
        self._weights = weights
        self._queueFactory = queueFactory
        self._counters = counters

    def accumulate(self, node, childMessages):
        if childMessages:
            message = childMessages[0]
            for child in childMessages[1:]:
                message.meld(child)
        else:
            message = SlopeEventQueue(self._queueFactory(self._counters))
        message.accumulateUnary(self._unaries[node])
        return message

    def convolve(self, node, message):
        lower, upper = message.clip(float(self._weights.Lower[node]), float(self._weights.Upper[node]))
        return message, ClipBackPointer(lower, upper)

    def minimize(self, message):
        return message.lowestMinimizer(), None

class _ForwardOperations(_ConvexMessageOperations):

    def minimize(self, message):
        return math.nan, None

class ConvexTreeResult(NamedTuple):
    x: np.ndarray
    energy: float
    counters: OperationCounters
    pointers: BackPointerStore

def _defaultQueueFactory(tree: Tree) -> QueueFactory:
    return IntervalHeap if tree.IsChain else PairingDepq

def _prepare(tree: Tree, unaries, weights: ConvexWeights) -> List[ConvexPwq]:
    if len(unaries) != tree.NodeCount or len(weights) != tree.NodeCount:
        raise TvInputError("Expected '{}' unaries and weights, got '{}' and '{}'.".format(tree.NodeCount, len(unaries), len(weights)))
    return [_asConvexPwq(unary) for unary in unaries]

def solve_convex_tree(tree: Tree, unaries: Sequence[Union[ConvexPwq, PwlFunction]], weights: ConvexWeights,
        queueFactory: Optional[QueueFactory] = None) -> ConvexTreeResult:
    """ Lowest minimizer of a weighted TV energy with convex piecewise-linear or piecewise-quadratic unaries on a tree.

    Parameters
    ----------
    queueFactory:
        Creates the event queue of a leaf message. Defaults to `IntervalHeap` on chains and `PairingDepq` on other trees.
    """
    pwqUnaries = _prepare(tree, unaries, weights)
    counters = OperationCounters()
    operations = _ConvexMessageOperations(pwqUnaries, weights, queueFactory or _defaultQueueFactory(tree), counters)
    result = dp_solve(tree, operations)

    energy = convexEnergy(tree, pwqUnaries, weights, result.x)
    logger.debug("Convex tree solve of '%d' nodes: energy %s, %r.", tree.NodeCount, energy, counters)
    return ConvexTreeResult(result.x, energy, counters, result.pointers)

def forwardPass(tree: Tree, unaries: Sequence[Union[ConvexPwq, PwlFunction]], weights: ConvexWeights,
        queueFactory: Optional[QueueFactory] = None) -> Tuple[np.ndarray, np.ndarray]:
    """ Runs the forward pass only and returns the clip intervals `(λ⁻, λ⁺)` per child node; root entries are NaN. """
    pwqUnaries = _prepare(tree, unaries, weights)
    operations = _ForwardOperations(pwqUnaries, weights, queueFactory or _defaultQueueFactory(tree), OperationCounters())
    pointers = dp_solve(tree, operations).pointers

    lower = np.full(tree.NodeCount, math.nan)
    upper = np.full(tree.NodeCount, math.nan)
    for child, _ in tree.edges():
        lower[child] = pointers[child].Lower
        upper[child] = pointers[child].Upper
    return lower, upper
