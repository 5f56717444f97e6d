"""
Exact algebra for continuous piecewise-linear functions.

A function is stored as its slope/breakpoint sequence `(s_0, λ_1, s_1, ..., λ_t, s_t)`: slope `s_p` holds on the segment between
`λ_p` and `λ_{p+1}`, with `λ_0 = -inf` and `λ_{t+1} = +inf`. Without an anchor a function is only known up to an additive constant.

Implementations
---------------
`PwlFunction`, `UnaryPwl`

Operations
----------
`sum_many`, `parseUnaryLine`, `formatUnaryLine`
"""

from typing import Iterable, List, Optional, Sequence, Tuple

from tvtree.tools import TvInputError, UnboundedEnergyError, FileFormatError, formatReal

import bisect
import heapq
import math

import numpy as np

AnchorPair = Tuple[float, float]

class PwlFunction:
    """ Continuous piecewise-linear function with sorted (possibly coincident) breakpoints. Immutable. """

    __slots__ = ("_slopes", "_breaks", "_anchor", "_offsets")

    def __init__(self, slopes: Sequence[float], breaks: Sequence[float] = (), anchor: Optional[AnchorPair] = None):
        self._slopes: Tuple[float, ...] = tuple(float(slope) for slope in slopes)
        self._breaks: Tuple[float, ...] = tuple(float(lam) for lam in breaks)
        self._anchor: Optional[AnchorPair] = None if anchor is None else (float(anchor[0]), float(anchor[1]))

        if len(self._slopes) != len(self._breaks) + 1:
            raise TvInputError("A function with '{}' breakpoints needs '{}' slopes, got '{}'.".format(
                len(self._breaks), len(self._breaks) + 1, len(self._slopes)))

        for slope in self._slopes:
            if not math.isfinite(slope):
                raise TvInputError("Slopes have to be finite, got '{}'.".format(slope))

        for left, right in zip(self._breaks, self._breaks[1:]):
            if not left <= right:
                raise TvInputError("Breakpoints have to be sorted, got '{}' before '{}'.".format(left, right))

        # primitive at each break relative to the first break
        offsets = [0.0] * len(self._breaks)
        for k in range(1, len(self._breaks)):
            offsets[k] = offsets[k - 1] + self._slopes[k] * (self._breaks[k] - self._breaks[k - 1])
        self._offsets = offsets

    @property
    def Slopes(self) -> Tuple[float, ...]:
        """ The slopes `s_0..s_t`. """
        return self._slopes

    @property
    def Breaks(self) -> Tuple[float, ...]:
        """ The breakpoints `λ_1..λ_t`. """
        return self._breaks

    @property
    def BreakCount(self) -> int:
        """ Number of breakpoints `t`. """
        return len(self._breaks)

    @property
    def Anchor(self) -> Optional[AnchorPair]:
        """ The `(x0, value)` pair fixing the additive constant, if any. """
        return self._anchor

    @property
    def HasAnchor(self) -> bool:
        return self._anchor is not None

    @property
    def IsConvex(self) -> bool:
        """ Whether the slopes are non-decreasing. """
        return all(left <= right for left, right in zip(self._slopes, self._slopes[1:]))

    def _primitive(self, x: float) -> float:
        """ Integral of the slope from the first break (or from zero without breaks) to `x`. """
        if not self._breaks:
            return self._slopes[0] * x

        if x <= self._breaks[0]:
            return self._slopes[0] * (x - self._breaks[0])

        k = bisect.bisect_left(self._breaks, x)
        return self._offsets[k - 1] + self._slopes[k] * (x - self._breaks[k - 1])

    def _requireAnchor(self):
        if self._anchor is None:
            raise TvInputError("The function has no anchor, absolute values are undefined.")

    def evaluate(self, x: float) -> float:
        """ Returns the anchored value at `x`. """
        self._requireAnchor()
        x0, value0 = self._anchor
        return value0 + self._primitive(float(x)) - self._primitive(x0)

    def evaluateMany(self, xs) -> np.ndarray:
        """ Vectorized `evaluate`. """
        self._requireAnchor()
        xs = np.asarray(xs, dtype = float)
        slopes = np.asarray(self._slopes)

        if not self._breaks:
            primitive = slopes[0] * xs
        else:
            breaks = np.asarray(self._breaks)
            offsets = np.asarray(self._offsets)
            k = np.searchsorted(breaks, xs, side = "left")
            left = k == 0
            kk = np.maximum(k, 1)
            primitive = np.where(left, slopes[0] * (xs - breaks[0]), offsets[kk - 1] + slopes[k] * (xs - breaks[kk - 1]))

        x0, value0 = self._anchor
        return value0 + primitive - self._primitive(x0)

    def breakValues(self) -> List[float]:
        """ Returns the anchored values at all breakpoints, in break order. """
        self._requireAnchor()
        if not self._breaks:
            return []
        shift = self._anchor[1] - self._primitive(self._anchor[0])
        return [shift + offset for offset in self._offsets]

    def reanchored(self, x0: float) -> "PwlFunction":
        """ Returns the same function anchored at `x0`. """
        return self.__class__(self._slopes, self._breaks, (x0, self.evaluate(x0)))

    def withAnchor(self, anchor: Optional[AnchorPair]) -> "PwlFunction":
        return PwlFunction(self._slopes, self._breaks, anchor)

    def addLinear(self, a: float) -> "PwlFunction":
        """ Adds the linear function `a * x`: every slope increases by `a`, breaks are unchanged. """
        anchor = None if self._anchor is None else (self._anchor[0], self._anchor[1] + a * self._anchor[0])
        return self.__class__(tuple(slope + a for slope in self._slopes), self._breaks, anchor)

    def reverse(self) -> "PwlFunction":
        """ Returns `z -> f(-z)`. """
        anchor = None if self._anchor is None else (-self._anchor[0], self._anchor[1])
        return self.__class__(tuple(-slope for slope in reversed(self._slopes)), tuple(-lam for lam in reversed(self._breaks)), anchor)

    def scaled(self, factor: float) -> "PwlFunction":
        """ Returns `factor * f`. """
        anchor = None if self._anchor is None else (self._anchor[0], factor * self._anchor[1])
        return self.__class__(tuple(factor * slope for slope in self._slopes), self._breaks, anchor)

    def normalize(self) -> "PwlFunction":
        """ Merges coincident breakpoints and drops breakpoints between equal slopes. Never applied implicitly. """
        slopes = [self._slopes[0]]
        breaks: List[float] = []

        for k, lam in enumerate(self._breaks):
            slope = self._slopes[k + 1]
            if breaks and breaks[-1] == lam:
                slopes[-1] = slope
            else:
                breaks.append(lam)
                slopes.append(slope)

        mergedSlopes = [slopes[0]]
        mergedBreaks: List[float] = []
        for lam, slope in zip(breaks, slopes[1:]):
            if slope != mergedSlopes[-1]:
                mergedBreaks.append(lam)
                mergedSlopes.append(slope)

        return PwlFunction(mergedSlopes, mergedBreaks, self._anchor)

    def minimum(self) -> Tuple[float, float]:
        """ Returns the lowest minimizing breakpoint and the minimum value.

        A constant function is minimized at its anchor position. Raises `UnboundedEnergyError` when the function is unbounded below.
        """
        self._requireAnchor()
        first, last = self._slopes[0], self._slopes[-1]

        if first > 0.0 or last < 0.0:
            raise UnboundedEnergyError("Function is unbounded below, end slopes are '{}' and '{}'.".format(first, last))

        if not self._breaks:
            return self._anchor

        values = self.breakValues()
        best = 0
        for k in range(1, len(values)):
            if values[k] < values[best]:
                best = k
        return self._breaks[best], values[best]

    def __eq__(self, other) -> bool:
        return isinstance(other, PwlFunction) and self._slopes == other._slopes and self._breaks == other._breaks

    def __hash__(self):
        return hash((self._slopes, self._breaks))

    def __repr__(self) -> str:
        return "{}(slopes={}, breaks={}, anchor={})".format(self.__class__.__name__, list(self._slopes), list(self._breaks), self._anchor)

    @classmethod
    def fromPoints(cls, xs: Sequence[float], ys: Sequence[float], leftSlope: float, rightSlope: float) -> "PwlFunction":
        """ Interpolates the points `(xs, ys)` (sorted `xs`, duplicates skipped) and extends with the given end slopes. """
        points = list()
        for x, y in zip(xs, ys):
            if not points or x > points[-1][0]:
                points.append((float(x), float(y)))

        if not points:
            raise TvInputError("At least one interpolation point is needed.")

        slopes = [leftSlope]
        for (x0, y0), (x1, y1) in zip(points, points[1:]):
            slopes.append((y1 - y0) / (x1 - x0))
        slopes.append(rightSlope)

        return cls(slopes, [x for x, _ in points], points[0])

class UnaryPwl(PwlFunction):
    """ Anchored piecewise-linear unary term with O(1) breakpoints. """

    __slots__ = ()

    def __init__(self, slopes: Sequence[float], breaks: Sequence[float] = (), anchor: Optional[AnchorPair] = None):
        if anchor is None:
            raise TvInputError("Unary terms need an anchor.")
        super().__init__(slopes, breaks, anchor)

    @property
    def IsBoundedBelow(self) -> bool:
        """ Whether the unary is bounded below on its own. """
        if self.BreakCount == 0:
            return self.Slopes[0] == 0.0
        return self.Slopes[0] <= 0.0 <= self.Slopes[-1]

    @classmethod
    def absolute(cls, center: float, weight: float = 1.0) -> "UnaryPwl":
        """ Returns `weight * |x - center|`. """
        return cls((-weight, weight), (center,), (center, 0.0))

def sum_many(functions: Sequence[PwlFunction]) -> PwlFunction:
    """ Sums piecewise-linear functions by a k-way heap merge of their breakpoint lists.

    Runs in `O(t log(d + 1))` for `t` total breakpoints of `d + 1` functions. The result keeps every input breakpoint and is anchored
    at the first function's anchor when all inputs are anchored.
    """
    if not functions:
        raise TvInputError("Can't sum an empty list of functions.")

    if len(functions) == 1:
        return functions[0] if type(functions[0]) is PwlFunction else PwlFunction(functions[0].Slopes, functions[0].Breaks, functions[0].Anchor)

    slope = sum(function.Slopes[0] for function in functions)
    slopes = [slope]
    breaks: List[float] = []

    runs = [[(lam, index, k) for k, lam in enumerate(function.Breaks)] for index, function in enumerate(functions)]
    for lam, index, k in heapq.merge(*runs):
        functionSlopes = functions[index].Slopes
        slope += functionSlopes[k + 1] - functionSlopes[k]
        breaks.append(lam)
        slopes.append(slope)

    anchor = None
    if all(function.HasAnchor for function in functions):
        x0 = functions[0].Anchor[0]
        anchor = (x0, sum(function.evaluate(x0) for function in functions))

    return PwlFunction(slopes, breaks, anchor)

def parseUnaryLine(line: str, lineNumber: int = 0) -> UnaryPwl:
    """ Parses a unary spec line `t s0 λ1 s1 ... λt st anchorX anchorV`. """
    tokens = line.split()
    try:
        t = int(tokens[0])
        values = [float(token) for token in tokens[1:]]
    except (IndexError, ValueError) as ex:
        raise FileFormatError("Line '{}': can't parse unary spec '{}'.".format(lineNumber, line.strip())) from ex

    if t < 0 or len(values) != 2 * t + 3:
        raise FileFormatError("Line '{}': a unary with '{}' breakpoints needs '{}' numbers after the count, got '{}'.".format(
            lineNumber, t, 2 * t + 3, len(values)))

    sequence = values[:2 * t + 1]
    try:
        return UnaryPwl(sequence[0::2], sequence[1::2], (values[-2], values[-1]))
    except TvInputError as ex:
        raise FileFormatError("Line '{}': {}".format(lineNumber, ex)) from ex

def formatUnaryLine(unary: PwlFunction) -> str:
    """ Formats a unary as a spec line, inverse of `parseUnaryLine`. """
    tokens = [str(unary.BreakCount), formatReal(unary.Slopes[0])]
    for lam, slope in zip(unary.Breaks, unary.Slopes[1:]):
        tokens.append(formatReal(lam))
        tokens.append(formatReal(slope))
    tokens.append(formatReal(unary.Anchor[0]))
    tokens.append(formatReal(unary.Anchor[1]))
    return " ".join(tokens)

def unariesFromLines(lines: Iterable[str]) -> List[UnaryPwl]:
    """ Parses all non-empty, non-comment lines as unary specs. """
    unaries = list()
    for lineNumber, line in enumerate(lines, start = 1):
        if line.strip() and not line.lstrip().startswith("#"):
            unaries.append(parseUnaryLine(line, lineNumber))
    return unaries
