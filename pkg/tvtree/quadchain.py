"""
Linear time weighted TV on a chain with strictly convex quadratic unaries `½ a_i z² - b_i z`.

The derivative of every node message is continuous, strictly increasing and piecewise linear. It is stored as the sequence
`(s_0, λ_1, s_1, ..., λ_t, s_t)` in the middle of a flat array: the true slope of segment `p` is `s_p + ā` with the running sum
`ā = a_0 + ... + a_i`, so adding a unary never touches the stored slopes. Clipping the derivative to `[w⁻, w⁺]` removes breakpoints
from both ends and appends exactly two new ones.
"""

from typing import NamedTuple, Optional, Sequence

from tvtree.tools import TvInputError

import logging
import math

import numpy as np

logger = logging.getLogger(__name__)

class QuadChainStatistics:
    """ Breakpoint accounting of the last solve. """

    def __init__(self):
        self.Appended = 0
        self.Removed = 0
        self.PeakFloats = 0

class ClipChain:
    """ Reusable workspace of the chain solver: breakpoint array of capacity `4n + 4` and the recorded clip bounds. """

    def __init__(self, n: int = 0):
        self._n = 0
        self._data = np.empty(0)
        self._upper = np.empty(0)
        self._lower = np.empty(0)
        self.Statistics = QuadChainStatistics()
        self.ensureCapacity(n)

    @property
    def Capacity(self) -> int:
        """ Largest chain length the workspace holds without reallocation. """
        return self._n

    def ensureCapacity(self, n: int):
        if n > self._n:
            self._n = n
            self._data = np.empty(4 * n + 4)
            self._upper = np.empty(n)
            self._lower = np.empty(n)

    @property
    def Data(self) -> np.ndarray:
        return self._data

    @property
    def Lower(self) -> np.ndarray:
        """ Recorded `λ⁻` per node, invalid in compact mode. """
        return self._lower

    @property
    def Upper(self) -> np.ndarray:
        """ Recorded `λ⁺` per node. """
        return self._upper

def _edgeWeights(weights: Optional[Sequence[float]], n: int, default: float) -> np.ndarray:
    if weights is None:
        return np.full(max(n - 1, 0), default)
    weights = np.asarray(weights, dtype = float)
    if len(weights) == n and n > 0:
        weights = weights[:n - 1]
    if len(weights) != max(n - 1, 0):
        raise TvInputError("Expected '{}' edge weights, got '{}'.".format(n - 1, len(weights)))
    return weights

def solve_quad_chain(a: Sequence[float], b: Sequence[float], lower: Sequence[float], upper: Sequence[float],
        workspace: Optional[ClipChain] = None, compact: bool = True, out: Optional[np.ndarray] = None) -> np.ndarray:
    """ Exact minimizer of `Σ ½ a_i x_i² - b_i x_i + Σ f_i(x_{i+1} - x_i)` with `f_i(z) = w⁻_i z` for `z < 0`, `w⁺_i z` otherwise.

    Parameters
    ----------
    a, b:
        Unary coefficients, `a_i > 0`.
    lower, upper:
        Edge weights `w⁻ <= w⁺` of the `n - 1` edges `(i, i + 1)`. A trailing root entry is ignored.
    workspace:
        Scratch reused across calls, allocated if missing.
    compact:
        Store `λ⁻` in the output array instead of the workspace, so the solve needs at most `6n + 1` floats. Without it `Lower`
        stays readable after the solve at the cost of `n` more floats.
    out:
        Optional output array of length `n`.
    """
    a = np.asarray(a, dtype = float)
    b = np.asarray(b, dtype = float)
    n = len(a)

    if len(b) != n:
        raise TvInputError("Unary coefficient arrays differ in length, '{}' and '{}'.".format(n, len(b)))
    if n == 0:
        return np.empty(0)
    if not np.all(a > 0):
        raise TvInputError("Quadratic coefficients have to be positive, got minimum '{}'.".format(a.min()))

    wl = _edgeWeights(lower, n, 0.0)
    wu = _edgeWeights(upper, n, 0.0)
    if np.any(~(wl <= wu)):
        raise TvInputError("Edge weights violate w⁻ <= w⁺.")

    workspace = workspace if workspace is not None else ClipChain(n)
    workspace.ensureCapacity(n)
    statistics = QuadChainStatistics()
    workspace.Statistics = statistics

    x = out if out is not None else np.empty(n)
    data = workspace.Data
    lowerBounds = x if compact else workspace.Lower
    upperBounds = workspace.Upper

    # weights of the virtual root edge
    edgeLower = list(wl) + [0.0]
    edgeUpper = list(wu) + [0.0]

    aSum = float(a[0])
    ai, bi = float(a[0]), float(b[0])
    lam0, lam1 = (edgeLower[0] + bi) / ai, (edgeUpper[0] + bi) / ai
    first = 2 * n
    data[first] = -aSum
    data[first + 1] = lam0
    data[first + 2] = 0.0
    data[first + 3] = lam1
    data[first + 4] = -aSum
    last = first + 4
    lowest, highest = first, last
    lowerBounds[0], upperBounds[0] = lam0, lam1
    statistics.Appended = 2

    for i in range(1, n):
        ai, bi = float(a[i]), float(b[i])
        pl, pu = edgeLower[i - 1], edgeUpper[i - 1]
        cl, cu = edgeLower[i], edgeUpper[i]
        aSum += ai
        t = (last - first) // 2

        # left scan: largest l with m(λ_l) < w⁻, l = 0 if none
        l = 0
        lamL = data[first + 1]
        valueL = pl + ai * lamL - bi
        if valueL < cl:
            l = 1
            while l < t:
                nextLam = data[first + 2 * l + 1]
                nextValue = valueL + (data[first + 2 * l] + aSum) * (nextLam - lamL)
                if nextValue >= cl:
                    break
                l += 1
                lamL, valueL = nextLam, nextValue
            newLower = lamL + (cl - valueL) / (data[first + 2 * l] + aSum)
        else:
            newLower = lamL - (valueL - cl) / (data[first] + aSum)

        # right scan over λ_{l+1}..λ_t: smallest r with m(λ_r) > w⁺, r = t + 1 if none; λ_l is never read
        r = t + 1
        refLam, refValue = newLower, cl
        if l < t:
            lamR = data[first + 2 * t - 1]
            valueR = pu + ai * lamR - bi
            if valueR > cu:
                r = t
                while r - 1 > l:
                    previousLam = data[first + 2 * r - 3]
                    previousValue = valueR - (data[first + 2 * r - 2] + aSum) * (lamR - previousLam)
                    lamR, valueR = previousLam, previousValue
                    if previousValue <= cu:
                        refLam, refValue = previousLam, previousValue
                        break
                    r -= 1
            else:
                refLam, refValue = lamR, valueR

        newUpper = refLam + (cu - refValue) / (data[first + 2 * (r - 1)] + aSum)

        statistics.Removed += l + (t - r + 1)

        # rewrite the sequence as (-ā, λ⁻, s_l, λ_{l+1}, ..., s_{r-1}, λ⁺, -ā)
        newFirst = first + 2 * l - 2
        newLast = first + 2 * r
        data[newFirst] = -aSum
        data[newFirst + 1] = newLower
        data[newLast - 1] = newUpper
        data[newLast] = -aSum
        first, last = newFirst, newLast
        lowest, highest = min(lowest, first), max(highest, last)

        lowerBounds[i], upperBounds[i] = newLower, newUpper
        statistics.Appended += 2

    # touched breakpoint span, recorded bounds and the output
    statistics.PeakFloats = (highest - lowest + 1) + (1 if compact else 2) * n + n

    x[n - 1] = lowerBounds[n - 1]
    for i in range(n - 2, -1, -1):
        y = x[i + 1]
        lo, hi = lowerBounds[i], upperBounds[i]
        x[i] = lo if y < lo else hi if y > hi else y

    logger.debug("Quadratic chain of '%d' nodes: appended %d, removed %d breakpoints.", n, statistics.Appended, statistics.Removed)
    return x

def quadChainEnergy(a, b, lower, upper, x) -> float:
    """ Energy `Σ ½ a_i x_i² - b_i x_i + Σ f_i(x_{i+1} - x_i)`. """
    a, b, x = np.asarray(a, dtype = float), np.asarray(b, dtype = float), np.asarray(x, dtype = float)
    n = len(x)
    wl, wu = _edgeWeights(lower, n, 0.0), _edgeWeights(upper, n, 0.0)
    z = np.diff(x)
    return float(np.sum(0.5 * a * x * x - b * x) + np.sum(np.where(z < 0, wl * z, wu * z)))

class ChainCertificate(NamedTuple):
    multipliers: np.ndarray
    violation: float

def chainCertificate(a, b, lower, upper, x) -> ChainCertificate:
    """ Subgradient certificate of a chain solution.

    The edge multipliers `u_i = Σ_{k <= i} (a_k x_k - b_k)` have to lie in the subdifferential of the edge term at `x_{i+1} - x_i`
    and the last one has to vanish. Returns the multipliers and the largest distance to these conditions.
    """
    a, b, x = np.asarray(a, dtype = float), np.asarray(b, dtype = float), np.asarray(x, dtype = float)
    n = len(x)
    wl, wu = _edgeWeights(lower, n, 0.0), _edgeWeights(upper, n, 0.0)

    u = np.cumsum(a * x - b)
    z = np.diff(x)
    edgeU = u[:-1]

    low = np.where(z > 0, wu, wl)
    high = np.where(z < 0, wl, wu)
    distance = np.maximum(np.maximum(low - edgeU, edgeU - high), 0.0)

    violation = max(float(distance.max(initial = 0.0)), abs(float(u[-1])))
    return ChainCertificate(u, violation if math.isfinite(violation) else math.inf)
