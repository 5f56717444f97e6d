"""
Extension which adds a save and load service for per-pixel piecewise-linear unary volumes.

File layout, all little-endian: `int32 m, n, t`, then `m·n·t` float64 breakpoints, `m·n·(t+1)` float64 slopes and `m·n` float64 values
at the first breakpoint (at 0 if `t = 0`), each block pixel by pixel in row-major order.

Implementations
---------------
`UnaryVolume`
Services: `UnaryVolumeDataService`.
"""
from typing import List, NamedTuple, Sequence, Tuple
from pathlib import Path

from tvtree.pwl import PwlFunction, UnaryPwl
from tvtree.tools import FileFormatError, TvInputError

import numpy as np

# extension dependencies
from tvtree.app.objectsaving import SaveService, LoadService

_HEADER_TYPE = np.dtype("<i4")
_VALUE_TYPE = np.dtype("<f8")

class UnaryVolume(NamedTuple):
    """ Unaries of an `m x n` grid with `t` breakpoints each. """
    breaks: np.ndarray
    slopes: np.ndarray
    values: np.ndarray

    @property
    def Shape(self) -> Tuple[int, int]:
        return self.values.shape

    @property
    def BreakCount(self) -> int:
        return self.breaks.shape[2]

    def unary(self, r: int, c: int) -> UnaryPwl:
        breaks = self.breaks[r, c]
        anchorX = float(breaks[0]) if len(breaks) else 0.0
        return UnaryPwl(self.slopes[r, c].tolist(), breaks.tolist(), (anchorX, float(self.values[r, c])))

    def toUnaryRows(self) -> List[List[UnaryPwl]]:
        m, n = self.Shape
        return [[self.unary(r, c) for c in range(n)] for r in range(m)]

    @classmethod
    def fromUnaries(cls, rows: Sequence[Sequence[PwlFunction]]) -> "UnaryVolume":
        """ Packs anchored unaries with a common breakpoint count. """
        m = len(rows)
        n = len(rows[0]) if m else 0
        if m < 1 or n < 1 or any(len(row) != n for row in rows):
            raise TvInputError("A unary volume needs equal, non-empty rows.")

        t = rows[0][0].BreakCount
        breaks = np.zeros((m, n, t))
        slopes = np.zeros((m, n, t + 1))
        values = np.zeros((m, n))

        for r, row in enumerate(rows):
            for c, unary in enumerate(row):
                if unary.BreakCount != t:
                    raise TvInputError("Unary volumes need a common breakpoint count, pixel '({}, {})' has '{}' instead of '{}'.".format(r, c, unary.BreakCount, t))
                if not unary.HasAnchor:
                    raise TvInputError("Unary of pixel '({}, {})' has no anchor.".format(r, c))
                breaks[r, c] = unary.Breaks
                slopes[r, c] = unary.Slopes
                values[r, c] = unary.evaluate(unary.Breaks[0] if t else 0.0)

        return cls(breaks, slopes, values)

def encodeVolume(volume: UnaryVolume) -> bytes:
    m, n = volume.Shape
    t = volume.BreakCount
    header = np.array([m, n, t], dtype = _HEADER_TYPE).tobytes()
    return header + b"".join(np.ascontiguousarray(block, dtype = _VALUE_TYPE).tobytes() for block in (volume.breaks, volume.slopes, volume.values))

def decodeVolume(data: bytes) -> UnaryVolume:
    headerSize = 3 * _HEADER_TYPE.itemsize
    if len(data) < headerSize:
        raise FileFormatError("Unary volume header needs '{}' bytes, got '{}'.".format(headerSize, len(data)))

    m, n, t = (int(value) for value in np.frombuffer(data, dtype = _HEADER_TYPE, count = 3))
    if m < 1 or n < 1 or t < 0:
        raise FileFormatError("Unary volume header '{} {} {}' is invalid.".format(m, n, t))

    counts = (m * n * t, m * n * (t + 1), m * n)
    expected = headerSize + sum(counts) * _VALUE_TYPE.itemsize
    if len(data) != expected:
        raise FileFormatError("Unary volume of '{} x {}' pixels with '{}' breakpoints needs '{}' bytes, got '{}'.".format(m, n, t, expected, len(data)))

    blocks = list()
    offset = headerSize
    for count in counts:
        blocks.append(np.frombuffer(data, dtype = _VALUE_TYPE, count = count, offset = offset).astype(float))
        offset += count * _VALUE_TYPE.itemsize

    breaks = blocks[0].reshape(m, n, t)
    if not all(np.all(np.isfinite(block)) for block in blocks):
        raise FileFormatError("Unary volume values have to be finite.")
    if t > 1 and np.any(np.diff(breaks, axis = 2) < 0):
        r, c, _ = np.argwhere(np.diff(breaks, axis = 2) < 0)[0]
        raise FileFormatError("Breakpoints of pixel '({}, {})' are not sorted.".format(r, c))

    return UnaryVolume(breaks, blocks[1].reshape(m, n, t + 1), blocks[2].reshape(m, n))

class UnaryVolumeDataService(SaveService[UnaryVolume], LoadService[UnaryVolume]):
    """ Service to load and save `UnaryVolume`s from and to the flat binary volume format. """

    _FILE_FORMATS = (".bin", ".vol")
    _FILE_NAME = "Unary Volume"

    def getSaveFormats(self) -> Sequence[str]:
        return self._FILE_FORMATS

    def getLoadFormats(self) -> Sequence[str]:
        return self._FILE_FORMATS

    def getToFileName(self) -> str:
        return self._FILE_NAME

    def getFromFileName(self) -> str:
        return self._FILE_NAME

    def _saveTo(self, objectToSave: UnaryVolume, location: Path):
        location.write_bytes(encodeVolume(objectToSave))

    def _loadFrom(self, location: Path) -> UnaryVolume:
        try:
            return decodeVolume(location.read_bytes())
        except FileFormatError as ex:
            raise FileFormatError("'{}': {}".format(location.name, ex)) from ex

# extension area

from tvtree.app.manifest import manifest

# services
manifest.insert(UnaryVolumeDataService, savetype = UnaryVolume, tofile = UnaryVolumeDataService._FILE_NAME,
    loadtype = UnaryVolume, fromfile = UnaryVolumeDataService._FILE_NAME)
