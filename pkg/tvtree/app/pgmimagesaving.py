"""
Extension which adds a save and load service for grey value images as binary PGM (`P5`, maxval 255, row-major).

Loaded images are real arrays in `[0, 1]` (byte values divided by 255). Saved values are clipped to `[0, 1]`, scaled by 255 and rounded
half-to-even. The writer emits the canonical header `P5\\n<width> <height>\\n255\\n`.

Implementations
---------------
Services: `PgmImageDataService`.
"""
from typing import Sequence, Tuple
from pathlib import Path

from tvtree.tools import FileFormatError

import numpy as np

# extension dependencies
from tvtree.app.objectsaving import SaveService, LoadService

PGM_MAGIC = b"P5"
PGM_MAXVAL = 255

_WHITESPACE = b" \t\r\n\v\f"

def _readHeaderToken(data: bytes, offset: int) -> Tuple[bytes, int]:
    """ Returns the next header token and the offset right behind it, skipping whitespace and comments. """
    while offset < len(data):
        if data[offset] in _WHITESPACE:
            offset += 1
        elif data[offset:offset + 1] == b"#":
            end = data.find(b"\n", offset)
            offset = len(data) if end < 0 else end + 1
        else:
            break

    start = offset
    while offset < len(data) and data[offset] not in _WHITESPACE and data[offset:offset + 1] != b"#":
        offset += 1

    if start == offset:
        raise FileFormatError("PGM header ends unexpectedly at byte '{}'.".format(start))
    return data[start:offset], offset

def decodePgm(data: bytes) -> np.ndarray:
    """ Decodes a binary PGM into an `uint8` array of shape `(height, width)`. """
    if data[:2] != PGM_MAGIC:
        raise FileFormatError("Not a binary PGM, expected magic '{}' at byte '0', got '{}'.".format(PGM_MAGIC.decode(), data[:2]))

    offset = 2
    numbers = list()
    for _ in range(3):
        tokenOffset = offset
        token, offset = _readHeaderToken(data, offset)
        try:
            numbers.append(int(token))
        except ValueError as ex:
            raise FileFormatError("PGM header field '{}' after byte '{}' is not an integer.".format(token, tokenOffset)) from ex

    width, height, maxval = numbers
    if width < 1 or height < 1:
        raise FileFormatError("PGM size '{} x {}' is invalid.".format(width, height))
    if maxval != PGM_MAXVAL:
        raise FileFormatError("Only PGM files with maxval '{}' are supported, got '{}'.".format(PGM_MAXVAL, maxval))
    if offset >= len(data) or data[offset] not in _WHITESPACE:
        raise FileFormatError("PGM header has to end with a single whitespace at byte '{}'.".format(offset))
    offset += 1

    expected = width * height
    if len(data) - offset < expected:
        raise FileFormatError("PGM raster is truncated: expected '{}' bytes from byte '{}', got '{}'.".format(expected, offset, len(data) - offset))

    return np.frombuffer(data, dtype = np.uint8, count = expected, offset = offset).reshape(height, width).copy()

def encodePgm(pixels: np.ndarray) -> bytes:
    pixels = np.asarray(pixels, dtype = np.uint8)
    height, width = pixels.shape
    return b"P5\n%d %d\n%d\n" % (width, height, PGM_MAXVAL) + pixels.tobytes()

def toReals(pixels: np.ndarray) -> np.ndarray:
    return np.asarray(pixels, dtype = float) / PGM_MAXVAL

def toBytes(values: np.ndarray) -> np.ndarray:
    # np.rint rounds half to even
    return np.rint(np.clip(np.asarray(values, dtype = float), 0.0, 1.0) * PGM_MAXVAL).astype(np.uint8)

class PgmImageDataService(SaveService[np.ndarray], LoadService[np.ndarray]):
    """ Service to load and save two dimensional real arrays from and to binary PGM images. """

    _FILE_FORMATS = (".pgm",)
    _FILE_NAME = "Image"

    def isSaveable(self, objectToSave: np.ndarray) -> bool:
        return isinstance(objectToSave, np.ndarray) and objectToSave.ndim == 2 and min(objectToSave.shape) > 0

    def getSaveFormats(self) -> Sequence[str]:
        return self._FILE_FORMATS

    def getLoadFormats(self) -> Sequence[str]:
        return self._FILE_FORMATS

    def getSaveFormatDescriptions(self):
        return {".pgm": "Binary portable grey map"}

    def getToFileName(self) -> str:
        return self._FILE_NAME

    def getFromFileName(self) -> str:
        return self._FILE_NAME

    def _saveTo(self, objectToSave: np.ndarray, location: Path):
        if not self.isSaveable(objectToSave):
            raise FileFormatError("Only non-empty two dimensional arrays can be saved as PGM, got shape '{}'.".format(np.shape(objectToSave)))
        location.write_bytes(encodePgm(toBytes(objectToSave)))

    def _loadFrom(self, location: Path) -> np.ndarray:
        try:
            return toReals(decodePgm(location.read_bytes()))
        except FileFormatError as ex:
            raise FileFormatError("'{}': {}".format(location.name, ex)) from ex

# extension area

from tvtree.app.manifest import manifest

# services
manifest.insert(PgmImageDataService, savetype = np.ndarray, tofile = PgmImageDataService._FILE_NAME,
    loadtype = np.ndarray, fromfile = PgmImageDataService._FILE_NAME)
