"""
Extension which adds a save and load service for the data of one or two dimensional `numpy.ndarray`s as delimited text.

Signals, per-edge weights and solutions are exchanged in this format. A first line which doesn't parse as numbers is taken as
header and kept as column names.

Implementations
---------------
Services: `ArrayTextDataService`.
"""
from typing import List, Optional, Sequence, Tuple
from pathlib import Path

from tvtree.tools import NumericConstants, FileFormatError

import gzip

import numpy as np

# extension dependencies
from tvtree.app.core import IUserConfigComponent
from tvtree.app.objectsaving import SaveService, LoadService

class ArrayNotSaveableAsTextError(FileFormatError):
    """ The `numpy.ndarray` is not saveable as text since it's not supported for any reason. """
    pass

class LabeledArray(np.ndarray):
    """ A `numpy.ndarray` with optional column names read from or written to the header line. """

    def __new__(cls, values, columns: Sequence[str] = ()):
        array = np.asarray(values, dtype = float).view(cls)
        array.Columns = tuple(columns)
        return array

    def __array_finalize__(self, array):
        self.Columns = getattr(array, "Columns", ())

def splitHeader(lines: List[str], delimiter: Optional[str]) -> Tuple[Tuple[str, ...], List[Tuple[int, str]]]:
    """ Returns the header columns (empty if the first content line is numeric) and the numbered data lines. """
    content = [(lineNumber, line) for lineNumber, line in enumerate(lines, start = 1) if line.strip() and not line.lstrip().startswith("#")]
    if not content:
        return tuple(), content

    fields = [field.strip() for field in content[0][1].split(delimiter)]
    try:
        [float(field) for field in fields]
    except ValueError:
        return tuple(fields), content[1:]
    return tuple(), content

class ArrayTextDataService(SaveService[np.ndarray], LoadService[np.ndarray], IUserConfigComponent):
    """ Saves and loads 1D or 2D `numpy.ndarray`s to and from csv and optionally compressed text files. Delimiter and significant digits are user-configurable. """

    _FILE_FORMATS = (".csv", ".csv.gz", ".txt")

    _FILE_NAME = "Text"

    _USER_CONFIG_SECTION = "Output"

    _DELIMITER_KEY = "delimiter"
    _DELIMITER_DEFAULT = ","

    _DIGITS_KEY = "significant-digits"
    _DIGITS_DEFAULT = NumericConstants.SIGNIFICANT_DIGITS

    _TEXT_ENCODING = "utf-8"

    def __init__(self, context):
        super().__init__(context)

        self._delimiter = self._DELIMITER_DEFAULT
        self._digits = self._DIGITS_DEFAULT

    @property
    def Delimiter(self) -> str:
        return self._delimiter

    def onRequest(self, **requestProperties):
        self._delimiter = self.getConfigValue(self._USER_CONFIG_SECTION, self._DELIMITER_KEY, self._DELIMITER_DEFAULT)
        self._digits = self.getConfigValue(self._USER_CONFIG_SECTION, self._DIGITS_KEY, self._DIGITS_DEFAULT, int)

    def isSaveable(self, objectToSave: np.ndarray) -> bool:
        return isinstance(objectToSave, np.ndarray) and self._isSaveableDataShape(objectToSave) and self._isSaveableDataFormat(objectToSave)

    def _isSaveableDataShape(self, array: np.ndarray) -> bool:
        return len(array.shape) <= 2

    def _isSaveableDataFormat(self, array: np.ndarray) -> bool:
        return np.issubdtype(array.dtype, np.floating) or np.issubdtype(array.dtype, np.integer)

    def getSaveFormats(self) -> Sequence[str]:
        return self._FILE_FORMATS

    def getLoadFormats(self) -> Sequence[str]:
        return self._FILE_FORMATS

    def getToFileName(self) -> str:
        return self._FILE_NAME

    def getFromFileName(self) -> str:
        return self._FILE_NAME

    def _saveTo(self, objectToSave: np.ndarray, location: Path):
        if not self._isSaveableDataShape(objectToSave):
            raise ArrayNotSaveableAsTextError("Array to save needs to be in an appropriate shape. Shape '{}' is not supported.".format(objectToSave.shape))

        if not self._isSaveableDataFormat(objectToSave):
            raise ArrayNotSaveableAsTextError("Array to save needs to be of an appropriate data type. Data type '{}' is not supported.".format(objectToSave.dtype))

        header = self._delimiter.join(getattr(objectToSave, "Columns", ()))
        # savetxt compresses by itself for a '.gz' suffix
        np.savetxt(location.as_posix(), np.asarray(objectToSave), delimiter = self._delimiter, fmt = "%.{}g".format(self._digits),
            header = header, comments = "")

    def _loadFrom(self, location: Path) -> LabeledArray:
        binary = location.read_bytes()
        if location.name.lower().endswith(".gz"):
            binary = gzip.decompress(binary)

        lines = binary.decode(self._TEXT_ENCODING).splitlines()
        delimiter = self._guessDelimiter(lines)
        columns, content = splitHeader(lines, delimiter)

        rows = list()
        for lineNumber, line in content:
            try:
                rows.append([float(field) for field in line.split(delimiter)])
            except ValueError as ex:
                raise FileFormatError("'{}' line '{}': can't parse '{}' as numbers.".format(location.name, lineNumber, line.strip())) from ex

            if len(rows[-1]) != len(rows[0]):
                raise FileFormatError("'{}' line '{}': expected '{}' columns, got '{}'.".format(location.name, lineNumber, len(rows[0]), len(rows[-1])))

        if columns and rows and len(columns) != len(rows[0]):
            raise FileFormatError("'{}': the header names '{}' columns but the data has '{}'.".format(location.name, len(columns), len(rows[0])))

        array = np.array(rows, dtype = float).reshape(len(rows), len(rows[0]) if rows else len(columns))
        return LabeledArray(array, columns)

    def _guessDelimiter(self, lines: Sequence[str]) -> Optional[str]:
        """ The configured delimiter if it occurs in the data, otherwise any whitespace. """
        for line in lines:
            if line.strip() and not line.lstrip().startswith("#"):
                return self._delimiter if self._delimiter in line else None
        return self._delimiter

# extension area

from tvtree.app.manifest import manifest

# services
manifest.insert(ArrayTextDataService, savetype = np.ndarray, tofile = ArrayTextDataService._FILE_NAME,
    loadtype = np.ndarray, fromfile = ArrayTextDataService._FILE_NAME)
