"""
Extension which adds a save and load service for the convergence logs of the primal-dual drivers.

Logs are written as CSV `k,energy,gap,seconds` or with `jsonpickle` as text which can be edited with a text editor, optionally
compressed with `gzip`.

Implementations
---------------
Services: `ConvergenceLogDataService`.
"""
from typing import Sequence
from pathlib import Path

from tvtree.prox2d import ConvergenceLog
from tvtree.tools import NumericConstants, FileFormatError

import gzip
import jsonpickle

# extension dependencies
from tvtree.app.core import IUserConfigComponent
from tvtree.app.objectsaving import SaveService, LoadService

class ConvergenceLogDataService(SaveService[ConvergenceLog], LoadService[ConvergenceLog], IUserConfigComponent):
    """ Save and load service for `ConvergenceLog`s. """

    _TEXT_ENCODING = "utf-8"

    _FILE_NAME = "Convergence Log"

    _CSV_SUFFIX = ".csv"
    _JSON_SUFFIX = ".jsi"
    _GZIP_SUFFIX = ".gz"

    _JSON_COMPRESSED_SUFFIX = _JSON_SUFFIX + _GZIP_SUFFIX

    _JSON_SUFFIXES = (_JSON_SUFFIX, _JSON_COMPRESSED_SUFFIX)
    _FILE_FORMATS = (_CSV_SUFFIX, _JSON_SUFFIX, _JSON_COMPRESSED_SUFFIX)

    _USER_CONFIG_SECTION = "Output"

    _DIGITS_KEY = "significant-digits"
    _DIGITS_DEFAULT = NumericConstants.SIGNIFICANT_DIGITS

    def __init__(self, context):
        super().__init__(context)

        self._digits = self._DIGITS_DEFAULT

    def onRequest(self, **requestProperties):
        self._digits = self.getConfigValue(self._USER_CONFIG_SECTION, self._DIGITS_KEY, self._DIGITS_DEFAULT, int)

    def getSaveFormats(self) -> Sequence[str]:
        return self._FILE_FORMATS

    def getLoadFormats(self) -> Sequence[str]:
        return self._FILE_FORMATS

    def getToFileName(self) -> str:
        return self._FILE_NAME

    def getFromFileName(self) -> str:
        return self._FILE_NAME

    def _isJson(self, location: Path) -> bool:
        return location.name.lower().endswith(self._JSON_SUFFIXES)

    def _isCompressed(self, location: Path) -> bool:
        return location.name.lower().endswith(self._GZIP_SUFFIX)

    def _saveTo(self, objectToSave: ConvergenceLog, location: Path):
        if self._isJson(location):
            binary = jsonpickle.dumps(objectToSave).encode(self._TEXT_ENCODING)
        else:
            lines = [",".join(ConvergenceLog.HEADER)]
            for row in objectToSave.rows():
                lines.append("{},{}".format(row[0], ",".join("{:.{}g}".format(value, self._digits) for value in row[1:])))
            binary = "".join(line + "\n" for line in lines).encode(self._TEXT_ENCODING)

        if self._isCompressed(location):
            binary = gzip.compress(binary)

        location.write_bytes(binary)

    def _loadFrom(self, location: Path) -> ConvergenceLog:
        binary = location.read_bytes()

        if self._isCompressed(location):
            binary = gzip.decompress(binary)

        text = binary.decode(self._TEXT_ENCODING)

        if self._isJson(location):
            log = jsonpickle.loads(text)
            if not isinstance(log, ConvergenceLog):
                raise FileFormatError("'{}' doesn't contain a convergence log but '{}'.".format(location.name, type(log).__name__))
            return log

        log = ConvergenceLog()
        lines = text.splitlines()
        if not lines or tuple(field.strip() for field in lines[0].split(",")) != ConvergenceLog.HEADER:
            raise FileFormatError("'{}' line '1': expected the header '{}'.".format(location.name, ",".join(ConvergenceLog.HEADER)))

        for lineNumber, line in enumerate(lines[1:], start = 2):
            if not line.strip():
                continue
            try:
                k, energy, gap, seconds = line.split(",")
                log.append(int(k), float(energy), float(gap), float(seconds))
            except ValueError as ex:
                raise FileFormatError("'{}' line '{}': invalid log row '{}'.".format(location.name, lineNumber, line)) from ex
        return log

# extension area

from tvtree.app.manifest import manifest

# services
manifest.insert(ConvergenceLogDataService, savetype = ConvergenceLog, tofile = ConvergenceLogDataService._FILE_NAME,
    loadtype = ConvergenceLog, fromfile = ConvergenceLogDataService._FILE_NAME)
