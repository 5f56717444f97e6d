"""
Extension which adds text save and load services for tree files and unary spec files.

Tree files start with the node count followed by one line `child parent w⁻ w⁺ [C]` per edge (0-based). Unary files hold one spec line
per node, `t s0 λ1 s1 ... λt st anchorX anchorV` for piecewise-linear and `t a0 b0 λ1 a1 b1 ... anchorX anchorV` for piecewise-quadratic
unaries. Blank lines and lines starting with `#` are skipped.

Implementations
---------------
Services: `TreeTextDataService`, `UnaryTextDataService` and `PwqTextDataService`.
"""
from typing import List, Sequence
from pathlib import Path

from tvtree.convextree import ConvexPwq, parsePwqLine, formatPwqLine
from tvtree.pwl import UnaryPwl, unariesFromLines, formatUnaryLine
from tvtree.tree import TreeFile, parseTree, formatTree
from tvtree.tools import FileFormatError

# extension dependencies
from tvtree.app.objectsaving import SaveService, LoadService

_TEXT_ENCODING = "utf-8"

def _readLines(location: Path) -> List[str]:
    try:
        return location.read_text(_TEXT_ENCODING).splitlines()
    except UnicodeDecodeError as ex:
        raise FileFormatError("'{}' is not a text file: byte '{}' can't be decoded.".format(location.name, ex.start)) from ex

def _writeLines(location: Path, lines: Sequence[str]):
    location.write_text("".join(line + "\n" for line in lines), _TEXT_ENCODING)

class TreeTextDataService(SaveService[TreeFile], LoadService[TreeFile]):
    """ Service to load and save trees with their edge weights and truncations. """

    _FILE_FORMATS = (".tree", ".txt")
    _FILE_NAME = "Tree"

    def getSaveFormats(self) -> Sequence[str]:
        return self._FILE_FORMATS

    def getLoadFormats(self) -> Sequence[str]:
        return self._FILE_FORMATS

    def getToFileName(self) -> str:
        return self._FILE_NAME

    def getFromFileName(self) -> str:
        return self._FILE_NAME

    def _saveTo(self, objectToSave: TreeFile, location: Path):
        _writeLines(location, formatTree(objectToSave))

    def _loadFrom(self, location: Path) -> TreeFile:
        try:
            return parseTree(_readLines(location))
        except FileFormatError as ex:
            raise FileFormatError("'{}': {}".format(location.name, ex)) from ex

class UnaryTextDataService(SaveService[UnaryPwl], LoadService[UnaryPwl]):
    """ Service to load and save lists of anchored piecewise-linear unaries, one spec line per node. """

    _FILE_FORMATS = (".pwl", ".txt")
    _FILE_NAME = "Unaries"

    def getSaveFormats(self) -> Sequence[str]:
        return self._FILE_FORMATS

    def getLoadFormats(self) -> Sequence[str]:
        return self._FILE_FORMATS

    def getToFileName(self) -> str:
        return self._FILE_NAME

    def getFromFileName(self) -> str:
        return self._FILE_NAME

    def _saveTo(self, objectToSave: Sequence[UnaryPwl], location: Path):
        if isinstance(objectToSave, UnaryPwl):
            objectToSave = [objectToSave]
        _writeLines(location, [formatUnaryLine(unary) for unary in objectToSave])

    def _loadFrom(self, location: Path) -> List[UnaryPwl]:
        try:
            return unariesFromLines(_readLines(location))
        except FileFormatError as ex:
            raise FileFormatError("'{}': {}".format(location.name, ex)) from ex

class PwqTextDataService(SaveService[ConvexPwq], LoadService[ConvexPwq]):
    """ Service to load and save lists of convex piecewise-quadratic unaries given by their derivative segments. """

    _FILE_FORMATS = (".pwq", ".txt")
    _FILE_NAME = "Quadratic Unaries"

    def getSaveFormats(self) -> Sequence[str]:
        return self._FILE_FORMATS

    def getLoadFormats(self) -> Sequence[str]:
        return self._FILE_FORMATS

    def getToFileName(self) -> str:
        return self._FILE_NAME

    def getFromFileName(self) -> str:
        return self._FILE_NAME

    def _saveTo(self, objectToSave: Sequence[ConvexPwq], location: Path):
        if isinstance(objectToSave, ConvexPwq):
            objectToSave = [objectToSave]
        _writeLines(location, [formatPwqLine(unary) for unary in objectToSave])

    def _loadFrom(self, location: Path) -> List[ConvexPwq]:
        unaries = list()
        for lineNumber, line in enumerate(_readLines(location), start = 1):
            if line.strip() and not line.lstrip().startswith("#"):
                try:
                    unaries.append(parsePwqLine(line, lineNumber))
                except FileFormatError as ex:
                    raise FileFormatError("'{}': {}".format(location.name, ex)) from ex
        return unaries

# extension area

from tvtree.app.manifest import manifest

# services
manifest.insert(TreeTextDataService, savetype = TreeFile, tofile = TreeTextDataService._FILE_NAME,
    loadtype = TreeFile, fromfile = TreeTextDataService._FILE_NAME)
manifest.insert(UnaryTextDataService, savetype = UnaryPwl, tofile = UnaryTextDataService._FILE_NAME, savecollection = list,
    loadtype = UnaryPwl, fromfile = UnaryTextDataService._FILE_NAME, loadcollection = list)
manifest.insert(PwqTextDataService, savetype = ConvexPwq, tofile = PwqTextDataService._FILE_NAME, savecollection = list,
    loadtype = ConvexPwq, fromfile = PwqTextDataService._FILE_NAME, loadcollection = list)
