"""
Extension which adds a save and load service to save and load jsonable dictionaries, the optional run configurations, to and from json.

Implementations
---------------
Services: `DictionaryJsonDataService`.
"""
from typing import Dict
from pathlib import Path

from tvtree.tools import FileFormatError

import json

# extension dependencies
from tvtree.app.objectsaving import SaveService, LoadService

class DictionaryJsonDataService(SaveService[Dict], LoadService[Dict]):
    """ Service to load and save dictionaries from and to Json. """

    _FILE_FORMATS = (".json", ".jsn")
    _FILE_NAME = "Json"

    _JSON_FILE_ENCODING = "utf-8"
    _JSON_INDENT_LEVEL = 4

    def isSaveable(self, objectToSave: Dict) -> bool:
        saveable = isinstance(objectToSave, dict)

        if saveable:
            try:
                json.dumps(objectToSave)
            except (TypeError, ValueError):
                saveable = False

        return saveable

    def getSaveFormats(self):
        return self._FILE_FORMATS

    def getLoadFormats(self):
        return self._FILE_FORMATS

    def getToFileName(self):
        return self._FILE_NAME

    def getFromFileName(self):
        return self._FILE_NAME

    def _saveTo(self, objectToSave: Dict, location: Path):
        location.write_text(json.dumps(objectToSave, indent = self._JSON_INDENT_LEVEL, sort_keys = True), self._JSON_FILE_ENCODING)

    def _loadFrom(self, location: Path) -> Dict:
        try:
            return json.loads(location.read_text(self._JSON_FILE_ENCODING))
        except json.JSONDecodeError as ex:
            raise FileFormatError("'{}' line '{}' column '{}': {}.".format(location.name, ex.lineno, ex.colno, ex.msg)) from ex

# extension area

from tvtree.app.manifest import manifest

# services
manifest.insert(DictionaryJsonDataService, savetype = dict, tofile = DictionaryJsonDataService._FILE_NAME,
    loadtype = dict, fromfile = DictionaryJsonDataService._FILE_NAME)
