"""
Extension which adds a file based `UserConfigService`.

Implementations
---------------
`ConfigParserUserConfigService`
"""
from typing import Dict, Optional
from configparser import ConfigParser
from pathlib import Path

import logging

# extension dependencies
from tvtree.app.core import IUserConfig, UserConfigService

rootLogger = logging.getLogger("tvtree")

logger = rootLogger.getChild(__name__)

class ConfigParserUserConfig(IUserConfig):
    """ User config implementation based on a `ConfigParser`. Remembers whether it has been changed since loading. """

    def __init__(self, configParser: ConfigParser):
        self._configParser = configParser
        self._modified = False

    @property
    def ConfigParser(self) -> ConfigParser:
        return self._configParser

    @property
    def IsModified(self) -> bool:
        return self._modified

    def isValueKey(self, section: str, key: str) -> bool:
        return self._configParser.has_option(section, key)

    def isSection(self, section: str) -> bool:
        return self._configParser.has_section(section)

    def get(self, section: str, key: str, defaultValue: str = None) -> str:
        return self._configParser[section][key] if self._configParser.has_option(section, key) else defaultValue

    def getSection(self, section: str) -> Optional[Dict]:
        return dict(self._configParser[section]) if self._configParser.has_section(section) else None

    def set(self, section: str, key: str, value: str):
        if not self._configParser.has_section(section):
            self._configParser.add_section(section)

        if value is not None:
            if not isinstance(value, str):
                value = str(value)

            # percentage signs need to be escaped in file
            value = value.replace("%", "%%")

            self._configParser.set(section, key, value)
        else:
            self._configParser.remove_option(section, key)

        if not self._configParser[section]:
            self._configParser.remove_section(section)

        self._modified = True

    def deleteSection(self, section: str):
        if self._configParser.remove_section(section):
            self._modified = True

class ConfigParserUserConfigService(UserConfigService):
    """ User config service which provides access to the `config.ini` in the application's working directory. Missing values are
    written back when the service is destroyed. """

    _FILE_NAME = "config.ini"

    def __init__(self, context):
        super().__init__(context)

        self._configFilePath: Path = self.getContext().Application.WorkingDirectory / self._FILE_NAME

        self._userConfig: Optional[ConfigParserUserConfig] = None

    @property
    def ConfigFilePath(self) -> Path:
        return self._configFilePath

    def onRequest(self, **requestProperties):
        if self._userConfig is None:
            configParser = ConfigParser()

            if self._configFilePath.exists():
                configParser.read(self._configFilePath, encoding = "utf-8")

            self._userConfig = ConfigParserUserConfig(configParser)

    def onDestroy(self):
        if self._userConfig is not None and self._userConfig.IsModified:
            try:
                with open(self._configFilePath, "w", encoding = "utf-8") as configFile:
                    self._userConfig.ConfigParser.write(configFile)
            except OSError as ex:
                logger.warning("Could not write the user configuration to '%s': %s", self._configFilePath, ex)

    def getUserConfig(self) -> IUserConfig:
        return self._userConfig

# extension area

from tvtree.app.manifest import manifest

# services
manifest.insert(ConfigParserUserConfigService, _global = True)
