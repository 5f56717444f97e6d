"""
Extension which provides the basic interface, derivable and helper components of the application.

Interfaces
----------
Services: `UserConfigService`

Derivables
----------
Components: `IUserConfigComponent`. Use it if you need to interact with a `UserConfigService` since it provides a much more convenient way
to interact with it than dealing with the service and context directly.
Commands: `SolverCommand`, the base of all subcommands which read input files, solve and print or save results.

Implementations
---------------
`RunConfig`: the resolved parameters of one subcommand run.
"""

from argparse import Namespace
from pathlib import Path
from typing import Any, Dict, Iterable, Optional, Union

from tvtree.apptk import IComponent, Command, Service, ComponentAvailabilityException
from tvtree.tools import NumericConstants, TvInputError, formatReal

# extension dependencies
from tvtree.app.objectsaving import ILoadServiceComponent, ISaveServiceComponent

import logging
import math
import os

rootLogger = logging.getLogger("tvtree")

logger = rootLogger.getChild(__name__)

THREADS_ENVIRONMENT_VARIABLE = "TVTREE_THREADS"

class IUserConfig:
    """ Interface to a configuration in '.ini' format. """

    def isValueKey(self, section: str, key: str) -> bool:
        """ Returns if the section and key combination exists. """
        raise NotImplementedError

    def isSection(self, section: str) -> bool:
        """ Returns if the given section exits. """
        raise NotImplementedError

    def get(self, section: str, key: str, defaultValue: str = None) -> str:
        """ Returns the value for the given section and key combination. If it doesn't exist the default value shall be returned. """
        raise NotImplementedError

    def getSection(self, section: str) -> Dict:
        """ Returns all key value combinations of the given section.

        Warning
        -------
        Depending on the actual implementation, changes to the returned `Dict` may not be persistent. """
        raise NotImplementedError

    def set(self, section: str, key: str, value: Union[str, int, float, bool, type(None)]):
        """ Creates or updates the value of the given section and key combination. The key shall be deleted if the value is `None`. """
        raise NotImplementedError

    def deleteValue(self, section: str, key: str):
        """ Deletes the value and the given section-key combination. """
        self.set(section, key, None)

    def deleteSection(self, section: str):
        """ Deletes an entire section with all its values and keys. """
        raise NotImplementedError

    def setSection(self, section: str, keyValues: Dict[str, Union[str, int, float, bool, type(None)]], update: bool = True):
        """ Updates or sets the given section with the given key-value combinations.

        Parameters
        ----------
        update: bool, optional, default = True
            If true all existing key-values will be kept and the section will be updated with the given key-values, otherwise the whole section gets deleted beforehand.
        """
        if not update and self.isSection(section):
            self.deleteSection(section)

        if keyValues:
            for key, value in keyValues.items():
                self.set(section, key, value)

    def getSet(self, section: str, key: str, defaultValue: Union[str, int, float, bool, type(None)]) -> str:
        """ Returns the value for the given section and key but creates it beforehand with the given default value if it doesn't exist. """
        if not self.isValueKey(section, key):
            self.set(section, key, defaultValue)
        return self.get(section, key)

class UserConfigService(Service):
    """ Service interface which provides access to a user configuration. Should be always registered as global. """

    def getUserConfig(self) -> IUserConfig:
        raise NotImplementedError

class IUserConfigComponent(IComponent):
    """ Provides a more convenient way to interact with a `UserConfigService` than dealing directly with a service. """

    def getUserConfig(self) -> Optional[IUserConfig]:
        """ Retrieves the user configuration through a `UserConfigService` request. Handles component availability exceptions and returns `None` instead. """
        try:
            userConfigService = self.getContext().requestService(UserConfigService)
        except ComponentAvailabilityException:
            userConfigService = None

        return userConfigService.getUserConfig() if userConfigService is not None else None

    def getConfigValue(self, section: str, key: str, defaultValue, converter = str):
        """ Returns the converted config value, creating it with the default beforehand. Falls back to the default if there is no
        user configuration or the stored value can't be converted. """
        userConfig = self.getUserConfig()

        if userConfig is None:
            return defaultValue

        value = userConfig.getSet(section, key, defaultValue)
        try:
            return converter(value)
        except (TypeError, ValueError) as ex:
            logger.warning("Config value '%s' of '[%s] %s' is invalid, using '%s': %s", value, section, key, defaultValue, ex)
            return defaultValue

    def closeUserConfig(self):
        """ Stops any running `UserConfigService`. """
        self.getContext().stopService(UserConfigService)

    @property
    def IsUserConfigPresent(self) -> bool:
        """ If there is any running `UserConfigService` in the component's context. """
        return self.getContext().isServiceRunning(UserConfigService)

class RunConfig:
    """ Parameters of one subcommand run.

    Values come from an optional JSON run file and from the command line; explicitly given flags win. Keys are the argument
    destinations, dashes in run file keys are read as underscores.
    """

    _POSITIVE_KEYS = ("C", "tau0", "wall_factor")
    _NON_NEGATIVE_KEYS = ("w", "stride", "threads", "gap_threshold", "sigma", "accel_gamma", "bound_every")
    _AT_LEAST_ONE_KEYS = ("iters", "reps", "count")

    _IGNORED_KEYS = ("commandClass", "command", "run_config", "verbose", "quiet")

    def __init__(self, subcommand: str, parameters: Dict[str, Any]):
        self._subcommand = subcommand
        self._parameters = dict(parameters)

    @classmethod
    def fromArguments(cls, arguments: Namespace, runFile: Optional[Dict[str, Any]] = None) -> "RunConfig":
        parameters = dict()

        if runFile:
            for key, value in runFile.items():
                parameters[str(key).replace("-", "_")] = value

        for key, value in vars(arguments).items():
            if value is not None and key not in cls._IGNORED_KEYS:
                parameters[key] = value

        return cls(getattr(arguments, "command", None), parameters)

    @property
    def Subcommand(self) -> Optional[str]:
        return self._subcommand

    @property
    def Parameters(self) -> Dict[str, Any]:
        return dict(self._parameters)

    def has(self, key: str) -> bool:
        return self._parameters.get(key, None) is not None

    def get(self, key: str, defaultValue: Any = None) -> Any:
        value = self._parameters.get(key, None)
        return defaultValue if value is None else value

    def require(self, key: str) -> Any:
        """ Returns the value of a mandatory parameter. """
        if not self.has(key):
            raise TvInputError("Subcommand '{}' needs the parameter '{}'.".format(self._subcommand, key))
        return self._parameters[key]

    def getFloat(self, key: str, defaultValue: Optional[float] = None) -> Optional[float]:
        return self._convert(key, defaultValue, float)

    def getInt(self, key: str, defaultValue: Optional[int] = None) -> Optional[int]:
        return self._convert(key, defaultValue, int)

    def getBool(self, key: str, defaultValue: bool = False) -> bool:
        value = self.get(key, defaultValue)
        if isinstance(value, str):
            return value.strip().lower() in ("1", "true", "yes", "on")
        return bool(value)

    def getPath(self, key: str, defaultValue: Optional[Path] = None) -> Optional[Path]:
        value = self.get(key, None)
        return Path(value) if value is not None else defaultValue

    def _convert(self, key: str, defaultValue, converter):
        value = self.get(key, None)
        if value is None:
            return defaultValue
        try:
            return converter(value)
        except (TypeError, ValueError) as ex:
            raise TvInputError("Parameter '{}' has the invalid value '{}'.".format(key, value)) from ex

    def validate(self) -> "RunConfig":
        """ Checks the parameter ranges `w ≥ 0`, `C > 0`, `τ0 > 0`, `iters ≥ 1` and alike before dispatch. """
        for key in self._POSITIVE_KEYS + self._NON_NEGATIVE_KEYS + self._AT_LEAST_ONE_KEYS:
            if not self.has(key):
                continue
            try:
                value = float(self._parameters[key])
            except (TypeError, ValueError):
                # weights may name a CSV file
                continue

            if math.isnan(value):
                raise TvInputError("Parameter '{}' must not be NaN.".format(key))
            if key in self._POSITIVE_KEYS and not value > 0:
                raise TvInputError("Parameter '{}' has to be positive, got '{}'.".format(key, value))
            if key in self._NON_NEGATIVE_KEYS and value < 0:
                raise TvInputError("Parameter '{}' has to be non-negative, got '{}'.".format(key, value))
            if key in self._AT_LEAST_ONE_KEYS and value < 1:
                raise TvInputError("Parameter '{}' has to be at least 1, got '{}'.".format(key, value))
        return self

    def __repr__(self):
        return "RunConfig({!r}, {!r})".format(self._subcommand, self._parameters)

class SolverCommand(Command, IUserConfigComponent, ILoadServiceComponent, ISaveServiceComponent):
    """ Base of the subcommands: resolves the `RunConfig`, loads inputs through the file codecs and writes numbers with the configured precision. """

    _USER_CONFIG_SECTION = "Output"

    _DIGITS_KEY = "significant-digits"
    _DIGITS_DEFAULT = NumericConstants.SIGNIFICANT_DIGITS

    _THREADS_SECTION = "Primal Dual"
    _THREADS_KEY = "threads"
    _THREADS_DEFAULT = 0

    _SEED_SECTION = "Bench"
    _SEED_KEY = "seed"
    _SEED_DEFAULT = 42

    def __init__(self, context):
        super().__init__(context)

        self._digits = self._DIGITS_DEFAULT

    def onCreate(self):
        self._digits = self.getConfigValue(self._USER_CONFIG_SECTION, self._DIGITS_KEY, self._DIGITS_DEFAULT, int)

    @property
    def Digits(self) -> int:
        return self._digits

    def runConfig(self, arguments: Namespace) -> RunConfig:
        """ Resolves and validates the run parameters, reading the JSON run file given by `--config` if any. """
        runFile = None
        runFilePath = getattr(arguments, "run_config", None)

        if runFilePath:
            runFile = self.loadObject(Path(runFilePath), dict)
            if not isinstance(runFile, dict):
                raise TvInputError("Run config '{}' has to contain a JSON object.".format(runFilePath))
            logger.info("Run parameters from '%s': %s", runFilePath, sorted(runFile.keys()))

        return RunConfig.fromArguments(arguments, runFile).validate()

    def threadCount(self, runConfig: RunConfig) -> int:
        """ `TVTREE_THREADS` over `--threads` over the configured value; 0 means all available cores. """
        environment = os.environ.get(THREADS_ENVIRONMENT_VARIABLE, "").strip()
        if environment:
            try:
                threads = int(environment)
            except ValueError as ex:
                raise TvInputError("Environment variable '{}' has the invalid value '{}'.".format(THREADS_ENVIRONMENT_VARIABLE, environment)) from ex
            if threads < 0:
                raise TvInputError("Environment variable '{}' has to be non-negative, got '{}'.".format(THREADS_ENVIRONMENT_VARIABLE, threads))
            return threads

        if runConfig.has("threads"):
            return runConfig.getInt("threads")

        return max(self.getConfigValue(self._THREADS_SECTION, self._THREADS_KEY, self._THREADS_DEFAULT, int), 0)

    def seed(self, runConfig: RunConfig) -> int:
        """ Subcommand `--seed` over the global `--seed` over the configured seed. """
        if runConfig.has("seed"):
            return runConfig.getInt("seed")
        if runConfig.has("global_seed"):
            return runConfig.getInt("global_seed")
        return self.getConfigValue(self._SEED_SECTION, self._SEED_KEY, self._SEED_DEFAULT, int)

    def format(self, value: float) -> str:
        return formatReal(value, self._digits)

    def writeLine(self, line: str = ""):
        output = self.getContext().Application.Output
        output.write(line)
        output.write("\n")

    def writeValues(self, values: Iterable[float]):
        for value in values:
            self.writeLine(self.format(value))

    def writeSolution(self, x: Iterable[float], energy: float):
        """ One value per line followed by `energy <value>`. """
        self.writeValues(x)
        self.writeLine("energy {}".format(self.format(energy)))
