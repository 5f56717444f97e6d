"""
Runs the tvtree command line application. `python -m tvtree.app` and the `tvtree.py` launcher both end up in `main`.
"""

from argparse import ArgumentParser, Namespace
from pathlib import Path
from typing import Optional, Sequence

from tvtree.app.core import UserConfigService
from tvtree.app.manifest import manifest
from tvtree.tools import TvInputError, TvSolverError

import tvtree.apptk as apptk

# import application extensions
import tvtree.app.extensions

import logging
import sys

DEFAULT_WORKING_DIRECTORY = Path(__file__).resolve().parents[2]

PROGRAM_NAME = "tvtree"
DESCRIPTION = "Exact total variation solvers on chains and trees and 2D restoration drivers built from them."

LOGGING_SECTION = "Logging"
LOGGING_LEVEL_KEY = "level"
LOGGING_LEVEL_DEFAULT = "INFO"
LOGGING_FORMAT_KEY = "format"
LOGGING_FORMAT_DEFAULT = "%(asctime)s %(levelname)s %(name)s: %(message)s"

rootLogger = logging.getLogger("tvtree")

class TvTreeApplication(apptk.Application):
    """ The tvtree application: global options, logging setup and exit codes of failed runs. """

    def __init__(self, workingDirectory: Path):
        super().__init__(manifest, workingDirectory, PROGRAM_NAME, DESCRIPTION)

    def _configureParser(self, parser: ArgumentParser):
        parser.add_argument("--config", dest = "run_config", help = "JSON run file with subcommand parameters, flags win on conflict")
        parser.add_argument("--threads", type = int, help = "row solver threads, 0 for all cores; TVTREE_THREADS wins")
        parser.add_argument("--seed", dest = "global_seed", type = int, help = "seed of all random generation")

        verbosity = parser.add_mutually_exclusive_group()
        verbosity.add_argument("-v", "--verbose", action = "store_true", help = "log at DEBUG level")
        verbosity.add_argument("-q", "--quiet", action = "store_true", help = "log warnings and errors only")

    def _loggingSettings(self):
        """ Level and format from the `[Logging]` section of the user config. """
        try:
            userConfig = self.Context.requestService(UserConfigService).getUserConfig()
        except apptk.ComponentAvailabilityException:
            userConfig = None

        if userConfig is None:
            return LOGGING_LEVEL_DEFAULT, LOGGING_FORMAT_DEFAULT
        return userConfig.getSet(LOGGING_SECTION, LOGGING_LEVEL_KEY, LOGGING_LEVEL_DEFAULT), \
            userConfig.getSet(LOGGING_SECTION, LOGGING_FORMAT_KEY, LOGGING_FORMAT_DEFAULT)

    def _onParsed(self, arguments: Namespace):
        level, logFormat = self._loggingSettings()

        if not logging.getLogger().handlers:
            logging.basicConfig(format = logFormat)

        if arguments.verbose:
            level = logging.DEBUG
        elif arguments.quiet:
            level = logging.WARNING

        try:
            rootLogger.setLevel(level.upper() if isinstance(level, str) else level)
        except ValueError:
            rootLogger.setLevel(LOGGING_LEVEL_DEFAULT)
            rootLogger.warning("Unknown logging level '%s', using '%s'.", level, LOGGING_LEVEL_DEFAULT)

    def _exitCode(self, exception: Exception) -> int:
        if isinstance(exception, TvInputError):
            return apptk.EXIT_USAGE
        if isinstance(exception, TvSolverError):
            return apptk.EXIT_FAILURE
        rootLogger.exception("Unexpected failure.")
        return apptk.EXIT_FAILURE

def parse_and_dispatch(argv: Optional[Sequence[str]] = None, workingDirectory: Path = None, output = None) -> int:
    """ Runs one subcommand and returns its exit code: 0 success, 2 usage or input error, 1 solver error. """
    return TvTreeApplication(workingDirectory or DEFAULT_WORKING_DIRECTORY).run(argv, output)

def main(workingDirectory: Path = None) -> int:
    return parse_and_dispatch(sys.argv[1:], workingDirectory)

if __name__ == "__main__":
    sys.exit(main())
