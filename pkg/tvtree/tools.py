"""
General tools: package wide constants, the exception hierarchy and number formatting.
"""

import math

class NumericConstants:
    """ Numeric constants shared by the solvers and the file codecs. """

    INFINITY = math.inf

    # output precision of every numeric value written by the application
    SIGNIFICANT_DIGITS = 12
    VALUE_FORMAT = "%.12g"

    # derivative messages of the virtual root edge
    ROOT_WEIGHT = 0.0

class TvTreeException(Exception):
    """ Base exception class of the tvtree package. """
    pass

class TvInputError(TvTreeException):
    """ Input data is malformed or violates a precondition of the requested solver. """
    pass

class TopologyError(TvInputError):
    """ The given parent array does not describe a single rooted tree. """
    pass

class ConvexityError(TvInputError):
    """ A derivative which is required to be non-decreasing is not. """
    pass

class FileFormatError(TvInputError):
    """ A file could not be parsed. The message names the offending line or byte offset. """
    pass

class TvSolverError(TvTreeException):
    """ A solver failed on a formally valid input. """
    pass

class UnboundedEnergyError(TvSolverError):
    """ The energy is unbounded below or has no lowest minimizer. """
    pass

class BreakpointBudgetError(TvSolverError):
    """ The non-convex message representation exceeded its breakpoint budget. """
    pass

def formatReal(value: float, digits: int = NumericConstants.SIGNIFICANT_DIGITS) -> str:
    """ Formats a real with the given number of significant digits. """
    return "{:.{}g}".format(float(value), digits)

def clip(value: float, lower: float, upper: float) -> float:
    """ Projection of a scalar onto `[lower, upper]`. Total on infinite arguments. """
    if value < lower:
        return lower
    if value > upper:
        return upper
    return value
