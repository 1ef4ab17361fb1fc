"""Exception hierarchy.

Every error raised by the library derives from :class:`QMemoryError`. The
three intermediate classes map onto the CLI exit codes: configuration
problems, problems with the data or model handed in, and numerical
non-convergence.
"""


class QMemoryError(Exception):
    """Base class for all library errors."""


class ConfigError(QMemoryError, ValueError):
    """A run configuration is malformed or incomplete."""


class DataError(QMemoryError, ValueError):
    """Input data or model definitions violate a precondition."""


class NumericalError(QMemoryError, ArithmeticError):
    """A numerical routine failed to reach its tolerance."""


# -- process definitions ------------------------------------------------------

class BadProbability(DataError):
    pass


class NonStochastic(DataError):
    pass


class NonUnifilar(DataError):
    pass


class Reducible(DataError):
    pass


class UnknownSymbol(DataError):
    pass


class UnknownProcess(ConfigError):
    pass


class MissingParameter(ConfigError):
    pass


# -- word statistics -----------------------------------------------------------

class WordTooLong(DataError):
    pass


class AlphabetMismatch(DataError):
    pass


class InsufficientData(DataError):
    pass


class TooLittleData(DataError):
    pass


class DimensionTooLarge(DataError):
    """A dense table or matrix would exceed the supported size."""


# -- quantum memory / inference ------------------------------------------------

class LabelMismatch(DataError):
    pass


class BadWeights(DataError):
    pass


class NotSymmetric(DataError):
    pass


class TraceNotOne(DataError):
    pass


class NotPSD(DataError):
    pass


class LengthMismatch(DataError):
    pass


class EmptySupport(DataError):
    pass


# -- perturbations -------------------------------------------------------------

class NegativeProbability(DataError):
    pass


class NotZeroSum(DataError):
    pass


class SupportViolation(DataError):
    pass


class NoConvergence(NumericalError):
    pass
