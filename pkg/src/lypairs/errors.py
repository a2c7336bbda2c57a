"""Exception hierarchy shared by all lypairs modules.

Validation-type errors (bad inputs, violated preconditions) map to CLI
exit code 2; numerical failures (fits, root finding) map to exit code 3.
"""


class LypairsError(Exception):
    """Base class for all package errors."""


class ValidationError(LypairsError):
    """Invalid argument, malformed input, or violated precondition."""


class InsufficientPrefix(ValidationError):
    """An operation needed more stored digits than the sequence carries."""


class NotInSubset(ValidationError):
    """A sequence violates the required match/flip pattern of a base sequence."""


class InvalidDigit(ValidationError):
    """A digit lies outside the alphabet {1, ..., m}."""


class InvalidRatio(ValidationError):
    """A contraction ratio lies outside (0, 1)."""


class OverlapError(ValidationError):
    """First-level images of the domain box intersect; no positive gap."""


class ParameterOutOfRange(ValidationError):
    """A map or system parameter lies outside its admissible range."""


class UndefinedRegion(ValidationError):
    """The map is not defined at the requested point (e.g. the horseshoe's middle strip)."""


class TooFewCheckpoints(ValidationError):
    """A verification profile has too few checkpoints to decide a verdict."""


class EmptyInput(ValidationError):
    """An operation that needs at least one data point received none."""


class DegenerateFit(LypairsError):
    """Too few usable ladder points remain after saturation guards."""


class ConvergenceError(LypairsError):
    """An iterative numerical routine failed to reach its tolerance."""
