"""Exception hierarchy shared by all qbeats modules.

Every error carries a short ``category`` string; the CLI maps categories to
exit codes and prints them in its machine-readable error line.
"""


class QBeatsError(Exception):
    category = "error"


class ConfigurationError(QBeatsError, ValueError):
    category = "config"

    def __init__(self, message, keys=()):
        super().__init__(message)
        self.keys = list(keys)


class DomainError(QBeatsError, ValueError):
    category = "domain"


class NoSolutionError(QBeatsError, ValueError):
    category = "no-solution"


class NumericError(QBeatsError, ArithmeticError):
    category = "numeric"


class ParseError(QBeatsError, ValueError):
    """Malformed binary or text input; ``offset`` is a byte offset or row number."""

    category = "parse"

    def __init__(self, message, offset=None):
        if offset is not None:
            message = f"{message} (at byte offset {offset})"
        super().__init__(message)
        self.offset = offset


class FitError(QBeatsError, ValueError):
    category = "fit"


class RankDeficiencyError(FitError):
    pass


class DegenerateDataError(FitError):
    pass


class ConditioningError(FitError):
    pass


class NoBeatError(FitError):
    """No spectral peak above the noise floor and no frequency hint given."""


class AlignmentError(QBeatsError, ValueError):
    category = "alignment"
