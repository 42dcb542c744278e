"""Exception hierarchy.

Each class carries the process exit code the command-line tool maps it to.
"""


class BregpcaError(Exception):
    exit_code = 1


class ConfigError(BregpcaError, ValueError):
    """Malformed link strings, bad option values, invalid parameters."""

    exit_code = 2


class DomainError(BregpcaError, ValueError):
    """Input outside the domain of a potential or its conjugate."""

    exit_code = 3


class FormatError(BregpcaError, ValueError):
    """Unreadable or inconsistent matrix files."""

    exit_code = 3


class BundleError(FormatError):
    """Model bundle whose manifest disagrees with its matrices."""


class NumericalError(BregpcaError, ArithmeticError):
    exit_code = 4


class RankError(NumericalError):
    pass


class SingularMetricError(NumericalError):
    pass


class FitError(NumericalError):
    """Loss became non-finite or blew up during optimization."""

    def __init__(self, message, epoch=None):
        super().__init__(message)
        self.epoch = epoch
