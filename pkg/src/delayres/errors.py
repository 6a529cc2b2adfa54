"""Exception types shared across the package.

The CLI maps these onto exit codes: configuration/contract/domain problems
exit with 2, numerical failures with 3.
"""


class DelayResError(Exception):
    pass


class ContractError(DelayResError, ValueError):
    """A caller broke an operation's precondition (shape, range, emptiness)."""


class ConfigurationError(DelayResError, ValueError):
    """Inconsistent parameters, e.g. a delay that is not a multiple of dt."""


class DomainError(DelayResError, ValueError):
    """The request is well-formed but mathematically meaningless here."""


class NumericalError(DelayResError, ArithmeticError):
    pass


class DivergenceError(NumericalError):
    def __init__(self, message, step=None, time=None):
        super().__init__(message)
        self.step = step
        self.time = time


class ConvergenceError(NumericalError):
    pass


class RankDeficiencyError(NumericalError):
    pass


class InstabilityError(NumericalError):
    pass


class DomainWarning(UserWarning):
    pass
