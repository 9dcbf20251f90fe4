"""Exception hierarchy shared by the solvers, simulators and the CLI."""


class PeelsurvError(Exception):
    """Base class for every error raised by this package."""

    exit_code = 1


class DomainError(PeelsurvError, ValueError):
    """An argument lies outside the domain of the operation."""

    exit_code = 2


class NuFormatError(DomainError):
    """A step-distribution file is malformed or violates its invariants."""


class NegativeMassError(DomainError):
    """Requested parameters would give a step law with negative mass."""


class AccuracyError(PeelsurvError, ArithmeticError):
    """Quadrature did not reach the requested accuracy within its budget.

    ``best_estimate`` and ``error_estimate`` carry what was reached.
    """

    exit_code = 3

    def __init__(self, msg, best_estimate=float("nan"), error_estimate=float("inf")):
        super().__init__(msg)
        self.best_estimate = best_estimate
        self.error_estimate = error_estimate


class BracketError(PeelsurvError, ValueError):
    """The function does not change sign over the supplied bracket."""

    exit_code = 3

    def __init__(self, msg, g_lo=float("nan"), g_hi=float("nan")):
        super().__init__(msg)
        self.g_lo = g_lo
        self.g_hi = g_hi


class EvaluationError(PeelsurvError, ArithmeticError):
    """A function evaluation returned NaN."""

    exit_code = 3


class ConvergenceError(PeelsurvError, RuntimeError):
    """An iterative construction did not converge."""

    exit_code = 3

    def __init__(self, msg, history=()):
        super().__init__(msg)
        self.history = list(history)


class HarmonicInconsistencyError(ConvergenceError):
    """Doob-transform transition probabilities do not sum to one."""


class BudgetError(PeelsurvError, RuntimeError):
    """A Monte Carlo path exceeded its time or step budget."""

    exit_code = 4

    def __init__(self, msg, partial=None):
        super().__init__(msg)
        self.partial = partial
