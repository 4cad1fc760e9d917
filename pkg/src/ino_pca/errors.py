"""Exception hierarchy.

Configuration problems and numerical failures are kept apart so the CLI can
map them onto distinct exit codes (2 and 3).
"""

from __future__ import annotations


class InoPcaError(Exception):
    """Base class for all package errors."""


class ConfigError(InoPcaError, ValueError):
    """Invalid parameters, malformed spec strings or config files."""


class ParseError(ConfigError):
    """A data file could not be parsed; carries the offending location."""

    def __init__(self, message: str, row: int | None = None, column: int | None = None):
        loc = []
        if row is not None:
            loc.append(f"row {row}")
        if column is not None:
            loc.append(f"column {column}")
        if loc:
            message = f"{message} ({', '.join(loc)})"
        super().__init__(message)
        self.row = row
        self.column = column


class DomainError(InoPcaError, ValueError):
    """A function was evaluated outside its mathematical domain."""


class NumericalError(InoPcaError, ArithmeticError):
    """Base class for failures detected while iterating or integrating."""


class DegeneracyError(NumericalError):
    """An iterate collapsed (zero norm, lambda below the floor, ...)."""

    def __init__(self, message: str, step: int | None = None):
        if step is not None:
            message = f"{message} at step {step}"
        super().__init__(message)
        self.step = step


class LambdaBandError(NumericalError):
    """The norm parameter left its admissible band during a simulation."""


class IntegrationBlowupError(NumericalError):
    """The ODE trajectory left the admissible region."""


class SolverInstabilityError(NumericalError):
    """The Fokker-Planck solver lost mass or positivity."""


class TrialFailure(NumericalError):
    """A Monte Carlo trial failed; carries the seed needed to replay it."""

    def __init__(self, message: str, seed: int, trial_index: int):
        super().__init__(f"{message} [replay with seed={seed}, trial={trial_index}]")
        self.seed = seed
        self.trial_index = trial_index
