"""Exception types shared across the package."""


class VoikitError(Exception):
    """Base class for all package errors."""


class ValidationError(VoikitError):
    """Input violates a type invariant or schema; message carries diagnostics."""


class SolverError(VoikitError):
    """An optimizer could not produce a usable answer."""


class GridCapError(SolverError):
    """An enumeration would exceed its configured cap.

    ``required_cap`` reports how large the cap would have to be for the
    request to proceed.
    """

    def __init__(self, message: str, required_cap: int):
        super().__init__(message)
        self.required_cap = required_cap


class CommonSupportError(ValidationError):
    """A likelihood family does not share a common support.

    Carries the offending (input symbol, output symbol) pair.
    """

    def __init__(self, message: str, x_label: str, a_label: str):
        super().__init__(message)
        self.x_label = x_label
        self.a_label = a_label


class VerificationFailure(VoikitError):
    """A numeric verification suite found a counterexample."""

    def __init__(self, message: str, counterexample=None):
        super().__init__(message)
        self.counterexample = counterexample
