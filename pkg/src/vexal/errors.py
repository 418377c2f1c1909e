"""Exception types shared across the package."""


class VexalError(Exception):
    """Base class for all package-specific errors."""


class ParseError(VexalError):
    """A data file could not be parsed. Carries the 1-based line number."""

    def __init__(self, message, line_number=None):
        if line_number is not None:
            message = f"line {line_number}: {message}"
        super().__init__(message)
        self.line_number = line_number


class IntegrityError(VexalError):
    """Structurally valid input violates an integrity rule (e.g. duplicate ids)."""


class ContractViolationError(VexalError):
    """A caller-supplied value breaks a documented precondition (e.g. a
    membership matrix whose rows do not sum to one)."""


class NumericalError(VexalError):
    """A numeric computation produced non-finite values. Carries a diagnostic
    and, when raised from the solver loop, the iteration index."""

    def __init__(self, message, iteration=None):
        if iteration is not None:
            message = f"iteration {iteration}: {message}"
        super().__init__(message)
        self.iteration = iteration


class ProtocolError(VexalError):
    """An oracle response violated the labeling protocol (wrong arity,
    unknown id, or a label outside {-1, +1})."""


class InvalidStateError(VexalError):
    """An operation was requested in a state that cannot serve it (e.g.
    fewer unlabeled samples than display slots)."""
