"""Interactive active learning for satellite-image change detection with
learned virtual-exemplar displays."""

from . import classifier, dataset, loop, metrics, optimizer
from .errors import (ContractViolationError, IntegrityError,
                     InvalidStateError, NumericalError, ParseError,
                     ProtocolError, VexalError)

__version__ = "0.1.0"

__all__ = [
    "classifier", "dataset", "loop", "metrics", "optimizer",
    "VexalError", "ParseError", "IntegrityError", "ContractViolationError",
    "NumericalError", "ProtocolError", "InvalidStateError",
    "__version__",
]
