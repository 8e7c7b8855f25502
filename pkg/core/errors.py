from typing import Optional


class IsingConcError(ValueError):
    """
    Base class for input and capacity errors raised by the library.

    Every error knows which module raised it so the command line can
    prefix its message with the module name.
    """

    module = "core"

    def __init__(self, message: str, module: Optional[str] = None):
        super().__init__(message)
        if module is not None:
            self.module = module


class CapacityError(IsingConcError):
    """An enumeration, tensor or exhaustive-check size cap was exceeded."""


class ModelFormatError(IsingConcError):
    """A model file does not follow the model grammar."""

    module = "model"

    def __init__(self, message: str, line: Optional[int] = None, module: Optional[str] = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message, module)


class PolynomialFormatError(ModelFormatError):
    """A polynomial or tensor file does not follow its grammar."""

    module = "boolfn"


class DimensionError(IsingConcError):
    pass


class InvalidPartitionError(IsingConcError):
    module = "norms"


class IndefiniteMatrixError(IsingConcError):
    module = "bounds"


class DobrushinViolation(IsingConcError):
    """Sampling was requested for a model outside Dobrushin's condition."""

    module = "mc"


class GridMismatchError(IsingConcError):
    module = "mc"
