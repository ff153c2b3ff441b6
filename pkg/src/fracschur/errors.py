"""Exception types shared across the library."""


class FracschurError(Exception):
    """Base class for failures raised by this library."""


class SparseFormatError(FracschurError, ValueError):
    """Malformed sparse input: bad triplets, files, or layout descriptions.

    ``detail`` optionally carries the offending entry, line number, or key.
    """

    def __init__(self, message, detail=None):
        super().__init__(message)
        self.detail = detail


class DimensionMismatchError(FracschurError, ValueError):
    """Operand shapes disagree."""


class SingularBlockError(FracschurError, ValueError):
    """A cell block that must be invertible is singular.

    ``cell`` is the cell index within its block row, ``state`` the contact
    state tag when known, ``where`` the matrix the block came from.
    """

    def __init__(self, message, cell=None, state=None, where=None):
        super().__init__(message)
        self.cell = cell
        self.state = state
        self.where = where


class ZeroPivotError(FracschurError, ValueError):
    """Zero (or singular block) pivot met during incomplete factorization."""

    def __init__(self, message, row=None, cell=None):
        super().__init__(message)
        self.row = row
        self.cell = cell


class SetupStageError(FracschurError, RuntimeError):
    """Preconditioner setup failed; ``stage`` names the stage at fault."""

    def __init__(self, stage, message):
        super().__init__(f"{stage}: {message}")
        self.stage = stage


class NonFiniteOperatorError(FracschurError, FloatingPointError):
    """An operator or preconditioner produced NaN or Inf entries.

    ``where`` names the producer (operator, preconditioner, or a stage tag).
    """

    def __init__(self, message, where=None):
        super().__init__(message)
        self.where = where
