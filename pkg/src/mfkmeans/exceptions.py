"""Exception types. CLI exit codes are keyed on these classes."""


class DimensionError(ValueError):
    """Curves, grids or spectra with incompatible shapes."""


class InsufficientSampleError(ValueError):
    """Too few curves for the requested estimate."""


class IngestionError(ValueError):
    """Malformed input file."""

    def __init__(self, message, path=None, row=None):
        where = ""
        if path is not None:
            where += f"{path}"
        if row is not None:
            where += f" (row {row})"
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.row = row


class NumericalError(ArithmeticError):
    """Input that fails a numerical sanity check, e.g. an asymmetric covariance."""
