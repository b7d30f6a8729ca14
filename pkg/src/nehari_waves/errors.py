"""Exception types shared across the package."""


class DegenerateProfileError(ValueError):
    """Raised when an operation is undefined because the averaged profile
    (or a gradient built from it) vanishes, e.g. projection of a profile
    whose window average is numerically zero."""


class CsvFormatError(ValueError):
    """Malformed profile CSV. Carries the 1-based line number of the
    offending row in ``line``."""

    def __init__(self, message, line=None):
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)
        self.line = line


class BlowupError(RuntimeError):
    """Lattice integration produced positions or velocities beyond the
    blow-up guard (1e12)."""
