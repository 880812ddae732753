"""Exception taxonomy shared across the toolkit.

The CLI maps DataError (and its SchemaError subclass) to exit code 2 and
NumericError subclasses to exit code 3; argparse usage errors exit with 1.
"""


class PsmkitError(Exception):
    """Base class for all toolkit errors."""


class DataError(PsmkitError):
    """Input data is unusable: missing file, bad cells, stale row ids."""


class SchemaError(DataError):
    """Declared schema or model specification does not match the data."""


class NumericError(PsmkitError):
    """A numerical procedure failed."""


class RankDeficiencyError(NumericError):
    """Normal equations are singular (collinear design)."""


class SeparationError(NumericError):
    """Likelihood is unbounded: a coefficient diverged toward infinity."""


class ConvergenceError(NumericError):
    """Iterative fit did not converge within the iteration budget."""
