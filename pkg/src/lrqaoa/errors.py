"""Exception hierarchy shared across the package."""


class LrQaoaError(Exception):
    """Base class for all package errors."""


class DimensionMismatchError(LrQaoaError):
    """Input arrays have inconsistent shapes or lengths."""


class ProblemTooLargeError(LrQaoaError):
    """Instance size exceeds a configured enumeration/simulation limit."""


class SkewFitError(LrQaoaError):
    """All skew-Gaussian fit starts diverged; caller should fall back."""


class ConfigError(LrQaoaError):
    """Invalid experiment configuration (CLI exit code 2)."""


class DataError(LrQaoaError):
    """Malformed or inconsistent input data file (CLI exit code 3)."""


class DataFormatError(DataError):
    """File cannot be parsed under the documented CSV layout."""


class DataAsymmetryError(DataError):
    """Matrix asymmetric beyond tolerance."""


class DataDimensionError(DataError):
    """Row/column counts inconsistent with the declared dimension."""
