"""Exception hierarchy shared across the package."""


class NavGraphError(Exception):
    """Base class for all errors raised by navgraph."""


class UsageError(NavGraphError, ValueError):
    """Invalid arguments: bad parameter ranges, dimension mismatches."""


class DimensionMismatchError(UsageError):
    pass


class PointDataError(NavGraphError, ValueError):
    """Malformed point data (non-finite values, ragged rows, empty input)."""


class DuplicatePointsError(PointDataError):
    pass


class ZeroClosestPairError(PointDataError):
    """Spread requested on a set whose closest pair has distance zero."""


class UnsupportedMetricError(UsageError):
    pass


class IndexFormatError(NavGraphError):
    """An index file could not be decoded (bad magic, version, truncation, CRC)."""


class GuaranteeViolation(NavGraphError, AssertionError):
    """A proven approximation bound was violated by a query answer."""
