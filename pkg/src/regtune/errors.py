"""Exception types shared across the package."""


class RegtuneError(Exception):
    """Base class for all regtune errors."""


class InvalidConfig(RegtuneError):
    """A configuration value violates its contract."""


class ParseError(RegtuneError):
    """An input file is malformed or contains non-finite values."""


class DimensionMismatch(RegtuneError):
    """Array shapes are inconsistent (feature counts, vector lengths)."""


class TooFewRows(RegtuneError):
    """A dataset has too few rows for the requested split."""


class NotSPD(RegtuneError):
    """Cholesky failed: matrix is not symmetric positive definite."""


class NotSymmetric(RegtuneError):
    """Matrix is not symmetric within tolerance."""


class GeneralPositionViolated(RegtuneError):
    """Active design columns are rank deficient; the solution is not unique."""


class PathBudgetExceeded(RegtuneError):
    """Homotopy produced more events than the configured budget."""


class OutOfRange(RegtuneError):
    """A parameter value falls outside the covered interval."""


class DomainMismatch(RegtuneError):
    """Piecewise curves do not share a common domain interval."""


class NoConvergence(RegtuneError):
    """Iterative solver exceeded its iteration budget."""
