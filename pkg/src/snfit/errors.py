"""Exception hierarchy for snfit."""


class SnfitError(Exception):
    """Base class for all snfit errors."""


class QuadratureError(SnfitError):
    """Panel-doubling quadrature failed to converge.

    Carries the last two successive estimates so callers can inspect
    how far apart they were.
    """

    def __init__(self, message, last_two=None):
        super().__init__(message)
        self.last_two = last_two


class BracketingError(SnfitError):
    """Root bracket does not contain a sign change."""


class EvaluationError(SnfitError):
    """Objective evaluation produced a non-finite value.

    ``index`` is the offending observation index when known.
    """

    def __init__(self, message, index=None):
        super().__init__(message)
        self.index = index


class FitError(SnfitError):
    """Model fitting failed; ``best_partial`` holds the best result seen."""

    def __init__(self, message, best_partial=None):
        super().__init__(message)
        self.best_partial = best_partial


class SingularityError(SnfitError):
    """A matrix required to be invertible is numerically singular."""


class HypothesisDegeneracyError(SnfitError):
    """The restriction matrix makes the test's inner matrix singular."""


class SeriesError(SnfitError):
    """An infinite-series evaluation hit its term cap without converging."""


class ConfigError(SnfitError):
    """Invalid user-facing configuration (CLI or programmatic)."""


class DataError(SnfitError):
    """Input data unusable (missing columns, too few rows, ...)."""
