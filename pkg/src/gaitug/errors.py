"""Exception taxonomy for the gaitug package.

Every failure surfaced to callers derives from GaitugError and carries a
``kind`` used by the service/CLI layers to map onto exit codes: ``usage``
and ``config`` are caller mistakes, ``data`` is malformed input content,
``analysis`` is a well-formed input the pipeline cannot process.
"""

from __future__ import annotations


class GaitugError(Exception):
    kind = "analysis"


class ConfigError(GaitugError):
    """Invalid configuration value or infeasible parameter combination."""

    kind = "config"


class UsageError(GaitugError):
    """Caller invoked an operation incorrectly (bad arguments, missing column)."""

    kind = "usage"


class ParseError(GaitugError):
    """Malformed file content. Carries the offending line number when known."""

    kind = "data"

    def __init__(self, message: str, *, path: str | None = None, line: int | None = None):
        self.path = path
        self.line = line
        prefix = ""
        if path is not None:
            prefix += str(path)
        if line is not None:
            prefix += f":{line}"
        super().__init__(f"{prefix}: {message}" if prefix else message)


class StructuralError(ParseError):
    """File parses token-by-token but violates structural rules (column count,
    frame contiguity, duplicate sides)."""


class DataError(GaitugError):
    """Non-finite or out-of-range values in otherwise well-formed input."""

    kind = "data"


class DomainError(GaitugError):
    """Operation precondition violated (signal too short, sigma <= 0)."""


class DegenerateSignalError(DomainError):
    """Signal has no usable variation (constant input where peaks are sought)."""


class DirectionError(DomainError):
    """Anterior axis cannot be established (no net horizontal displacement)."""


class SegmentationError(GaitugError):
    """A required TUG event could not be located. ``event`` names which."""

    def __init__(self, message: str, *, event: str | None = None):
        self.event = event
        super().__init__(message)


class StepDetectionError(GaitugError):
    """Step events missing or insufficient for gait metrics."""


class InsufficientStepsError(StepDetectionError):
    """Fewer than two retained step events in a walking phase."""


class DesignError(GaitugError):
    """Model design matrix is rank deficient or otherwise unusable."""


class MatchingError(GaitugError):
    """Join across tables/recordings produced no usable rows."""
