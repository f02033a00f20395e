"""Exception hierarchy. Each family maps onto one CLI exit code."""
from typing import List, Sequence

EXIT_OK = 0
EXIT_UNEXPECTED = 1
EXIT_VALIDATION = 2
EXIT_ESTIMATION = 3
EXIT_USAGE = 64


class DidLdvError(Exception):
    """Base class for all toolkit errors."""
    exit_code: int = EXIT_UNEXPECTED


# ============================================================================
# Data errors
# ============================================================================

class DataError(DidLdvError):
    """Input could not be turned into a usable PanelDataset."""
    exit_code = EXIT_VALIDATION


class DataParseError(DataError):
    """Malformed input row."""

    def __init__(self, message: str, line: int | None = None):
        self.line = line
        if line is not None:
            message = f"line {line}: {message}"
        super().__init__(message)


class DataValidationError(DataError):
    """Parsed data violates PanelDataset invariants."""

    def __init__(self, violations: Sequence[str]):
        self.violations: List[str] = list(violations)
        super().__init__("; ".join(self.violations) or "invalid dataset")


# ============================================================================
# Estimation errors
# ============================================================================

class EstimationError(DidLdvError):
    """An estimator cannot be computed on the given data."""
    exit_code = EXIT_ESTIMATION


class EmptyGroupError(EstimationError):
    """Treated or control group has no units."""


class SingularDesignError(EstimationError):
    """Least squares design is rank deficient."""

    def __init__(self, columns: Sequence[str]):
        self.columns: List[str] = list(columns)
        super().__init__(f"singular design: collinear columns {', '.join(self.columns)}")


class OverlapError(EstimationError):
    """Treated units sit at levels (or strata) with no control units."""

    def __init__(self, message: str, levels: Sequence = ()):
        self.levels = list(levels)
        super().__init__(message)


class PositivityError(OverlapError):
    """Estimated propensity equals one at a level that matters for weighting."""


class ConvergenceError(EstimationError):
    """Iterative fit did not converge."""


# ============================================================================
# Inference errors
# ============================================================================

class InferenceError(DidLdvError):
    """Resampling-based inference failed."""
    exit_code = EXIT_ESTIMATION


class UnstableResamplingError(InferenceError):
    """Too many bootstrap replicates could not be computed."""
