"""
Exceptions raised by pcsplit.

Every exception also derives from the closest builtin, so callers can catch
`ValueError` or `numpy.linalg.LinAlgError` without knowing about this module.
"""

from __future__ import annotations

from typing import TYPE_CHECKING, Any

import numpy as np

if TYPE_CHECKING:
    from pcsplit.problem import ValidationReport


class PcsplitError(Exception):
    """Base class for all pcsplit errors."""


class ProblemFormatError(PcsplitError, ValueError):
    """A problem or matrix file could not be parsed."""

    def __init__(self, message: str, *, field: str | None = None, line: int | None = None) -> None:
        self.detail = message
        self.field = field
        self.line = line
        where = []
        if field:
            where.append(f"field {field}")
        if line is not None:
            where.append(f"line {line}")
        super().__init__(f"{message} ({', '.join(where)})" if where else message)


class DimensionError(PcsplitError, ValueError):
    """Operands have inconsistent shapes."""


class ValidationError(PcsplitError, ValueError):
    """A problem failed validation for the selected predictor."""

    def __init__(self, report: ValidationReport) -> None:
        self.report = report
        super().__init__("; ".join(report.messages) or "problem validation failed")


class UnsupportedSubproblemError(PcsplitError, ValueError):
    """A block subproblem is outside the exactly solvable classes."""


class SplitError(PcsplitError, ValueError):
    """One part of a D/G split is not positive definite."""

    def __init__(self, part: str, min_eig: float) -> None:
        self.part = part
        self.min_eig = min_eig
        super().__init__(f"{part} not SPD (min_eig={min_eig:.3g})")


class SingularMatrixError(PcsplitError, np.linalg.LinAlgError):
    """A matrix that must be inverted is numerically singular."""

    def __init__(self, message: str, *, pivot: float) -> None:
        self.pivot = pivot
        super().__init__(f"{message} (smallest pivot {pivot:.3g})")


class RankDeficientError(PcsplitError, np.linalg.LinAlgError):
    """A matrix that must have full column rank does not."""


class CertificationError(PcsplitError, RuntimeError):
    """A correction plan failed its convergence certificate."""

    def __init__(self, message: str, certificate: Any = None) -> None:
        self.certificate = certificate
        super().__init__(message)


class OracleError(PcsplitError, RuntimeError):
    """No reference solution reached the oracle tolerance."""

    def __init__(self, message: str, achieved: float) -> None:
        self.achieved = achieved
        super().__init__(f"{message} (achieved residual {achieved:.3g})")


class MissingReferenceError(PcsplitError, ValueError):
    """Contraction monitoring was requested without a reference solution."""
