"""
Exceptions raised across the package.

Two branches: everything the caller got wrong (ValidationError) and everything
the numerics could not do (NumericalError). The CLI maps them to exit codes 1 and 2.
"""
from __future__ import annotations

from typing import TYPE_CHECKING

if TYPE_CHECKING:
    from metric_graph import Violation


class GroundStateError(Exception):
    pass


class ValidationError(GroundStateError, ValueError):
    pass


class NumericalError(GroundStateError, ArithmeticError):
    pass


class GraphValidationError(ValidationError):

    def __init__(self, violations: list[Violation]) -> None:
        self.violations = list(violations)
        lines = "\n".join(f"  - {v}" for v in self.violations)
        super().__init__(f"invalid metric graph ({len(self.violations)} violation(s)):\n{lines}")


class GraphFormatError(ValidationError):
    pass


class ParameterError(ValidationError):
    pass


class PreconditionError(ValidationError):
    pass


class TopologyError(PreconditionError):
    pass


class AmbiguousLevelError(NumericalError):
    pass


class ThresholdNotFoundError(NumericalError):
    pass


class BracketError(NumericalError):
    pass


class ZeroFunctionError(NumericalError):
    pass
