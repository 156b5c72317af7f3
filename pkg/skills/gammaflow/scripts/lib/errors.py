"""Exception hierarchy for gammaflow."""

from __future__ import annotations

from typing import Any


class GammaflowError(Exception):
    """Base class for every failure raised by the library."""


class DomainError(GammaflowError, ValueError):
    """Input outside the domain of an operation."""


class UnsupportedError(GammaflowError):
    """Guarded case the library refuses to handle."""


class IntegrationError(GammaflowError):
    """ODE continuation could not keep the requested tolerance."""

    def __init__(self, message: str, last_point: Any = None) -> None:
        super().__init__(message)
        self.last_point = last_point


class EigenError(GammaflowError):
    """Eigensolver did not converge."""

    def __init__(self, message: str, trace: list[str] | None = None) -> None:
        super().__init__(message)
        self.trace = list(trace or [])


class TruncationError(GammaflowError):
    """A series did not reach its tail bound within the term cap."""

    def __init__(self, message: str, diagnostics: dict[str, Any] | None = None) -> None:
        super().__init__(message)
        self.diagnostics = dict(diagnostics or {})


class ConditioningError(GammaflowError):
    """A linear solve was refused because the matrix is too ill-conditioned."""

    def __init__(self, message: str, cond: Any = None, advice: str = "") -> None:
        super().__init__(f"{message} ({advice})" if advice else message)
        self.cond = cond
        self.advice = advice


class PrecisionError(GammaflowError):
    """The working precision cannot support the requested regime."""

    def __init__(self, message: str, required_digits: int) -> None:
        super().__init__(f"{message} (needs about {required_digits} digits)")
        self.required_digits = required_digits


class DataError(GammaflowError, ValueError):
    """User data failed to parse or validate."""

    def __init__(self, message: str, *, line: int | None = None, field: str | None = None) -> None:
        where = []
        if line is not None:
            where.append(f"line {line}")
        if field:
            where.append(f"field {field!r}")
        super().__init__(f"{message} [{', '.join(where)}]" if where else message)
        self.line = line
        self.field = field
