"""Report data model for gammaflow runs."""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, is_dataclass
from fractions import Fraction
from typing import Any

import mpmath

VERSION = "0.4.0"


def _number(value: Any) -> Any:
    """mpmath reals as full-precision decimal strings, complex values as [re, im]."""
    if hasattr(value, "_mpc_"):
        ctx = getattr(value, "context", mpmath.mp)
        return [_number(ctx.re(value)), _number(ctx.im(value))]
    if hasattr(value, "_mpf_"):
        ctx = getattr(value, "context", mpmath.mp)
        return ctx.nstr(value, ctx.dps)
    if isinstance(value, complex):
        return [repr(value.real), repr(value.imag)]
    if isinstance(value, Fraction):
        return str(value)
    return value


def _drop_none(value: Any) -> Any:
    """Recursively remove None values and serialize numbers, matrices and tuples."""
    if is_dataclass(value) and not isinstance(value, type):
        return _drop_none(asdict(value))
    if isinstance(value, dict):
        return {
            str(key): _drop_none(item)
            for key, item in value.items()
            if item is not None
        }
    if isinstance(value, (list, tuple)):
        return [_drop_none(item) for item in value]
    if hasattr(value, "rows") and hasattr(value, "cols") and hasattr(value, "tolist"):
        return [[_number(x) for x in row] for row in value.tolist()]
    return _number(value)


@dataclass(frozen=True)
class RunConfig:
    """Everything needed to reproduce a run."""

    command: str
    subcommand: str | None = None
    space: str | None = None
    data: str | None = None
    digits: int = 50
    max_digits: int = 400
    match_digits: int = 20
    workers: int = 1
    t: str | None = None
    z: str | None = None
    phase: str | None = None
    tolerance: str | None = None
    output: str | None = None
    csv: str | None = None
    config_source: str | None = None
    deterministic: bool = True
    version: str = VERSION


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    value: Any = None
    tolerance: Any = None
    detail: str | None = None


@dataclass(frozen=True)
class Table:
    """Plot data: one header row and numeric rows."""

    name: str
    columns: tuple[str, ...]
    rows: tuple[tuple[Any, ...], ...]

    def __post_init__(self) -> None:
        if any(len(r) != len(self.columns) for r in self.rows):
            raise ValueError(f"table {self.name!r}: every row needs {len(self.columns)} values")


@dataclass
class Report:
    config: RunConfig
    checks: list[CheckResult] = field(default_factory=list)
    values: dict[str, Any] = field(default_factory=dict)
    tables: list[Table] = field(default_factory=list)
    warnings: list[str] = field(default_factory=list)
    error: str | None = None

    @property
    def passed(self) -> bool:
        return self.error is None and all(c.passed for c in self.checks)

    def add(self, name: str, passed: bool, value: Any = None, tolerance: Any = None, detail: str | None = None) -> None:
        self.checks.append(CheckResult(name, bool(passed), value, tolerance, detail))


def to_dict(value: Any) -> Any:
    """Serialize dataclasses and nested containers."""
    return _drop_none(value)


def dumps(report: Report) -> str:
    payload = to_dict(report)
    payload["passed"] = report.passed
    return json.dumps(payload, indent=2, ensure_ascii=False)
