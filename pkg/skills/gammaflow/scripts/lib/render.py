"""Plain-text and CSV rendering of gammaflow reports."""

from __future__ import annotations

import csv
import pathlib
from typing import Any

from . import schema

# Significant digits shown for values in the text summary; JSON and CSV keep everything.
DISPLAY_DIGITS = 12


def _short(value: Any) -> str:
    if hasattr(value, "_mpf_") or hasattr(value, "_mpc_"):
        return value.context.nstr(value, DISPLAY_DIGITS)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_short(v) for v in value) + "]"
    if hasattr(value, "tolist") and hasattr(value, "rows"):
        return _short(value.tolist())
    return str(value)


def render_text(report: schema.Report) -> str:
    """One ``PASS name`` / ``FAIL name`` line per check, then key values and warnings."""
    cfg = report.config
    title = " ".join(x for x in (cfg.command, cfg.subcommand) if x)
    target = cfg.space or cfg.data or ""
    lines = [f"gammaflow {cfg.version} · {title} {target}".rstrip(), f"digits={cfg.digits}", ""]
    for check in report.checks:
        status = "PASS" if check.passed else "FAIL"
        extra = []
        if check.value is not None:
            extra.append(f"value={_short(check.value)}")
        if check.tolerance is not None:
            extra.append(f"tol={_short(check.tolerance)}")
        if check.detail:
            extra.append(check.detail)
        lines.append(f"{status} {check.name}" + (f"  ({'; '.join(extra)})" if extra else ""))
    if report.values:
        lines.append("")
        for key, value in report.values.items():
            lines.append(f"{key}: {_short(value)}")
    for table in report.tables:
        lines.append(f"table {table.name}: {len(table.rows)} rows ({', '.join(table.columns)})")
    for warning in report.warnings:
        lines.append(f"warning: {warning}")
    if report.error:
        lines.append(f"error: {report.error}")
    return "\n".join(lines)


def write_csv(table: schema.Table, path: str | pathlib.Path) -> pathlib.Path:
    """Header row plus full-precision decimal strings."""
    out = pathlib.Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    with out.open("w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(table.columns)
        for row in table.rows:
            writer.writerow([_cell(v) for v in row])
    return out


def _cell(value: Any) -> str:
    number = schema.to_dict(value)
    if isinstance(number, list):
        return " ".join(str(x) for x in number)
    return str(number)


def write_json(report: schema.Report, path: str | pathlib.Path) -> pathlib.Path:
    out = pathlib.Path(path)
    out.parent.mkdir(parents=True, exist_ok=True)
    out.write_text(schema.dumps(report) + "\n", encoding="utf-8")
    return out
