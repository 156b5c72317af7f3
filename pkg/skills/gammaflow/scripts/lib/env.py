"""Layered run configuration: environment, project file, global file."""

from __future__ import annotations

import os
from pathlib import Path
from typing import Any

from . import log

# GAMMAFLOW_CONFIG_DIR="" disables the global file, any other value relocates it.
_dir_override = os.environ.get("GAMMAFLOW_CONFIG_DIR")
if _dir_override is None:
    CONFIG_DIR: Path | None = Path.home() / ".config" / "gammaflow"
elif _dir_override:
    CONFIG_DIR = Path(_dir_override)
else:
    CONFIG_DIR = None
CONFIG_FILE: Path | None = CONFIG_DIR / ".env" if CONFIG_DIR else None

PROJECT_FILE = Path(".gammaflow") / "gammaflow.env"

DEFAULT_DIGITS = 50
DEFAULT_MAX_DIGITS = 400
DEFAULT_MATCH_DIGITS = 20
DEFAULT_WORKERS = 1

SETTINGS: tuple[tuple[str, Any, type], ...] = (
    ("GAMMAFLOW_DIGITS", DEFAULT_DIGITS, int),
    ("GAMMAFLOW_MAX_DIGITS", DEFAULT_MAX_DIGITS, int),
    ("GAMMAFLOW_MATCH_DIGITS", DEFAULT_MATCH_DIGITS, int),
    ("GAMMAFLOW_WORKERS", DEFAULT_WORKERS, int),
    ("GAMMAFLOW_OUTPUT_DIR", None, str),
)


def _unquote(value: str) -> str:
    if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
        return value[1:-1]
    return value


def load_env_file(path: Path | None) -> dict[str, str]:
    """``KEY=VALUE`` pairs from a dotenv-style file; comments, blanks and empty values are skipped."""
    if path is None or not path.is_file():
        return {}
    pairs: dict[str, str] = {}
    for raw in path.read_text().splitlines():
        text = raw.strip()
        if text.startswith("#") or "=" not in text:
            continue
        key, _, value = text.partition("=")
        key, value = key.strip(), _unquote(value.strip())
        if key and value:
            pairs[key] = value
    return pairs


def find_project_file(start: Path | None = None) -> Path | None:
    """Nearest ``.gammaflow/gammaflow.env`` at or above ``start``, not looking past the home directory."""
    here = (start or Path.cwd()).resolve()
    home = Path.home().resolve()
    for folder in (here, *here.parents):
        candidate = folder / PROJECT_FILE
        if candidate.is_file():
            return candidate
        if folder == home:
            return None
    return None


def _coerce(key: str, raw: str | None, default: Any, kind: type) -> Any:
    if not raw:
        return default
    try:
        return kind(raw)
    except (TypeError, ValueError):
        log.source_log("gammaflow", f"WARNING: ignoring malformed {key}={raw!r}", tty_only=False)
        return default


def get_config() -> dict[str, Any]:
    """Merged settings; the process environment beats the project file, which beats the global file.

    ``_CONFIG_SOURCE`` names the file that contributed, for the report.
    """
    project = find_project_file()
    layered = {**load_env_file(CONFIG_FILE), **load_env_file(project)}
    config: dict[str, Any] = {
        key: _coerce(key, os.environ.get(key) or layered.get(key), default, kind)
        for key, default, kind in SETTINGS
    }
    if project is not None:
        config["_CONFIG_SOURCE"] = f"project:{project}"
    elif CONFIG_FILE is not None and CONFIG_FILE.is_file():
        config["_CONFIG_SOURCE"] = f"global:{CONFIG_FILE}"
    else:
        config["_CONFIG_SOURCE"] = "env_only"
    return config
