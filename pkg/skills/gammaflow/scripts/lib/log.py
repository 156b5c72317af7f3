"""stderr logging for gammaflow; stdout carries only the report."""

import os
import sys

DEBUG = os.environ.get("GAMMAFLOW_DEBUG", "").lower() in ("1", "true", "yes")


def _emit(line: str) -> None:
    sys.stderr.write(line + "\n")
    sys.stderr.flush()


def debug(msg: str) -> None:
    """``[DEBUG] msg`` when GAMMAFLOW_DEBUG (or ``--debug``) is on."""
    if DEBUG:
        _emit(f"[DEBUG] {msg}")


def source_log(prefix: str, msg: str, *, tty_only: bool = True) -> None:
    """``[prefix] msg``, e.g. ``[ODE] halving step at |z|=0.03``.

    With ``tty_only`` the line is dropped unless stderr is a terminal or debugging
    is on, so batch runs and captured output stay clean.
    """
    if tty_only and not DEBUG and not sys.stderr.isatty():
        return
    _emit(f"[{prefix}] {msg}")
