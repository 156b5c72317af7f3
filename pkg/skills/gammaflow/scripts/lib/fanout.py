"""Thread fan-out for independent numerical evaluations.

Frames at several sample angles and the sub-checks of a report are
independent; both are spread over a ``ThreadPoolExecutor``. Each worker
thread gets its own mpmath context (see ``numerics.mp_context``), and results
always come back in submission order so reports are reproducible.
"""

from __future__ import annotations

from concurrent.futures import ThreadPoolExecutor, as_completed
from typing import Callable, Iterable, Sequence, TypeVar

from . import log

# mpmath is pure Python; more threads than this only add contention.
MAX_PARALLEL_WORKERS = 6

T = TypeVar("T")
R = TypeVar("R")


def _log(msg: str) -> None:
    log.source_log("Fanout", msg)


def map_ordered(fn: Callable[[T], R], items: Iterable[T], *, workers: int = 1) -> list[R]:
    """``[fn(x) for x in items]`` over up to ``workers`` threads; the first exception propagates."""
    items = list(items)
    workers = max(1, min(workers, len(items), MAX_PARALLEL_WORKERS))
    if workers == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=workers) as executor:
        futures = [executor.submit(fn, x) for x in items]
        return [f.result() for f in futures]


def run_labelled(
    submissions: Sequence[tuple[str, Callable[[], R]]],
    *,
    workers: int = 1,
) -> list[tuple[str, R | None, Exception | None]]:
    """Run labelled zero-arg callables; failures are logged and returned, never raised."""

    def _run_one(label: str, fn: Callable[[], R]) -> tuple[str, R | None, Exception | None]:
        try:
            return label, fn(), None
        except Exception as exc:  # reported per label
            return label, None, exc

    workers = max(1, min(workers, len(submissions), MAX_PARALLEL_WORKERS))
    if workers == 1:
        outcomes = [_run_one(label, fn) for label, fn in submissions]
    else:
        with ThreadPoolExecutor(max_workers=workers) as executor:
            futures = {executor.submit(_run_one, label, fn): k for k, (label, fn) in enumerate(submissions)}
            slots: list[tuple[str, R | None, Exception | None] | None] = [None] * len(submissions)
            for future in as_completed(futures):
                slots[futures[future]] = future.result()
        outcomes = [s for s in slots if s is not None]
    for label, _, exc in outcomes:
        if exc is not None:
            _log(f"{label}: {type(exc).__name__}: {exc}")
    return outcomes
