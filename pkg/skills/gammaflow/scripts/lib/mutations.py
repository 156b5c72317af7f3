"""Mutation systems: integer Gram matrices of χ, braid-group mutations and orbit search."""

from __future__ import annotations

import collections
import itertools
from dataclasses import dataclass, replace
from typing import Any, Sequence

from . import exact, log
from .charclasses import KClass, euler_gram
from .errors import DomainError

Gram = tuple[tuple[int, ...], ...]

MAX_SEARCH_DEPTH = 6


def _log(msg: str) -> None:
    log.source_log("Mutations", msg)


def _as_gram(rows: Sequence[Sequence[int]]) -> Gram:
    return tuple(tuple(int(v) for v in row) for row in rows)


@dataclass(frozen=True)
class MutationSystem:
    """An ordered basis of a lattice with its Euler Gram matrix G_ab = χ(E_a, E_b).

    ``classes`` is None for systems known only through their Gram matrix
    (e.g. a rounded Stokes matrix).
    """

    gram: Gram
    classes: tuple[KClass, ...] | None = None
    labels: tuple[str, ...] | None = None
    phase: Any = None

    def __post_init__(self) -> None:
        n = len(self.gram)
        if any(len(row) != n for row in self.gram):
            raise DomainError("Gram matrix must be square")
        if self.classes is not None and len(self.classes) != n:
            raise DomainError("one class per Gram row is required")

    @classmethod
    def from_classes(cls, classes: Sequence[KClass], phase: Any = None) -> MutationSystem:
        gram = euler_gram(classes).as_integers()
        labels = tuple(c.describe() for c in classes)
        return cls(_as_gram(gram), tuple(classes), labels, phase)

    @classmethod
    def from_gram(cls, rows: Sequence[Sequence[int]], phase: Any = None) -> MutationSystem:
        return cls(_as_gram(rows), None, None, phase)

    @property
    def rank(self) -> int:
        return len(self.gram)

    def det(self) -> int:
        return int(exact.det([list(r) for r in self.gram]))

    @property
    def unimodular(self) -> bool:
        return abs(self.det()) == 1

    @property
    def unitriangular(self) -> bool:
        n = self.rank
        return all(self.gram[i][i] == 1 for i in range(n)) and all(
            self.gram[i][j] == 0 for i in range(n) for j in range(i)
        )


def _congruence(gram: Gram, columns: list[list[int]]) -> Gram:
    """Bᵀ G B where column j of B holds the coordinates of the j-th new vector."""
    n = len(gram)
    out = []
    for a in range(n):
        row = []
        for b in range(n):
            total = 0
            for i, x in enumerate(columns[a]):
                if not x:
                    continue
                for j, y in enumerate(columns[b]):
                    if y:
                        total += x * gram[i][j] * y
            row.append(total)
        out.append(tuple(row))
    return tuple(out)


def _unit(n: int, i: int) -> list[int]:
    return [int(k == i) for k in range(n)]


def _right_columns(gram: Gram, i: int) -> list[list[int]]:
    n = len(gram)
    c = gram[i][i + 1]
    cols = [_unit(n, k) for k in range(n)]
    cols[i] = _unit(n, i + 1)
    cols[i + 1] = [u - c * v for u, v in zip(_unit(n, i), _unit(n, i + 1))]
    return cols


def _left_columns(gram: Gram, i: int) -> list[list[int]]:
    n = len(gram)
    c = gram[i][i + 1]
    cols = [_unit(n, k) for k in range(n)]
    cols[i] = [u - c * v for u, v in zip(_unit(n, i + 1), _unit(n, i))]
    cols[i + 1] = _unit(n, i)
    return cols


def _check_position(system: MutationSystem, i: int) -> None:
    if not 0 <= i < system.rank - 1:
        raise DomainError(f"mutation position {i} outside 0..{system.rank - 2}")


def _apply(system: MutationSystem, cols: list[list[int]]) -> MutationSystem:
    gram = _congruence(system.gram, cols)
    classes = labels = None
    if system.classes is not None:
        lattice = system.classes[0].lattice
        classes = tuple(
            sum((c * k for c, k in zip(col, system.classes) if c), lattice.zero()) for col in cols
        )
        labels = tuple(c.describe() for c in classes)
    return replace(system, gram=gram, classes=classes, labels=labels)


def mutate_right(system: MutationSystem, i: int) -> MutationSystem:
    """(…, E_i, E_{i+1}, …) ↦ (…, E_{i+1}, E_i − χ(E_i, E_{i+1}) E_{i+1}, …), 0-based i."""
    _check_position(system, i)
    return _apply(system, _right_columns(system.gram, i))


def mutate_left(system: MutationSystem, i: int) -> MutationSystem:
    """(…, E_i, E_{i+1}, …) ↦ (…, E_{i+1} − χ(E_i, E_{i+1}) E_i, E_i, …); inverse of mutate_right."""
    _check_position(system, i)
    return _apply(system, _left_columns(system.gram, i))


def apply_signs(gram: Gram, signs: Sequence[int]) -> Gram:
    return tuple(tuple(signs[i] * signs[j] * v for j, v in enumerate(row)) for i, row in enumerate(gram))


def sign_match(gram: Gram, target: Gram) -> tuple[int, ...] | None:
    """A sign pattern d with d_i d_j G_ij = H_ij, or None. The first sign is fixed to +1."""
    n = len(gram)
    for tail in itertools.product((1, -1), repeat=n - 1):
        signs = (1,) + tail
        if apply_signs(gram, signs) == target:
            return signs
    return None


@dataclass(frozen=True)
class OrbitMatch:
    found: bool
    word: tuple[tuple[str, int], ...]  # ("R", i) / ("L", i) applied left to right
    signs: tuple[int, ...] | None
    depth: int
    explored: int


def braid_orbit_search(
    gram: Sequence[Sequence[int]], target: Sequence[Sequence[int]], depth: int = MAX_SEARCH_DEPTH
) -> OrbitMatch:
    """Breadth-first search of the braid-group and sign orbit of ``gram`` for ``target``.

    Exhaustive up to ``depth`` mutations; the reported word is a shortest one.

    Args:
        gram: Integer Gram matrix to mutate.
        target: Gram matrix to reach, up to signs of the basis.
        depth: Longest mutation word tried.

    Returns:
        An ``OrbitMatch``; ``found`` is False with ``word`` empty when nothing
        within ``depth`` matches.

    Raises:
        DomainError: the two matrices have different rank.
    """
    start, goal = _as_gram(gram), _as_gram(target)
    if len(start) != len(goal):
        raise DomainError("Gram matrices of different rank")
    n = len(start)
    seen = {start: ()}
    queue = collections.deque([start])
    explored = 0
    while queue:
        g = queue.popleft()
        word = seen[g]
        explored += 1
        signs = sign_match(g, goal)
        if signs is not None:
            return OrbitMatch(True, word, signs, depth, explored)
        if len(word) >= depth:
            continue
        for i in range(n - 1):
            for tag, cols in (("R", _right_columns(g, i)), ("L", _left_columns(g, i))):
                nxt = _congruence(g, cols)
                if nxt not in seen:
                    seen[nxt] = word + ((tag, i),)
                    queue.append(nxt)
    _log(f"no match within depth {depth} ({explored} Gram matrices explored)")
    return OrbitMatch(False, (), None, depth, explored)
