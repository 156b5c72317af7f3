"""User-supplied Frobenius and quantum data in a single JSON document.

Schema (indices are 0-based basis positions; labels may be used instead)::

    {
      "name": "P1",
      "dim_complex": 1,
      "basis": [{"label": "1", "degree": 0}, {"label": "p", "degree": 2}],
      "unit": 0, "top": 1,
      "cup": [[i, j, [c_0, ..., c_{N-1}]], ...],
      "pairing": [[i, j, value], ...],
      "quantum": [[i, j, [poly_0, ..., poly_{N-1}]], ...],
      "c1": [c_0, ..., c_{N-1}],
      "ch_tangent": [[k, [c_0, ..., c_{N-1}]], ...],
      "q": [1],
      "hypersurface": {"n": 3, "d": 2}
    }

Numbers are integers or rational strings ("1/2"). A quantum polynomial is a
number (constant) or a list of coefficients of q^0, q^1, ...; pairs missing
from "quantum" fall back to the cup product. "quantum", "ch_tangent", "q"
and "hypersurface" are optional.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from fractions import Fraction
from pathlib import Path
from typing import Any

from . import exact, log
from .charclasses import TangentData
from .cohomology import GradedFrobeniusAlgebra
from .errors import DataError, DomainError
from .quantum import QuantumAlgebra

REQUIRED_FIELDS = ("name", "dim_complex", "basis", "unit", "top", "cup", "pairing", "c1")


def _log(msg: str) -> None:
    log.source_log("Data", msg)


def _line_of(text: str, field: str) -> int | None:
    m = re.search(rf'"{re.escape(field)}"\s*:', text)
    return text.count("\n", 0, m.start()) + 1 if m else None


@dataclass(frozen=True, eq=False)
class UserData:
    name: str
    algebra: GradedFrobeniusAlgebra
    quantum: QuantumAlgebra | None
    tangent: TangentData | None
    q: tuple[Fraction, ...]
    hypersurface: tuple[int, int] | None
    violations: tuple[str, ...]
    source: str

    @property
    def valid(self) -> bool:
        return not self.violations


class _Reader:
    """Field accessors that turn malformed input into DataError with a line number."""

    def __init__(self, text: str, doc: dict) -> None:
        self.text = text
        self.doc = doc

    def fail(self, field: str, message: str) -> DataError:
        return DataError(message, line=_line_of(self.text, field), field=field)

    def number(self, field: str, value: Any) -> Fraction:
        try:
            return exact.to_fraction(value)
        except (TypeError, ValueError, ZeroDivisionError):
            raise self.fail(field, f"not a rational number: {value!r}") from None

    def integer(self, field: str, value: Any) -> int:
        if isinstance(value, bool) or not isinstance(value, int):
            raise self.fail(field, f"expected an integer, got {value!r}")
        return value

    def index(self, field: str, value: Any, labels: tuple[str, ...]) -> int:
        if isinstance(value, str):
            if value not in labels:
                raise self.fail(field, f"unknown basis label {value!r}")
            return labels.index(value)
        idx = self.integer(field, value)
        if not 0 <= idx < len(labels):
            raise self.fail(field, f"basis index {idx} out of range 0..{len(labels) - 1}")
        return idx

    def vector(self, field: str, value: Any, n: int) -> list[Fraction]:
        if not isinstance(value, list) or len(value) != n:
            raise self.fail(field, f"expected a list of {n} coefficients")
        return [self.number(field, v) for v in value]

    def entries(self, field: str, width: int) -> list[list]:
        value = self.doc.get(field, [])
        if not isinstance(value, list) or any(not isinstance(e, list) or len(e) != width for e in value):
            raise self.fail(field, f"expected a list of [{', '.join(['…'] * width)}] entries")
        return value


def _parse(text: str, source: str) -> UserData:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DataError(f"invalid JSON: {exc.msg}", line=exc.lineno) from None
    if not isinstance(doc, dict):
        raise DataError("top level must be an object", line=1)
    r = _Reader(text, doc)
    for key in REQUIRED_FIELDS:
        if key not in doc:
            raise DataError(f"missing required field {key!r}", field=key)

    name = str(doc["name"])
    dim_complex = r.integer("dim_complex", doc["dim_complex"])
    basis = doc["basis"]
    if not isinstance(basis, list) or not basis:
        raise r.fail("basis", "basis must be a non-empty list")
    labels, degrees = [], []
    for entry in basis:
        if not isinstance(entry, dict) or "label" not in entry or "degree" not in entry:
            raise r.fail("basis", "each basis entry needs 'label' and 'degree'")
        labels.append(str(entry["label"]))
        degrees.append(r.integer("degree", entry["degree"]))
    labels_t = tuple(labels)
    if len(set(labels_t)) != len(labels_t):
        raise r.fail("basis", "basis labels must be distinct")
    n = len(labels_t)

    cup = []
    for i, j, coeffs in r.entries("cup", 3):
        a, b = r.index("cup", i, labels_t), r.index("cup", j, labels_t)
        for k, c in enumerate(r.vector("cup", coeffs, n)):
            if c:
                cup.append((a, b, k, c))
    pairing = [[Fraction(0)] * n for _ in range(n)]
    for i, j, v in r.entries("pairing", 3):
        pairing[r.index("pairing", i, labels_t)][r.index("pairing", j, labels_t)] = r.number("pairing", v)

    try:
        algebra = GradedFrobeniusAlgebra(
            name=name,
            labels=labels_t,
            degrees=tuple(degrees),
            dim_complex=dim_complex,
            cup=tuple(cup),
            pairing=tuple(tuple(row) for row in pairing),
            unit_index=r.index("unit", doc["unit"], labels_t),
            top_index=r.index("top", doc["top"], labels_t),
        )
    except DomainError as exc:
        raise r.fail("basis", str(exc)) from None

    violations = [f"{c.name}: {c.witness}" for c in algebra.validate().failures()]
    c1 = algebra.element(r.vector("c1", doc["c1"], n))

    tangent = None
    if "ch_tangent" in doc:
        parts = [algebra.zero() for _ in range(dim_complex + 1)]
        for k, coeffs in r.entries("ch_tangent", 2):
            k = r.integer("ch_tangent", k)
            if not 0 <= k <= dim_complex:
                raise r.fail("ch_tangent", f"ch_{k} outside 0..{dim_complex}")
            parts[k] = algebra.element(r.vector("ch_tangent", coeffs, n))
        try:
            tangent = TangentData(algebra, tuple(parts))
        except DomainError as exc:
            raise r.fail("ch_tangent", str(exc)) from None
        if tangent.c1.coeffs != c1.coeffs:
            violations.append("c1: does not match ch_1 of the tangent data")

    q = tuple(r.number("q", v) for v in doc.get("q", [1]))
    if len(q) != 1:
        raise r.fail("q", "user quantum data has a single parameter")

    quantum = None
    if "quantum" in doc:
        given: dict[tuple[int, int], list[tuple[int, tuple[int, ...], Fraction]]] = {}
        for i, j, polys in r.entries("quantum", 3):
            a, b = r.index("quantum", i, labels_t), r.index("quantum", j, labels_t)
            if not isinstance(polys, list) or len(polys) != n:
                raise r.fail("quantum", f"expected {n} polynomials for ({labels_t[a]}, {labels_t[b]})")
            terms = []
            for k, poly in enumerate(polys):
                coeffs = poly if isinstance(poly, list) else [poly]
                for power, c in enumerate(coeffs):
                    c = r.number("quantum", c)
                    if c:
                        terms.append((k, (power,), c))
            given[(a, b)] = terms
        all_terms = []
        for a in range(n):
            for b in range(n):
                if (a, b) in given:
                    all_terms.extend((a, b, k, m, c) for k, m, c in given[(a, b)])
                else:
                    all_terms.extend((a, b, k, (0,), c) for k, c in algebra.products(a, b))
        try:
            quantum = QuantumAlgebra(name, algebra, c1, 1, tuple(all_terms))
        except DomainError as exc:
            raise r.fail("quantum", str(exc)) from None
        violations += [f"quantum {c.name}: {c.witness}" for c in quantum.validate_at(q).failures()]

    hyper = None
    if "hypersurface" in doc:
        h = doc["hypersurface"]
        if not isinstance(h, dict) or "n" not in h or "d" not in h:
            raise r.fail("hypersurface", "expected {\"n\": …, \"d\": …}")
        hyper = (r.integer("hypersurface", h["n"]), r.integer("hypersurface", h["d"]))
        if not 1 <= hyper[1] <= hyper[0]:
            raise r.fail("hypersurface", f"degree {hyper[1]} is not Fano in P^{hyper[0]}")

    for v in violations:
        _log(f"{source}: {v}")
    return UserData(name, algebra, quantum, tangent, q, hyper, tuple(violations), source)


def load_user_data(path: str | Path, *, strict: bool = True) -> UserData:
    """Parse and validate a data file; with ``strict`` any axiom violation raises DataError."""
    p = Path(path)
    try:
        text = p.read_text(encoding="utf-8")
    except OSError as exc:
        raise DataError(f"cannot read {p}: {exc.strerror}") from None
    data = _parse(text, str(p))
    if strict and data.violations:
        first = data.violations[0]
        field = "quantum" if first.startswith("quantum") else "cup"
        raise DataError(f"{p.name}: {'; '.join(data.violations)}", line=_line_of(text, field), field=field)
    return data


def same_structure(a: QuantumAlgebra, b: QuantumAlgebra) -> bool:
    """Identical cup tables, pairings, c₁ and quantum structure constants."""
    if a.base.labels != b.base.labels or a.base.degrees != b.base.degrees:
        return False
    if a.base.pairing != b.base.pairing or a.c1.coeffs != b.c1.coeffs or a.n_params != b.n_params:
        return False
    cups = all(
        sorted(a.base.products(i, j)) == sorted(b.base.products(i, j))
        for i in range(a.dim) for j in range(a.dim)
    )
    return cups and {k: sorted(v) for k, v in a._table.items()} == {k: sorted(v) for k, v in b._table.items()}
