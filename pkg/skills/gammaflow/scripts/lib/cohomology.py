"""Graded commutative Frobenius algebras for even cohomology rings.

Structure constants and the pairing are stored exactly (Fraction). A CohClass
is either exact (Fraction coefficients, ``digits is None``) or numeric
(mpmath coefficients at ``digits``); mixing the two promotes to numeric.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from . import exact
from .errors import DomainError
from .numerics import PrecisionContext, mp_context, to_mp


@dataclass(frozen=True)
class AxiomCheck:
    name: str
    passed: bool
    witness: str | None = None


@dataclass(frozen=True)
class ValidationReport:
    algebra: str
    checks: tuple[AxiomCheck, ...]

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def failures(self) -> list[AxiomCheck]:
        return [c for c in self.checks if not c.passed]


@dataclass(frozen=True, eq=False)
class GradedFrobeniusAlgebra:
    """Even-degree cohomology ring H*(X) with its Poincaré pairing.

    ``cup`` is a sparse tensor: (i, j, k, c) means e_i ∪ e_j has coefficient c on e_k.
    ``degrees`` are real cohomological degrees (0, 2, ..., 2n).
    """

    name: str
    labels: tuple[str, ...]
    degrees: tuple[int, ...]
    dim_complex: int
    cup: tuple[tuple[int, int, int, Fraction], ...]
    pairing: tuple[tuple[Fraction, ...], ...]
    unit_index: int
    top_index: int
    _table: dict = field(default_factory=dict, repr=False, compare=False)
    _numeric: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        n = len(self.labels)
        if len(self.degrees) != n:
            raise DomainError(f"{self.name}: {n} labels but {len(self.degrees)} degrees")
        for label, deg in zip(self.labels, self.degrees):
            if deg < 0 or deg % 2 or deg > 2 * self.dim_complex:
                raise DomainError(f"{self.name}: basis element {label!r} has invalid degree {deg}")
        if len(self.pairing) != n or any(len(row) != n for row in self.pairing):
            raise DomainError(f"{self.name}: pairing must be {n}x{n}")
        for idx in (self.unit_index, self.top_index):
            if not 0 <= idx < n:
                raise DomainError(f"{self.name}: basis index {idx} out of range")
        table: dict[tuple[int, int], list[tuple[int, Fraction]]] = {}
        for i, j, k, c in self.cup:
            if not (0 <= i < n and 0 <= j < n and 0 <= k < n):
                raise DomainError(f"{self.name}: structure constant index out of range ({i},{j},{k})")
            if c:
                table.setdefault((i, j), []).append((k, Fraction(c)))
        self._table.update({key: tuple(sorted(v)) for key, v in table.items()})

    @property
    def dim(self) -> int:
        return len(self.labels)

    def index(self, label: str) -> int:
        try:
            return self.labels.index(label)
        except ValueError:
            raise DomainError(f"{self.name}: no basis element {label!r}") from None

    def products(self, i: int, j: int) -> tuple[tuple[int, Fraction], ...]:
        return self._table.get((i, j), ())

    def numeric_terms(self, digits: int) -> tuple:
        terms = self._numeric.get(digits)
        if terms is None:
            ctx = mp_context(digits)
            terms = tuple(
                (i, j, tuple((k, to_mp(ctx, c)) for k, c in self._table[(i, j)]))
                for (i, j) in sorted(self._table)
            )
            self._numeric[digits] = terms
        return terms

    # --- classes -------------------------------------------------------

    def element(self, coeffs: Sequence[Any], digits: int | None = None) -> CohClass:
        return CohClass(self, tuple(coeffs), digits)

    def basis(self, i: int) -> CohClass:
        return CohClass(self, tuple(Fraction(int(k == i)) for k in range(self.dim)))

    def named(self, label: str) -> CohClass:
        return self.basis(self.index(label))

    def unit(self) -> CohClass:
        return self.basis(self.unit_index)

    def zero(self) -> CohClass:
        return CohClass(self, tuple(Fraction(0) for _ in range(self.dim)))

    def degree_indices(self, degree: int) -> list[int]:
        return [i for i, d in enumerate(self.degrees) if d == degree]

    # --- matrices ------------------------------------------------------

    def multiplication_rows(self, a: CohClass) -> list[list[Any]]:
        """Matrix of b ↦ a ∪ b in the basis (column j = a ∪ e_j)."""
        cols = [(a * self.basis(j)).coeffs for j in range(self.dim)]
        return [[cols[j][i] for j in range(self.dim)] for i in range(self.dim)]

    def mu_diagonal(self) -> tuple[Fraction, ...]:
        """Grading operator μ(e_i) = (deg e_i / 2 − n/2) e_i."""
        return tuple(Fraction(d, 2) - Fraction(self.dim_complex, 2) for d in self.degrees)

    def pairing_rows(self) -> list[list[Fraction]]:
        return [list(row) for row in self.pairing]

    # --- axioms --------------------------------------------------------

    def validate(self) -> ValidationReport:
        """Check every Frobenius-algebra axiom exactly and report witnesses."""
        n = self.dim
        checks: list[AxiomCheck] = []
        lab = self.labels

        def cup_basis(i: int, j: int) -> list[Fraction]:
            out = [Fraction(0)] * n
            for k, c in self.products(i, j):
                out[k] += c
            return out

        def cup_vec(vec: list[Fraction], j: int) -> list[Fraction]:
            out = [Fraction(0)] * n
            for i, a in enumerate(vec):
                if a:
                    for k, c in self.products(i, j):
                        out[k] += a * c
            return out

        witness = None
        for i in range(n):
            if cup_basis(self.unit_index, i) != [Fraction(int(k == i)) for k in range(n)]:
                witness = lab[i]
                break
        checks.append(AxiomCheck("unit", witness is None, witness and f"1 ∪ {witness} != {witness}"))

        witness = None
        for i, j in itertools.combinations(range(n), 2):
            if cup_basis(i, j) != cup_basis(j, i):
                witness = f"({lab[i]}, {lab[j]})"
                break
        checks.append(AxiomCheck("commutativity", witness is None, witness))

        witness = None
        for i, j in itertools.product(range(n), repeat=2):
            for k, c in self.products(i, j):
                if c and self.degrees[k] != self.degrees[i] + self.degrees[j]:
                    witness = f"{lab[i]} ∪ {lab[j]} has a {lab[k]} term"
                    break
            if witness:
                break
        checks.append(AxiomCheck("degree additivity", witness is None, witness))

        witness = None
        for i, j, k in itertools.product(range(n), repeat=3):
            left = cup_vec(cup_basis(i, j), k)
            right = [Fraction(0)] * n
            jk = cup_basis(j, k)
            for m, b in enumerate(jk):
                if b:
                    for r, c in self.products(i, m):
                        right[r] += b * c
            if left != right:
                witness = f"({lab[i]}, {lab[j]}, {lab[k]})"
                break
        checks.append(AxiomCheck("associativity", witness is None, witness))

        witness = None
        for i, j in itertools.combinations(range(n), 2):
            if self.pairing[i][j] != self.pairing[j][i]:
                witness = f"({lab[i]}, {lab[j]})"
                break
        checks.append(AxiomCheck("pairing symmetry", witness is None, witness))

        kernel = exact.nullspace(self.pairing_rows())
        checks.append(AxiomCheck(
            "pairing non-degeneracy",
            not kernel,
            None if not kernel else "kernel vector " + str([str(x) for x in kernel[0]]),
        ))

        witness = None
        for i, j in itertools.product(range(n), repeat=2):
            if self.pairing[i][j] and self.degrees[i] + self.degrees[j] != 2 * self.dim_complex:
                witness = f"({lab[i]}, {lab[j]})"
                break
        checks.append(AxiomCheck("top-degree support", witness is None, witness))

        witness = None
        for i, j, k in itertools.product(range(n), repeat=3):
            ij = cup_basis(i, j)
            jk = cup_basis(j, k)
            lhs = sum((ij[m] * self.pairing[m][k] for m in range(n)), Fraction(0))
            rhs = sum((self.pairing[i][m] * jk[m] for m in range(n)), Fraction(0))
            if lhs != rhs:
                witness = f"({lab[i]}, {lab[j]}, {lab[k]})"
                break
        checks.append(AxiomCheck("Frobenius property", witness is None, witness))

        return ValidationReport(self.name, tuple(checks))


@dataclass(frozen=True, eq=False)
class CohClass:
    algebra: GradedFrobeniusAlgebra
    coeffs: tuple
    digits: int | None = None

    def __post_init__(self) -> None:
        if len(self.coeffs) != self.algebra.dim:
            raise DomainError(
                f"class has {len(self.coeffs)} coefficients, algebra {self.algebra.name} has dimension {self.algebra.dim}"
            )

    # --- representation ------------------------------------------------

    @property
    def is_exact(self) -> bool:
        return self.digits is None

    def numeric(self, pc: PrecisionContext | int) -> CohClass:
        digits = pc if isinstance(pc, int) else pc.digits
        ctx = mp_context(digits)
        return CohClass(self.algebra, tuple(to_mp(ctx, c) for c in self.coeffs), digits)

    def _align(self, other: CohClass) -> tuple[CohClass, CohClass]:
        if other.algebra is not self.algebra:
            raise DomainError(f"classes live in different algebras ({self.algebra.name}, {other.algebra.name})")
        if self.digits == other.digits:
            return self, other
        digits = max(d for d in (self.digits, other.digits) if d is not None)
        return self.numeric(digits), other.numeric(digits)

    def _zero(self):
        return Fraction(0) if self.digits is None else mp_context(self.digits).zero

    def _scalar(self, c: Any):
        if self.digits is None:
            return c
        return to_mp(mp_context(self.digits), c)

    # --- arithmetic ----------------------------------------------------

    def __add__(self, other: CohClass) -> CohClass:
        a, b = self._align(other)
        return CohClass(a.algebra, tuple(x + y for x, y in zip(a.coeffs, b.coeffs)), a.digits)

    def __sub__(self, other: CohClass) -> CohClass:
        a, b = self._align(other)
        return CohClass(a.algebra, tuple(x - y for x, y in zip(a.coeffs, b.coeffs)), a.digits)

    def __neg__(self) -> CohClass:
        return CohClass(self.algebra, tuple(-x for x in self.coeffs), self.digits)

    def scale(self, c: Any) -> CohClass:
        base = self
        if self.digits is None and not exact.is_exact(c):
            ctx_digits = getattr(getattr(c, "context", None), "dps", None)
            if ctx_digits is None:
                raise DomainError("scaling an exact class by an inexact number needs a precision; call numeric() first")
            base = self.numeric(ctx_digits)
        c = base._scalar(c)
        return CohClass(base.algebra, tuple(c * x for x in base.coeffs), base.digits)

    def cup(self, other: CohClass) -> CohClass:
        a, b = self._align(other)
        out = [a._zero()] * a.algebra.dim
        if a.digits is None:
            for i, x in enumerate(a.coeffs):
                if not x:
                    continue
                for j, y in enumerate(b.coeffs):
                    if not y:
                        continue
                    for k, c in a.algebra.products(i, j):
                        out[k] += x * y * c
        else:
            for i, j, terms in a.algebra.numeric_terms(a.digits):
                x = a.coeffs[i]
                y = b.coeffs[j]
                if not x or not y:
                    continue
                xy = x * y
                for k, c in terms:
                    out[k] += xy * c
        return CohClass(a.algebra, tuple(out), a.digits)

    def __mul__(self, other: Any) -> CohClass:
        if isinstance(other, CohClass):
            return self.cup(other)
        return self.scale(other)

    def __rmul__(self, other: Any) -> CohClass:
        return self.scale(other)

    def power(self, k: int) -> CohClass:
        out = self.algebra.unit()
        if self.digits is not None:
            out = out.numeric(self.digits)
        for _ in range(k):
            out = out.cup(self)
        return out

    # --- degree handling ------------------------------------------------

    def degree_part(self, degree: int) -> CohClass:
        z = self._zero()
        return CohClass(
            self.algebra,
            tuple(c if d == degree else z for c, d in zip(self.coeffs, self.algebra.degrees)),
            self.digits,
        )

    def scale_by_degree(self, factor: Any) -> CohClass:
        """Multiply the degree-2k part by factor^k (e.g. (2πi)^{deg/2})."""
        base = self if self.digits is not None or exact.is_exact(factor) else self.numeric(factor.context.dps)
        return CohClass(
            base.algebra,
            tuple(c * base._scalar(factor) ** (d // 2) for c, d in zip(base.coeffs, base.algebra.degrees)),
            base.digits,
        )

    def dual(self) -> CohClass:
        """(−1)^{deg/2} involution: sign flip on degrees 4k+2."""
        return CohClass(
            self.algebra,
            tuple(-c if (d // 2) % 2 else c for c, d in zip(self.coeffs, self.algebra.degrees)),
            self.digits,
        )

    def is_nilpotent(self, pc: PrecisionContext | None = None) -> bool:
        for c, d in zip(self.coeffs, self.algebra.degrees):
            if d == 0 and c:
                if self.digits is None or pc is None:
                    return False
                if abs(c) > pc.eps(5):
                    return False
        return True

    def degree_zero_scalar(self):
        idx = self.algebra.degree_indices(0)
        if idx != [self.algebra.unit_index]:
            raise DomainError(f"{self.algebra.name}: H^0 must be spanned by the unit")
        return self.coeffs[self.algebra.unit_index]

    def power_series(self, coeffs: Sequence[Any], pc: PrecisionContext | None = None) -> CohClass:
        """Σ_k coeffs[k] · self^k, evaluated by Horner's rule."""
        x = self if pc is None else self.numeric(pc) if self.digits != pc.digits else self
        out = x.algebra.zero() if x.digits is None else x.algebra.zero().numeric(x.digits)
        unit = x.algebra.unit() if x.digits is None else x.algebra.unit().numeric(x.digits)
        for c in reversed(list(coeffs)):
            out = out.cup(x) + unit.scale(c)
        return out

    def exp(self, pc: PrecisionContext | None = None) -> CohClass:
        """e^x for x = (scalar)·1 + nilpotent; exact when x is exact with zero scalar part."""
        scalar = self.degree_zero_scalar()
        nil = self - self.degree_part(0)
        top = self.algebra.dim_complex
        if self.digits is None and not scalar:
            coeffs = [Fraction(1, math.factorial(k)) for k in range(top + 1)]
            return nil.power_series(coeffs)
        if pc is None:
            if self.digits is None:
                raise DomainError("exp of an exact class with nonzero degree-0 part needs a precision")
            pc = PrecisionContext(self.digits)
        ctx = pc.mp
        coeffs = [ctx.one / ctx.factorial(k) for k in range(top + 1)]
        return nil.power_series(coeffs, pc).scale(ctx.exp(to_mp(ctx, scalar)))

    # --- pairing ---------------------------------------------------------

    def integrate(self):
        """∫ a: pairing with the unit, i.e. the top coefficient against the fundamental class."""
        row = self.algebra.pairing[self.algebra.unit_index]
        total = self._zero()
        for c, p in zip(self.coeffs, row):
            if p:
                total += c * self._scalar(p)
        return total

    def pair(self, other: CohClass):
        return self.cup(other).integrate()

    def norm(self):
        """Max-abs coefficient norm."""
        return max((abs(c) for c in self.coeffs), default=0)

    def describe(self, nd: int = 12) -> str:
        parts = []
        for label, c in zip(self.algebra.labels, self.coeffs):
            if not c:
                continue
            text = str(c) if self.digits is None else mp_context(self.digits).nstr(c, nd)
            parts.append(f"({text})·{label}")
        return " + ".join(parts) or "0"


def cup(a: CohClass, b: CohClass) -> CohClass:
    return a.cup(b)


def poincare_pair(a: CohClass, b: CohClass):
    return a.pair(b)


def integrate(a: CohClass):
    return a.integrate()


def validate(algebra: GradedFrobeniusAlgebra) -> ValidationReport:
    return algebra.validate()


def projective_space(n: int, symbol: str = "p") -> GradedFrobeniusAlgebra:
    """H*(P^n) = Q[p]/(p^{n+1}) with (p^a, p^b) = δ_{a+b,n}."""
    if n < 0:
        raise DomainError(f"P^n needs n >= 0, got {n}")
    labels = tuple("1" if k == 0 else symbol if k == 1 else f"{symbol}^{k}" for k in range(n + 1))
    cup_terms = tuple(
        (a, b, a + b, Fraction(1)) for a in range(n + 1) for b in range(n + 1) if a + b <= n
    )
    pairing = tuple(tuple(Fraction(int(a + b == n)) for b in range(n + 1)) for a in range(n + 1))
    return GradedFrobeniusAlgebra(
        name=f"P{n}",
        labels=labels,
        degrees=tuple(2 * k for k in range(n + 1)),
        dim_complex=n,
        cup=cup_terms,
        pairing=pairing,
        unit_index=0,
        top_index=n,
    )


def kunneth_tensor(a: GradedFrobeniusAlgebra, b: GradedFrobeniusAlgebra, name: str | None = None) -> GradedFrobeniusAlgebra:
    """A ⊗ B: basis e_i⊗f_j at index i·dim(B)+j, degrees add, constants and pairing multiply."""
    nb = b.dim

    def idx(i: int, j: int) -> int:
        return i * nb + j

    labels = tuple(
        la if lb == "1" else lb if la == "1" else f"{la}⊗{lb}"
        for la in a.labels for lb in b.labels
    )
    if len(set(labels)) != len(labels):
        labels = tuple(f"{la}⊗{lb}" for la in a.labels for lb in b.labels)
    degrees = tuple(da + db for da in a.degrees for db in b.degrees)
    cup_terms = []
    for (i1, i2), ta in sorted(a._table.items()):
        for (j1, j2), tb in sorted(b._table.items()):
            for k1, c1 in ta:
                for k2, c2 in tb:
                    cup_terms.append((idx(i1, j1), idx(i2, j2), idx(k1, k2), c1 * c2))
    pairing = tuple(
        tuple(a.pairing[i1][i2] * b.pairing[j1][j2] for i2 in range(a.dim) for j2 in range(nb))
        for i1 in range(a.dim) for j1 in range(nb)
    )
    return GradedFrobeniusAlgebra(
        name=name or f"{a.name}x{b.name}",
        labels=labels,
        degrees=degrees,
        dim_complex=a.dim_complex + b.dim_complex,
        cup=tuple(cup_terms),
        pairing=pairing,
        unit_index=idx(a.unit_index, b.unit_index),
        top_index=idx(a.top_index, b.top_index),
    )


def tensor_class(x: CohClass, y: CohClass, product: GradedFrobeniusAlgebra) -> CohClass:
    """x ⊗ y inside the Künneth product algebra built from x's and y's algebras."""
    nb = y.algebra.dim
    if product.dim != x.algebra.dim * nb:
        raise DomainError("product algebra does not match the factors")
    digits = x.digits if x.digits is not None else y.digits
    if digits is not None:
        x, y = x.numeric(digits), y.numeric(digits)
    coeffs = [None] * product.dim
    for i, a in enumerate(x.coeffs):
        for j, b in enumerate(y.coeffs):
            coeffs[i * nb + j] = a * b
    return CohClass(product, tuple(coeffs), digits)
