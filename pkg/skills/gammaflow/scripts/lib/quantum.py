"""Small quantum products at τ ∈ H², Euler multiplication, spectra and admissible phases."""

from __future__ import annotations

import functools
import itertools
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from . import exact
from .cohomology import AxiomCheck, CohClass, GradedFrobeniusAlgebra, ValidationReport, tensor_class
from .errors import DomainError
from .numerics import EigenReport, PrecisionContext, eigen_decompose, to_mp

# A structure term: e_i ⋆ e_j ∋ coeff · q^monomial · e_k
Term = tuple[int, int, int, tuple[int, ...], Fraction]


@dataclass(frozen=True, eq=False)
class QuantumAlgebra:
    """Polynomial-in-q structure constants of ⋆ on a Frobenius algebra.

    ``terms`` include the classical cup product (monomial 0); q has one entry
    per H² generator (Novikov variable specialised to 1).
    """

    name: str
    base: GradedFrobeniusAlgebra
    c1: CohClass
    n_params: int
    terms: tuple[Term, ...]
    _table: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        n = self.base.dim
        table: dict[tuple[int, int], list[tuple[int, tuple[int, ...], Fraction]]] = {}
        for i, j, k, mono, c in self.terms:
            if not (0 <= i < n and 0 <= j < n and 0 <= k < n):
                raise DomainError(f"{self.name}: quantum term index out of range ({i},{j},{k})")
            if len(mono) != self.n_params or any(m < 0 for m in mono):
                raise DomainError(f"{self.name}: monomial {mono} does not match {self.n_params} parameters")
            if c:
                table.setdefault((i, j), []).append((k, tuple(mono), Fraction(c)))
        self._table.update(table)
        if not self.c1.is_exact or self.c1.algebra is not self.base:
            raise DomainError(f"{self.name}: c1 must be an exact class of the base algebra")

    @property
    def dim(self) -> int:
        return self.base.dim

    def mu(self) -> tuple[Fraction, ...]:
        return self.base.mu_diagonal()

    # --- evaluation at q ---------------------------------------------------

    def check_q(self, q: Sequence[Any], ctx=None) -> tuple:
        q = tuple(q) if isinstance(q, (list, tuple)) else (q,)
        if len(q) != self.n_params:
            raise DomainError(f"{self.name} takes {self.n_params} quantum parameter(s), got {len(q)}")
        if ctx is not None:
            for v in q:
                x = to_mp(ctx, v)
                if not ctx.isfinite(x):
                    raise DomainError(f"{self.name}: quantum parameter {v!r} is not finite")
        return q

    def structure_at(self, q: Sequence[Any], pc: PrecisionContext | None = None) -> dict:
        """{(i, j): [(k, value)]} at q; exact when pc is None (q must then be rational)."""
        ctx = pc.mp if pc is not None else None
        q = self.check_q(q, ctx)
        if ctx is None:
            qv = [exact.to_fraction(v) for v in q]
            one = Fraction(1)
        else:
            qv = [to_mp(ctx, v) for v in q]
            one = ctx.one
        out: dict[tuple[int, int], list[tuple[int, Any]]] = {}
        for key in sorted(self._table):
            acc: dict[int, Any] = {}
            for k, mono, c in self._table[key]:
                val = one * (c if ctx is None else to_mp(ctx, c))
                for base, power in zip(qv, mono):
                    if power:
                        val *= base ** power
                acc[k] = acc.get(k, 0) + val
            out[key] = [(k, acc[k]) for k in sorted(acc) if acc[k] != 0]
        return out

    def product(self, a: CohClass, b: CohClass, q: Sequence[Any], pc: PrecisionContext | None = None) -> CohClass:
        if a.algebra is not self.base or b.algebra is not self.base:
            raise DomainError(f"{self.name}: classes are not in the base algebra")
        table = self.structure_at(q, pc)
        if pc is not None:
            a, b = a.numeric(pc), b.numeric(pc)
            zero = pc.mp.zero
        else:
            if not (a.is_exact and b.is_exact):
                raise DomainError("exact quantum product needs exact classes")
            zero = Fraction(0)
        out = [zero] * self.dim
        for (i, j), terms in table.items():
            x, y = a.coeffs[i], b.coeffs[j]
            if not x or not y:
                continue
            for k, c in terms:
                out[k] += x * y * c
        return CohClass(self.base, tuple(out), None if pc is None else pc.digits)

    def multiplication_matrix(self, a: CohClass, q: Sequence[Any], pc: PrecisionContext):
        """Matrix of v ↦ a ⋆_q v (column j = a ⋆ e_j)."""
        ctx = pc.mp
        m = ctx.zeros(self.dim, self.dim)
        for j in range(self.dim):
            col = self.product(a, self.base.basis(j), q, pc)
            for i in range(self.dim):
                m[i, j] = col.coeffs[i]
        return m

    def euler_matrix(self, q: Sequence[Any], pc: PrecisionContext):
        """Matrix of E⋆_τ = c₁⋆ at τ ∈ H²."""
        return self.multiplication_matrix(self.c1, q, pc)

    def exact_euler_rows(self, q: Sequence[Any]) -> list[list[Fraction]]:
        cols = [self.product(self.c1, self.base.basis(j), q).coeffs for j in range(self.dim)]
        return [[cols[j][i] for j in range(self.dim)] for i in range(self.dim)]

    def validate_at(self, q: Sequence[Any]) -> ValidationReport:
        """Exact unit/commutativity/associativity/Frobenius checks of ⋆ at a rational q."""
        n = self.dim
        lab = self.base.labels
        e = [self.base.basis(i) for i in range(n)]
        checks: list[AxiomCheck] = []

        classical = self.structure_at([0] * self.n_params)
        witness = None
        for i, j in itertools.product(range(n), repeat=2):
            cup = sorted((k, c) for k, c in self.base.products(i, j))
            if sorted(classical.get((i, j), [])) != cup:
                witness = f"({lab[i]}, {lab[j]})"
                break
        checks.append(AxiomCheck("classical limit", witness is None, witness))

        prod = {(i, j): self.product(e[i], e[j], q) for i in range(n) for j in range(n)}
        unit = self.base.unit_index
        witness = next((lab[i] for i in range(n) if prod[(unit, i)].coeffs != e[i].coeffs), None)
        checks.append(AxiomCheck("unit", witness is None, witness))

        witness = next(
            (f"({lab[i]}, {lab[j]})" for i, j in itertools.combinations(range(n), 2)
             if prod[(i, j)].coeffs != prod[(j, i)].coeffs),
            None,
        )
        checks.append(AxiomCheck("commutativity", witness is None, witness))

        witness = None
        for i, j, k in itertools.product(range(n), repeat=3):
            left = self.product(prod[(i, j)], e[k], q)
            right = self.product(e[i], prod[(j, k)], q)
            if left.coeffs != right.coeffs:
                witness = f"({lab[i]}, {lab[j]}, {lab[k]})"
                break
        checks.append(AxiomCheck("associativity", witness is None, witness))

        witness = None
        for i, j, k in itertools.product(range(n), repeat=3):
            if prod[(i, j)].pair(e[k]) != e[i].pair(prod[(j, k)]):
                witness = f"({lab[i]}, {lab[j]}, {lab[k]})"
                break
        checks.append(AxiomCheck("Frobenius property", witness is None, witness))
        return ValidationReport(f"{self.name} at q={[str(v) for v in q]}", tuple(checks))


def quantum_product(qa: QuantumAlgebra, a: CohClass, b: CohClass, q: Sequence[Any], pc: PrecisionContext | None = None) -> CohClass:
    return qa.product(a, b, q, pc)


def projective_quantum(algebra: GradedFrobeniusAlgebra) -> QuantumAlgebra:
    """p^a ⋆ p^b = q^{⌊(a+b)/(n+1)⌋} p^{(a+b) mod (n+1)} on H*(P^n)."""
    n = algebra.dim_complex
    terms = tuple(
        (a, b, (a + b) % (n + 1), ((a + b) // (n + 1),), Fraction(1))
        for a in range(n + 1) for b in range(n + 1)
    )
    p = algebra.basis(1) if n >= 1 else algebra.zero()
    return QuantumAlgebra(algebra.name, algebra, p.scale(n + 1), 1, terms)


def kunneth_quantum(a: QuantumAlgebra, b: QuantumAlgebra, product: GradedFrobeniusAlgebra) -> QuantumAlgebra:
    """⋆ on A⊗B: factorwise products, parameters concatenated."""
    nb = b.dim
    terms = []
    for (i1, i2), ta in sorted(a._table.items()):
        for (j1, j2), tb in sorted(b._table.items()):
            for k1, m1, c1 in ta:
                for k2, m2, c2 in tb:
                    terms.append((i1 * nb + j1, i2 * nb + j2, k1 * nb + k2, m1 + m2, c1 * c2))
    c1 = tensor_class(a.c1, b.base.unit(), product) + tensor_class(a.base.unit(), b.c1, product)
    return QuantumAlgebra(product.name, product, c1, a.n_params + b.n_params, tuple(terms))


# ---------------------------------------------------------------------------
# Spectrum
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SpectrumReport:
    eigen: EigenReport
    values: tuple  # distinct eigenvalues (cluster representatives)
    multiplicities: tuple[int, ...]
    T: Any  # spectral radius
    simple_max: bool  # T itself is a simple eigenvalue
    forbidden: tuple  # forbidden phase directions in [0, 2π)
    digits: int

    @property
    def distinct(self) -> bool:
        return all(m == 1 for m in self.multiplicities)


def _forbidden_directions(values: Sequence[Any], pc: PrecisionContext) -> tuple:
    ctx = pc.mp
    tol = pc.eps(pc.digits // 2)
    dirs: list[Any] = []
    for a, b in itertools.permutations(values, 2):
        d = a - b
        if abs(d) <= tol:
            continue
        theta = ctx.arg(d)
        if theta < 0:
            theta += 2 * ctx.pi
        if all(abs(theta - x) > tol for x in dirs):
            dirs.append(theta)
    return tuple(sorted(dirs))


def spectrum_of_matrix(m, pc: PrecisionContext) -> SpectrumReport:
    ctx = pc.mp
    report = eigen_decompose(m, pc)
    values = tuple(rep for rep, _, _ in report.clusters)
    mults = tuple(mult for _, mult, _ in report.clusters)
    radius = max(abs(v) for v in values)
    tol = pc.eps(pc.digits // 2) * max(1, radius)
    top = [i for i, v in enumerate(values) if abs(v - radius) <= tol]
    simple_max = len(top) == 1 and mults[top[0]] == 1
    return SpectrumReport(report, values, mults, ctx.mpf(radius), simple_max, _forbidden_directions(values, pc), pc.digits)


def euler_spectrum(qa: QuantumAlgebra, q: Sequence[Any], pc: PrecisionContext) -> SpectrumReport:
    return spectrum_of_matrix(qa.euler_matrix(q, pc), pc)


@dataclass(frozen=True)
class ConjectureOReport:
    passed: bool
    T: Any
    multiplicity: int
    at_max: int  # eigenvalues attaining the spectral radius
    positive_real: bool
    detail: str


def conjecture_O_check(spectrum: SpectrumReport, pc: PrecisionContext) -> ConjectureOReport:
    """The spectral radius T must itself be a simple eigenvalue.

    Other eigenvalues may share the modulus T (the n+1 roots on P^n do).
    """
    ctx = pc.mp
    tol = pc.eps(pc.digits // 2) * max(1, spectrum.T)
    at_max = [i for i, v in enumerate(spectrum.values) if abs(abs(v) - spectrum.T) <= tol]
    positive = [i for i in at_max if abs(ctx.im(spectrum.values[i])) <= tol and ctx.re(spectrum.values[i]) > 0]
    mult = spectrum.multiplicities[positive[0]] if positive else 0
    passed = len(positive) == 1 and mult == 1
    detail = (
        f"T={ctx.nstr(spectrum.T, 12)}; {len(at_max)} eigenvalue(s) on |u|=T; "
        f"multiplicity of T = {mult}; multiplicities {list(spectrum.multiplicities)}"
    )
    return ConjectureOReport(passed, spectrum.T, mult, len(at_max), bool(positive), detail)


@dataclass(frozen=True)
class PhaseChoice:
    phi: Any
    margin: Any
    admissible: bool
    chamber: tuple  # (lo, hi) neighbouring forbidden directions around phi
    forbidden: tuple
    auto: bool


def _wrapped_distance(ctx, a, b):
    d = abs(a - b) % (2 * ctx.pi)
    return min(d, 2 * ctx.pi - d)


def admissible_phase(spectrum: SpectrumReport, pc: PrecisionContext, requested: Any = None) -> PhaseChoice:
    """Phase avoiding every direction R_{>0}(u_i − u_j); auto picks the middle of the widest gap."""
    ctx = pc.mp
    dirs = list(spectrum.forbidden)
    tol = pc.eps(pc.digits // 2)
    if not dirs:
        phi = ctx.zero if requested is None else to_mp(ctx, requested)
        return PhaseChoice(phi, ctx.pi, True, (phi - ctx.pi, phi + ctx.pi), (), requested is None)

    if requested is None:
        best = None
        for idx, lo in enumerate(dirs):
            hi = dirs[idx + 1] if idx + 1 < len(dirs) else dirs[0] + 2 * ctx.pi
            gap = hi - lo
            mid = (lo + hi) / 2
            if mid >= 2 * ctx.pi:
                mid -= 2 * ctx.pi
            key = (gap, -_wrapped_distance(ctx, mid, 0), -mid)
            if best is None or _better(key, best[0], tol):
                best = (key, mid)
        phi = best[1]
        if phi > ctx.pi:
            phi -= 2 * ctx.pi
        auto = True
    else:
        phi = to_mp(ctx, requested)
        auto = False

    margin = min(_wrapped_distance(ctx, phi, d) for d in dirs)
    base = phi % (2 * ctx.pi)
    below = [d for d in dirs if d <= base + tol]
    above = [d for d in dirs if d > base + tol]
    lo = below[-1] if below else dirs[-1] - 2 * ctx.pi
    hi = above[0] if above else dirs[0] + 2 * ctx.pi
    shift = phi - base
    return PhaseChoice(phi, margin, margin > tol, (lo + shift, hi + shift), tuple(dirs), auto)


def _better(key, best, tol) -> bool:
    for a, b in zip(key, best):
        if abs(a - b) > tol:
            return a > b
    return False


def order_eigenvalues(values: Sequence[Any], phi: Any, pc: PrecisionContext) -> list[int]:
    """Indices sorted by Im(e^{−iφ}u) descending, ties by Re(e^{−iφ}u) descending, then index."""
    ctx = pc.mp
    tol = pc.eps(pc.digits // 2) * max([1] + [abs(v) for v in values])
    rot = ctx.expj(-to_mp(ctx, phi))
    keys = [(ctx.im(rot * v), ctx.re(rot * v)) for v in values]

    def cmp(i: int, j: int) -> int:
        for a, b in zip(keys[i], keys[j]):
            if abs(a - b) > tol:
                return -1 if a > b else 1
        return -1 if i < j else (1 if i > j else 0)

    return sorted(range(len(values)), key=functools.cmp_to_key(cmp))


@dataclass(frozen=True)
class PatternReport:
    passed: bool
    expected_T: Any
    zero_multiplicity: int
    expected_zero_multiplicity: int
    max_deviation: Any


def hypersurface_pattern_check(spectrum: SpectrumReport, n: int, d: int, pc: PrecisionContext) -> PatternReport:
    """Eigenvalues {0} ∪ {Tζ : ζ^{n+1−d} = 1} with T = (n+1−d)·d^{d/(n+1−d)}."""
    if not (1 <= d <= n):
        raise DomainError(f"degree d={d} must satisfy 1 <= d <= n={n} for a Fano hypersurface")
    ctx = pc.mp
    r = n + 1 - d
    expected_T = r * ctx.power(d, ctx.mpf(d) / r)
    targets = [expected_T * ctx.root(1, r, k) for k in range(r)]
    tol = pc.eps(pc.digits // 2) * max(1, expected_T)
    deviation = ctx.zero
    used = set()
    zero_mult = 0
    ok = True
    for value, mult in zip(spectrum.values, spectrum.multiplicities):
        if abs(value) <= tol:
            zero_mult += mult
            continue
        dists = [abs(value - t) for t in targets]
        k = min(range(r), key=lambda i: dists[i])
        deviation = max(deviation, dists[k])
        if k in used or mult != 1:
            ok = False
        used.add(k)
    dim = sum(spectrum.multiplicities)
    expected_zero = dim - r
    ok = ok and len(used) == r and zero_mult == expected_zero and deviation <= tol
    return PatternReport(ok, expected_T, zero_mult, expected_zero, deviation)
