"""Characteristic classes and Euler pairings.

Multiplicative classes are genera: for a characteristic series Q(x) with
log Q(x) = Σ a_k x^k, the class is exp(Σ_k k!·a_k·ch_k(TX)). Γ̂ uses
log Γ(1+x); Todd and Â use Bernoulli numbers.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from . import exact
from .cohomology import CohClass, GradedFrobeniusAlgebra
from .errors import DomainError
from .numerics import PrecisionContext, euler_gamma, zeta_value


@dataclass(frozen=True, eq=False)
class TangentData:
    """ch_k(TX) for k = 0..n, exact."""

    algebra: GradedFrobeniusAlgebra
    ch: tuple[CohClass, ...]

    def __post_init__(self) -> None:
        n = self.algebra.dim_complex
        if len(self.ch) != n + 1:
            raise DomainError(f"{self.algebra.name}: need ch_0..ch_{n}, got {len(self.ch)} components")
        for k, part in enumerate(self.ch):
            if not part.is_exact:
                raise DomainError("tangent data must be exact")
            if part.degree_part(2 * k).coeffs != part.coeffs:
                raise DomainError(f"{self.algebra.name}: ch_{k} is not homogeneous of degree {2 * k}")
        rank = self.ch[0].degree_zero_scalar()
        if rank != n:
            raise DomainError(f"{self.algebra.name}: ch_0 = {rank}, expected the dimension {n}")

    @property
    def dim(self) -> int:
        return self.algebra.dim_complex

    @property
    def c1(self) -> CohClass:
        return self.ch[1] if self.dim >= 1 else self.algebra.zero()

    def total_ch(self) -> CohClass:
        out = self.algebra.zero()
        for part in self.ch:
            out = out + part
        return out

    @classmethod
    def from_total_ch(cls, algebra: GradedFrobeniusAlgebra, total: CohClass) -> TangentData:
        return cls(algebra, tuple(total.degree_part(2 * k) for k in range(algebra.dim_complex + 1)))

    @classmethod
    def from_chern(cls, algebra: GradedFrobeniusAlgebra, chern: Sequence[CohClass]) -> TangentData:
        """Build ch from Chern classes c_1..c_n by Newton's identities.

        p_k = (−1)^{k−1} k c_k + Σ_{i=1}^{k−1} (−1)^{i−1} c_i p_{k−i}, ch_k = p_k / k!.
        """
        n = algebra.dim_complex
        c = [algebra.unit()] + list(chern) + [algebra.zero()] * max(0, n - len(chern))
        p: list[CohClass] = [algebra.unit().scale(n)]
        for k in range(1, n + 1):
            acc = c[k].scale((-1) ** (k - 1) * k)
            for i in range(1, k):
                acc = acc + c[i].cup(p[k - i]).scale((-1) ** (i - 1))
            p.append(acc)
        return cls(algebra, tuple(p[k].scale(Fraction(1, exact.factorial(k))) for k in range(n + 1)))


def _genus(X: TangentData, log_coeffs: Sequence[Any], pc: PrecisionContext | None = None) -> CohClass:
    """exp(Σ_{k≥1} k!·a_k·ch_k)."""
    exponent = X.algebra.zero()
    if pc is not None:
        exponent = exponent.numeric(pc)
    for k in range(1, X.dim + 1):
        a = log_coeffs[k] if k < len(log_coeffs) else 0
        if a:
            part = X.ch[k] if pc is None else X.ch[k].numeric(pc)
            exponent = exponent + part.scale(exact.factorial(k) * a)
    return exponent.exp(pc)


def _bernoulli_log_coeffs(n: int, linear: Fraction) -> list[Fraction]:
    """log of x/(1−e^{−x}) (linear = 1/2) or (x/2)/sinh(x/2) (linear = 0): x·linear − Σ B_{2j} x^{2j}/(2j·(2j)!)."""
    coeffs = [Fraction(0)] * (n + 1)
    if n >= 1:
        coeffs[1] = linear
    for k in range(2, n + 1, 2):
        coeffs[k] = -exact.bernoulli(k) / (k * exact.factorial(k))
    return coeffs


def gamma_class(X: TangentData, pc: PrecisionContext) -> CohClass:
    """Γ̂_X = exp(−γ c₁ + Σ_{k=2}^n (−1)^k ζ(k)(k−1)! ch_k)."""
    ctx = pc.mp
    coeffs = [ctx.zero, -euler_gamma(pc)]
    for k in range(2, X.dim + 1):
        coeffs.append((-1) ** k * zeta_value(k, pc) / k)
    return _genus(X, coeffs, pc)


def dual_gamma(g: CohClass) -> CohClass:
    return g.dual()


def todd_class(X: TangentData) -> CohClass:
    return _genus(X, _bernoulli_log_coeffs(X.dim, Fraction(1, 2)))


def a_hat_class(X: TangentData) -> CohClass:
    return _genus(X, _bernoulli_log_coeffs(X.dim, Fraction(0)))


@dataclass(frozen=True)
class GammaIdentityReport:
    space: str
    residual: Any
    threshold: Any
    lhs: CohClass
    rhs: CohClass

    @property
    def passed(self) -> bool:
        return self.residual < self.threshold


def check_gamma_ahat(X: TangentData, pc: PrecisionContext) -> GammaIdentityReport:
    """Γ̂·Γ̂* against (2πi)^{deg/2} Â, coefficientwise."""
    ctx = pc.mp
    g = gamma_class(X, pc)
    lhs = g.cup(dual_gamma(g))
    rhs = a_hat_class(X).numeric(pc).scale_by_degree(2 * ctx.pi * ctx.j)
    residual = (lhs - rhs).norm()
    return GammaIdentityReport(X.algebra.name, residual, pc.eps(5), lhs, rhs)


# ---------------------------------------------------------------------------
# K-theory
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class KLattice:
    """Integer lattice K(X) with a chosen basis and its Chern characters."""

    name: str
    tangent: TangentData
    labels: tuple[str, ...]
    ch_basis: tuple[CohClass, ...]
    blocks: tuple[str, ...] | None = None
    _todd: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self) -> None:
        if len(self.labels) != len(self.ch_basis):
            raise DomainError(f"{self.name}: {len(self.labels)} labels for {len(self.ch_basis)} classes")
        if self.blocks is not None and len(self.blocks) != len(self.labels):
            raise DomainError(f"{self.name}: block labels must match the basis")
        for v in self.ch_basis:
            if not v.is_exact or v.algebra is not self.tangent.algebra:
                raise DomainError(f"{self.name}: ch basis must be exact classes in {self.tangent.algebra.name}")

    @property
    def rank(self) -> int:
        return len(self.labels)

    @property
    def algebra(self) -> GradedFrobeniusAlgebra:
        return self.tangent.algebra

    def todd(self) -> CohClass:
        td = self._todd.get("exact")
        if td is None:
            td = self._todd["exact"] = todd_class(self.tangent)
        return td

    def basis(self, i: int) -> KClass:
        return KClass(self, tuple(int(k == i) for k in range(self.rank)))

    def named(self, label: str) -> KClass:
        return self.basis(self.labels.index(label))

    def element(self, coeffs: Sequence[int]) -> KClass:
        return KClass(self, tuple(int(c) for c in coeffs))

    def zero(self) -> KClass:
        return KClass(self, (0,) * self.rank)

    def from_ch(self, ch: CohClass) -> KClass:
        """The lattice vector with the given Chern character (must exist and be integral)."""
        if not ch.is_exact:
            raise DomainError("from_ch needs an exact class")
        cols = [v.coeffs for v in self.ch_basis]
        rows = [[cols[j][i] for j in range(self.rank)] for i in range(self.algebra.dim)]
        sol = exact.solve(rows, list(ch.coeffs))
        if sol is None:
            raise DomainError(f"{self.name}: class is outside the span of the K-basis")
        ints = exact.as_integers(sol)
        if ints is None:
            raise DomainError(f"{self.name}: class has non-integral coordinates {[str(s) for s in sol]}")
        return KClass(self, tuple(ints))

    def line_bundle(self, c1: CohClass) -> KClass:
        return self.from_ch(c1.exp())

    def tensor(self, v: KClass, w: KClass) -> KClass:
        return self.from_ch(v.ch.cup(w.ch))

    def dual(self, v: KClass) -> KClass:
        return self.from_ch(v.ch.dual())

    def canonical(self) -> KClass:
        """ω_X = det(T*X), with c₁(ω) = −c₁(X)."""
        return self.line_bundle(-self.tangent.c1)

    def operator_matrix(self, op) -> list[list[int]]:
        """Integer matrix (columns = images of basis vectors) of a lattice map."""
        cols = [op(self.basis(i)).coeffs for i in range(self.rank)]
        return [[cols[j][i] for j in range(self.rank)] for i in range(self.rank)]


@dataclass(frozen=True, eq=False)
class KClass:
    lattice: KLattice
    coeffs: tuple[int, ...]

    def __post_init__(self) -> None:
        if len(self.coeffs) != self.lattice.rank:
            raise DomainError(f"K-class needs {self.lattice.rank} coordinates, got {len(self.coeffs)}")

    @property
    def ch(self) -> CohClass:
        out = self.lattice.algebra.zero()
        for c, v in zip(self.coeffs, self.lattice.ch_basis):
            if c:
                out = out + v.scale(c)
        return out

    def _same(self, other: KClass) -> None:
        if other.lattice is not self.lattice:
            raise DomainError("K-classes belong to different lattices")

    def __add__(self, other: KClass) -> KClass:
        self._same(other)
        return KClass(self.lattice, tuple(a + b for a, b in zip(self.coeffs, other.coeffs)))

    def __sub__(self, other: KClass) -> KClass:
        self._same(other)
        return KClass(self.lattice, tuple(a - b for a, b in zip(self.coeffs, other.coeffs)))

    def __neg__(self) -> KClass:
        return KClass(self.lattice, tuple(-a for a in self.coeffs))

    def __mul__(self, k: int) -> KClass:
        return KClass(self.lattice, tuple(k * a for a in self.coeffs))

    __rmul__ = __mul__

    def __eq__(self, other: object) -> bool:
        return isinstance(other, KClass) and other.lattice is self.lattice and other.coeffs == self.coeffs

    def __hash__(self) -> int:
        return hash((id(self.lattice), self.coeffs))

    def describe(self) -> str:
        terms = []
        for c, label in zip(self.coeffs, self.lattice.labels):
            if c == 1:
                terms.append(label)
            elif c:
                terms.append(f"{c}·{label}")
        return " + ".join(terms).replace("+ -", "- ") or "0"


@dataclass(frozen=True)
class PairingValue:
    raw: Any
    integer: int
    error: Any
    integral: bool


def euler_pairing_exact(v: KClass, w: KClass) -> Fraction:
    """χ(V, W) = ∫ ch(V^∨) ch(W) Td(X), in exact arithmetic."""
    v._same(w)
    return v.ch.dual().cup(w.ch).cup(v.lattice.todd()).integrate()


def euler_pairing(v: KClass, w: KClass, pc: PrecisionContext) -> PairingValue:
    """χ(V, W) at working precision with the nearest integer and an integrality flag."""
    v._same(w)
    ctx = pc.mp
    td = v.lattice.todd().numeric(pc)
    raw = v.ch.dual().numeric(pc).cup(w.ch.numeric(pc)).cup(td).integrate()
    nearest = int(ctx.nint(ctx.re(raw)))
    error = abs(raw - nearest)
    return PairingValue(raw, nearest, error, error <= pc.eps(8))


@dataclass(frozen=True)
class EulerGram:
    entries: tuple[tuple[Fraction, ...], ...]

    @property
    def integral(self) -> bool:
        return exact.integer_matrix(self.entries) is not None

    def as_integers(self) -> list[list[int]]:
        ints = exact.integer_matrix(self.entries)
        if ints is None:
            raise DomainError("Euler Gram matrix is not integral")
        return ints


def euler_gram(classes: Sequence[KClass]) -> EulerGram:
    """G_ab = χ(E_a, E_b), exactly."""
    return EulerGram(tuple(tuple(euler_pairing_exact(a, b) for b in classes) for a in classes))
