"""J-functions, fundamental solutions, Γ̂-framed flat sections and their pairing.

For a product of projective spaces with τ = c₁ log t the J-function factors:
each factor of dimension n contributes

    e^{s h/z} Σ_d e^{s d} / Π_{k=1}^{d} (h + kz)^{n+1},   s = (n+1) log t,

computed as a truncated polynomial in its hyperplane class h. The column
(z∂_s)^i J multiplies the d-th term by (dz + h)^i, and these columns form
L^{-1} in the monomial basis.
"""

from __future__ import annotations

import functools
import itertools
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Callable, Sequence

from . import log
from .charclasses import KClass, euler_gram, gamma_class
from .cohomology import CohClass, tensor_class
from .errors import ConditioningError, DomainError, PrecisionError, TruncationError
from .numerics import (
    BranchedValue,
    PrecisionContext,
    branch_power,
    cauchy_coefficients,
    condition_number,
    diag,
    max_abs,
    to_mp,
)
from .spaces import Space

MAX_SERIES_TERMS = 200_000


def _log(msg: str) -> None:
    log.source_log("Series", msg)


# ---------------------------------------------------------------------------
# Truncated polynomials in a single hyperplane class
# ---------------------------------------------------------------------------

def _pmul(a: list, b: list, n: int, zero) -> list:
    out = [zero] * (n + 1)
    for i, x in enumerate(a):
        if not x:
            continue
        for j in range(n + 1 - i):
            y = b[j]
            if y:
                out[i + j] += x * y
    return out


def _pnorm(a: list):
    return sum(abs(x) for x in a)


@dataclass(frozen=True)
class FactorSeries:
    columns: tuple  # columns[i] = coefficients of e^{sh/z}·Σ_d T_d (dz+h)^i
    terms: int
    tail: Any  # relative tail bound


def _factor_series(n: int, s, z, pc: PrecisionContext, orders: int) -> FactorSeries:
    ctx = pc.mp
    zero = ctx.zero
    eps = pc.series_eps()
    q = ctx.exp(s)
    absq, absz = abs(q), abs(z)
    term = [ctx.one] + [zero] * n
    acc = [[zero] * (n + 1) for _ in range(orders + 1)]
    binoms = [math.comb(n + m, m) for m in range(n + 1)]
    d = 0
    while True:
        base = [d * z, ctx.one] + [zero] * (n - 1) if n >= 1 else [d * z]
        pw = term
        for i in range(orders + 1):
            row = acc[i]
            for m in range(n + 1):
                row[m] += pw[m]
            if i < orders:
                pw = _pmul(pw, base, n, zero)

        k = d + 1
        kz = k * absz
        inv_norm = sum(b / kz ** (n + 1 + m) for m, b in enumerate(binoms))
        growth = ((k * absz + 1) / (d * absz + 1)) ** orders
        rho = absq * inv_norm * growth
        if rho < 0.5:
            a_d = _pnorm(term) * (d * absz + 1) ** orders
            tail = a_d * rho / (1 - rho)
            ref = min(_pnorm(row) for row in acc)
            if ref and tail <= eps * ref:
                break
        if d >= MAX_SERIES_TERMS:
            raise TruncationError(
                "J-series tail bound not reached",
                {"terms": d + 1, "ratio_bound": ctx.nstr(rho, 6), "n": n, "|z|": ctx.nstr(absz, 6)},
            )
        kzc = k * z
        inv = [(-1) ** m * binoms[m] / kzc ** (n + 1 + m) for m in range(n + 1)]
        term = [x * q for x in _pmul(term, inv, n, zero)]
        d += 1

    expo = [ctx.one] + [zero] * n
    factor = s / z
    for m in range(1, n + 1):
        expo[m] = expo[m - 1] * factor / m
    columns = tuple(tuple(_pmul(expo, row, n, zero)) for row in acc)
    return FactorSeries(columns, d + 1, tail / ref)


def _factor_logs(space: Space, t: BranchedValue, ctx, shift: Sequence[int] | None = None) -> list:
    """s_r = (n_r + 1) log t − 2πi·shift_r for each projective factor."""
    lt = t.log(ctx)
    shift = shift or (0,) * len(space.factors)
    if len(shift) != len(space.factors):
        raise DomainError(f"{space.name}: line bundle needs {len(space.factors)} degree(s)")
    return [(n + 1) * lt - 2 * ctx.pi * ctx.j * a for n, a in zip(space.factors, shift)]


def _kron_matrix(ctx, blocks: list[list[list[Any]]], dims: Sequence[int]):
    """Kronecker product of per-factor matrices M_r[m][i], ordered like the Künneth basis."""
    idx = list(itertools.product(*[range(n + 1) for n in dims]))
    size = len(idx)
    out = ctx.zeros(size, size)
    for row, ms in enumerate(idx):
        for col, iis in enumerate(idx):
            val = ctx.one
            for r, (m, i) in enumerate(zip(ms, iis)):
                val *= blocks[r][m][i]
                if not val:
                    break
            out[row, col] = val
    return out


# ---------------------------------------------------------------------------
# Frames
# ---------------------------------------------------------------------------

def series_floor(space: Space, t: BranchedValue, pc: PrecisionContext):
    """Smallest |z| at which L can be formed keeping half the working digits.

    The flat sections cancel terms of relative size e^{2T/|z|}, T = Σ(n_r+1)|t|.
    """
    ctx = pc.mp
    bound = space.spectral_bound(t.abs_z, ctx)
    return 4 * bound / (ctx.ln10 * pc.digits)


def required_digits(space: Space, t: BranchedValue, abs_z: Any, keep: int, ctx) -> int:
    bound = space.spectral_bound(t.abs_z, ctx)
    return int(ctx.ceil(2 * bound / (to_mp(ctx, abs_z) * ctx.ln10))) + keep


@dataclass(frozen=True)
class JValue:
    value: CohClass
    terms: tuple[int, ...]
    tail_bound: Any


@dataclass(frozen=True)
class FlatFrame:
    """L(τ, z)^{-1} (columns (z∂)^i J) and L(τ, z) at one point, with truncation metadata."""

    space: Space
    t: BranchedValue
    z: BranchedValue
    digits: int
    inverse_matrix: Any  # M_J = L^{-1}
    matrix: Any  # L
    terms: tuple[int, ...]
    tail_bound: Any
    cond: Any
    det: Any

    def standard_frame(self):
        """L z^{-μ} z^{c₁}: columns are flat sections."""
        pc = PrecisionContext(self.digits)
        return self.matrix * z_power(self.space, self.z, pc)


def z_power(space: Space, z: BranchedValue, pc: PrecisionContext):
    """z^{-μ} z^{c₁} on the branch carried by z."""
    ctx = pc.mp
    mu = space.algebra.mu_diagonal()
    c1 = space.algebra.multiplication_rows(space.tangent.c1)
    return branch_power(z, diag(ctx, [-m for m in mu]), pc) * branch_power(
        z, ctx.matrix([[to_mp(ctx, v) for v in row] for row in c1]), pc
    )


def fundamental_solution_inverse(
    space: Space,
    t: BranchedValue,
    z: BranchedValue,
    pc: PrecisionContext,
    *,
    guard: bool = True,
    shift: Sequence[int] | None = None,
) -> FlatFrame:
    """Columns (z∂_s)^i J = L^{-1}(e_i) by termwise differentiation, plus L itself.

    With ``guard`` the evaluation refuses |z| below series_floor() and
    matrices with cond > 10^{digits/2}.
    """
    space.require_j_function()
    ctx = pc.mp
    if guard:
        floor = series_floor(space, t, pc)
        if to_mp(ctx, z.abs_z) < floor:
            need = int(ctx.ceil(4 * space.spectral_bound(t.abs_z, ctx) / (to_mp(ctx, z.abs_z) * ctx.ln10)))
            raise PrecisionError(
                f"|z|={ctx.nstr(to_mp(ctx, z.abs_z), 6)} is below the series floor {ctx.nstr(floor, 6)}; "
                "continue by ODE from a safe radius or raise the precision",
                need,
            )
    zv = z.point(ctx)
    blocks = []
    terms = []
    tail = ctx.zero
    for n, s in zip(space.factors, _factor_logs(space, t, ctx, shift)):
        fs = _factor_series(n, s, zv, pc, n)
        blocks.append([[fs.columns[i][m] for i in range(n + 1)] for m in range(n + 1)])
        terms.append(fs.terms)
        tail += fs.tail
    inv = _kron_matrix(ctx, blocks, space.factors)
    det = ctx.det(inv)
    if det == 0:
        raise ConditioningError("fundamental solution is singular", None, "change (t, z)")
    lmat = ctx.inverse(inv)
    cond = condition_number(ctx, inv, lmat)
    if guard and cond > ctx.mpf(10) ** (pc.digits // 2):
        raise ConditioningError(
            f"cond(L^-1) = {ctx.nstr(cond, 5)} exceeds 10^{pc.digits // 2}",
            cond,
            "increase |z|, decrease |t|, or raise the precision",
        )
    log.debug(f"{space.name}: J-series terms {terms}, tail {ctx.nstr(tail, 3)}, cond {ctx.nstr(cond, 3)}")
    return FlatFrame(space, t, z, pc.digits, inv, lmat, tuple(terms), tail, cond, det)


def j_function(space: Space, t: BranchedValue, z: BranchedValue, pc: PrecisionContext) -> JValue:
    """J(c₁ log t, z) = Σ_d t^{(n+1)(d+p/z)} / Π (p+kz)^{n+1}, factorwise for products."""
    space.require_j_function()
    ctx = pc.mp
    zv = z.point(ctx)
    value = None
    terms = []
    tail = ctx.zero
    for n, s, h in zip(space.factors, _factor_logs(space, t, ctx), space.hyperplanes):
        fs = _factor_series(n, s, zv, pc, 0)
        part = h.numeric(pc).power_series(list(fs.columns[0]), pc)
        value = part if value is None else value.cup(part)
        terms.append(fs.terms)
        tail += fs.tail
    return JValue(value, tuple(terms), tail)


def quantum_de_residual(space: Space, t: BranchedValue, z: BranchedValue, pc: PrecisionContext):
    """max_r ‖(z∂_{s_r})^{n_r+1} J − q_r J‖ / ‖J‖, factorwise."""
    space.require_j_function()
    ctx = pc.mp
    zv = z.point(ctx)
    worst = ctx.zero
    for n, s in zip(space.factors, _factor_logs(space, t, ctx)):
        fs = _factor_series(n, s, zv, pc, n + 1)
        q = ctx.exp(s)
        top, base = fs.columns[n + 1], fs.columns[0]
        diff = max(abs(a - q * b) for a, b in zip(top, base))
        scale = max(abs(q * b) for b in base)
        worst = max(worst, diff / scale)
    return worst


# ---------------------------------------------------------------------------
# Framing
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=64)
def _gamma_prefactor(space: Space, digits: int) -> CohClass:
    pc = PrecisionContext(digits)
    ctx = pc.mp
    g = gamma_class(space.tangent, pc)
    return g.scale((2 * ctx.pi) ** (-ctx.mpf(space.dim) / 2))


def framing_vector(space: Space, v: KClass, pc: PrecisionContext) -> CohClass:
    """(2π)^{-n/2} Γ̂_X ∪ (2πi)^{deg/2} ch(V)."""
    ctx = pc.mp
    ch = v.ch.numeric(pc).scale_by_degree(2 * ctx.pi * ctx.j)
    return _gamma_prefactor(space, pc.digits).cup(ch)


def _as_class(space: Space, vec, pc: PrecisionContext) -> CohClass:
    return CohClass(space.algebra, tuple(vec[i] for i in range(space.algebra.dim)), pc.digits)


def framing_section(
    space: Space,
    v: KClass,
    t: BranchedValue,
    z: BranchedValue,
    pc: PrecisionContext,
    *,
    frame: FlatFrame | None = None,
    guard: bool = True,
) -> CohClass:
    """s(V)(τ, z) = L z^{-μ} z^{c₁} Φ(V).

    Args:
        space: Space with a closed-form J-function.
        v: K-class whose framing Φ(V) is transported.
        t: Point τ = c₁ log t of the small parameter space, on its branch.
        z: Point of the z-plane, on its branch.
        pc: Working precision.
        frame: Precomputed fundamental solution at (t, z), reused when several
            classes share the point.
        guard: Refuse points below the series floor or with an ill-conditioned frame.

    Returns:
        The flat section at (t, z) as a cohomology class.

    Raises:
        PrecisionError: ``guard`` is on and |z| is below the series floor.
        ConditioningError: the fundamental solution is singular or too ill-conditioned.
    """
    ctx = pc.mp
    frame = frame or fundamental_solution_inverse(space, t, z, pc, guard=guard)
    phi = ctx.matrix(list(framing_vector(space, v, pc).coeffs))
    return _as_class(space, frame.standard_frame() * phi, pc)


def section_pairing(
    s1: Callable[[BranchedValue], CohClass],
    s2: Callable[[BranchedValue], CohClass],
    z: BranchedValue,
):
    """[s1, s2) = (s1(e^{−πi} z), s2(z)) with the Poincaré pairing."""
    return s1(z.rotated(-1)).pair(s2(z))


@dataclass(frozen=True)
class GramCheck:
    raw: Any  # mpmath matrix of pairings
    expected: list[list[int]]
    max_error: Any


def framing_gram(space: Space, classes: Sequence[KClass], t: BranchedValue, z: BranchedValue, pc: PrecisionContext) -> GramCheck:
    """[s(E_a), s(E_b)) for all pairs, compared with the HRR Gram."""
    ctx = pc.mp
    here = fundamental_solution_inverse(space, t, z, pc)
    there = fundamental_solution_inverse(space, t, z.rotated(-1), pc)
    phis = [ctx.matrix(list(framing_vector(space, v, pc).coeffs)) for v in classes]
    right = [here.standard_frame() * p for p in phis]
    left = [there.standard_frame() * p for p in phis]
    pair = space.algebra.pairing
    n = len(classes)
    raw = ctx.zeros(n, n)
    for a in range(n):
        for b in range(n):
            total = ctx.zero
            for i in range(space.algebra.dim):
                for j in range(space.algebra.dim):
                    if pair[i][j]:
                        total += left[a][i] * right[b][j] * to_mp(ctx, pair[i][j])
            raw[a, b] = total
    expected = euler_gram(classes).as_integers()
    err = max(abs(raw[a, b] - expected[a][b]) for a in range(n) for b in range(n))
    return GramCheck(raw, expected, err)


# ---------------------------------------------------------------------------
# Monodromy
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class MonodromyReport:
    z_loop_residual: Any
    tau_shift_residual: Any
    composed_residual: Any | None
    threshold: Any

    @property
    def passed(self) -> bool:
        checks = [self.z_loop_residual, self.tau_shift_residual]
        if self.composed_residual is not None:
            checks.append(self.composed_residual)
        return all(c < self.threshold for c in checks)


def _relative(a: CohClass, b: CohClass):
    return (a - b).norm() / max(b.norm(), a.norm())


def monodromy_check(
    space: Space,
    v: KClass,
    t: BranchedValue,
    z: BranchedValue,
    pc: PrecisionContext,
    *,
    line: Sequence[int] | None = None,
    composed: bool = False,
) -> MonodromyReport:
    """s(V)(e^{−2πi}z) = s(V⊗ω[n])(z) and s(V)(τ − 2πi c₁(L)) = s(V⊗L)(τ)."""
    line = tuple(line) if line is not None else (1,) * len(space.factors)

    def s(vv: KClass, zz: BranchedValue, shift=None) -> CohClass:
        frame = fundamental_solution_inverse(space, t, zz, pc, shift=shift)
        return framing_section(space, vv, t, zz, pc, frame=frame)

    loop = _relative(s(v, z.rotated(-2)), s(space.twist_by_omega_shift(v), z))
    twisted = space.lattice.tensor(v, space.line_bundle(*line))
    shift = _relative(s(v, z, shift=line), s(twisted, z))

    comp = None
    if composed:
        # k = n+1 loops equal (−1)^{nk} times the τ-shift by c₁(ω^k).
        k = space.dim + 1
        omega_degrees = tuple(-(n + 1) * k for n in space.factors)
        lhs = s(v, z.rotated(-2 * k))
        rhs = s(v, z, shift=omega_degrees).scale((-1) ** (space.dim * k))
        comp = _relative(lhs, rhs)
    return MonodromyReport(loop, shift, comp, pc.eps(25))


def kunneth_residual(
    a: Space,
    b: Space,
    product_space: Space,
    va: KClass,
    vb: KClass,
    t: BranchedValue,
    z: BranchedValue,
    pc: PrecisionContext,
):
    """‖s_{X×Y}(V⊠W) − s_X(V)⊗s_Y(W)‖ relative, at matched (t, z)."""
    sa = framing_section(a, va, t, z, pc)
    sb = framing_section(b, vb, t, z, pc)
    prod_class = product_space.lattice.from_ch(tensor_class(va.ch, vb.ch, product_space.algebra))
    sp = framing_section(product_space, prod_class, t, z, pc)
    return _relative(sp, tensor_class(sa, sb, product_space.algebra))


# ---------------------------------------------------------------------------
# Levelt recursion
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class LeveltReport:
    orders: int
    kernel_dimension: int
    max_deviation: Any | None


def levelt_kernel_dimension(mu: Sequence[Fraction]) -> int:
    """Number of (k ≥ 1, a, b) with μ_a − μ_b = k: entries the recursion leaves free."""
    return sum(1 for a in mu for b in mu if a - b >= 1 and (a - b).denominator == 1)


def levelt_recursion_check(space: Space, t: BranchedValue, pc: PrecisionContext, orders: int | None = None) -> LeveltReport:
    """Compare the z^{-k} coefficients of the J-derived L with (ad_μ − k)L_k = (E⋆)L_{k−1} − L_{k−1}c₁.

    Kernel entries (μ_a − μ_b = k) are taken from the J-derived coefficients;
    every other entry is produced by the recursion and compared.
    """
    mu = space.algebra.mu_diagonal()
    kernel = levelt_kernel_dimension(mu)
    if not space.has_j_function:
        return LeveltReport(0, kernel, None)
    ctx = pc.mp
    qa = space.require_quantum()
    n = space.algebra.dim
    orders = orders or 2 * space.dim + 2
    euler = qa.euler_matrix(space.q_of_t(t, ctx), pc)
    c1 = ctx.matrix([[to_mp(ctx, v) for v in row] for row in space.algebra.multiplication_rows(space.tangent.c1)])
    samples = max(64, pc.digits + 20)

    def l_of_w(w):
        zb = BranchedValue(1 / abs(w), -ctx.arg(w))
        return fundamental_solution_inverse(space, t, zb, pc, guard=False).matrix

    coeffs = cauchy_coefficients(ctx, l_of_w, ctx.one, orders + 1, samples)
    deviation = max_abs(coeffs[0] - ctx.eye(n))
    prev = ctx.eye(n)
    for k in range(1, orders + 1):
        rhs = euler * prev - prev * c1
        cur = ctx.zeros(n, n)
        for a in range(n):
            for b in range(n):
                gap = to_mp(ctx, mu[a] - mu[b]) - k
                if mu[a] - mu[b] == k:
                    cur[a, b] = coeffs[k][a, b]
                else:
                    cur[a, b] = rhs[a, b] / gap
        deviation = max(deviation, max_abs(cur - coeffs[k]))
        prev = cur
    return LeveltReport(orders, kernel, deviation)
