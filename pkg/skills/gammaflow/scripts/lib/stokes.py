"""Asymptotic bases near z = 0, Stokes and central connection matrices, K-class
identification, flat-section SODs and forward checks of the gluing data.

An asymptotic basis y_i^φ is stored as constant coordinates a_i in a flat
reference frame F(z): y_i = F(z) a_i. The a_i are fixed by matching against the
formal solution e^{−u_i/z}(Ψ_i + R_1 z + …) at a small radius: along the ray
where channel j dominates channel i most strongly inside the sector
|arg z − φ| < π/2 + margin/2, the j-th component of y_i must vanish, and along
arg z = φ the i-th component is normalized to 1.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Callable, Sequence

from . import exact, fanout, log
from .charclasses import KClass, euler_pairing_exact
from .errors import DomainError, TruncationError, UnsupportedError
from .numerics import (
    Arc,
    BranchedValue,
    FlatSystem,
    PrecisionContext,
    Ray,
    diag,
    max_abs,
    mp_context,
    ode_integrate,
    to_mp,
)
from .quantum import QuantumAlgebra, admissible_phase, order_eigenvalues, spectrum_of_matrix
from .sections import framing_vector, fundamental_solution_inverse
from .spaces import Space

DEFAULT_MATCH_DIGITS = 20
MIN_ASYMPTOTIC_ORDER = 3
MAX_ASYMPTOTIC_ORDER = 200
MATCH_SHRINK = Fraction(4, 5)
MAX_MATCH_SHRINKS = 10
GUARD_DIGITS = 10
INTEGER_TOL = "1e-4"
TRIANGULAR_TOL = "1e-6"

FrameFn = Callable[[BranchedValue, PrecisionContext], Any]


def _log(msg: str) -> None:
    log.source_log("Stokes", msg)


def _rebase(ctx, m):
    return ctx.matrix([[ctx.convert(m[i, j]) for j in range(m.cols)] for i in range(m.rows)])


# ---------------------------------------------------------------------------
# Connection germs
# ---------------------------------------------------------------------------

@dataclass(frozen=True, eq=False)
class ConnectionGerm:
    """The connection z∂_z − (1/z)E⋆ + μ at one parameter, with a flat reference frame.

    ``frame_fn(z, pc)`` returns a fundamental matrix of flat sections on the
    universal cover; ``radius_bound`` bounds the spectral radius of E⋆ and
    drives the precision estimates.
    """

    name: str
    mu: tuple[Fraction, ...]
    pairing: tuple[tuple[Fraction, ...], ...]
    unit_index: int
    euler_fn: Callable[[PrecisionContext], Any]
    frame_fn: FrameFn
    radius_bound: float
    space: Space | None = None
    t: BranchedValue | None = None

    @property
    def dim(self) -> int:
        return len(self.mu)

    def euler(self, pc: PrecisionContext):
        return self.euler_fn(pc)

    def frame(self, z: BranchedValue, pc: PrecisionContext):
        return self.frame_fn(z, pc)

    def system(self, pc: PrecisionContext) -> FlatSystem:
        return FlatSystem(self.euler(pc), self.mu)

    def pairing_matrix(self, ctx):
        return ctx.matrix([[to_mp(ctx, v) for v in row] for row in self.pairing])

    def digits_for(self, abs_z: Any, target: int) -> int:
        """Digits keeping ``target`` significant digits through the e^{2T/|z|} cancellation."""
        return target + GUARD_DIGITS + int(math.ceil(4 * self.radius_bound / (float(abs_z) * math.log(10))))

    def framing_columns(self, classes: Sequence[KClass], pc: PrecisionContext):
        if self.space is None:
            raise UnsupportedError(f"{self.name}: no Γ̂-framing available (no J-function)")
        ctx = pc.mp
        cols = [framing_vector(self.space, v, pc).coeffs for v in classes]
        return ctx.matrix([[cols[k][a] for k in range(len(classes))] for a in range(self.dim)])


def space_germ(space: Space, t: BranchedValue | None = None) -> ConnectionGerm:
    """Germ at τ = c₁ log t with the J-derived frame L z^{−μ} z^{c₁}."""
    qa = space.require_quantum()
    space.require_j_function()
    t = t or BranchedValue(1)

    def euler_fn(pc: PrecisionContext):
        return qa.euler_matrix(space.q_of_t(t, pc.mp), pc)

    def frame_fn(z: BranchedValue, pc: PrecisionContext):
        return fundamental_solution_inverse(space, t, z, pc, guard=False).standard_frame()

    bound = float(space.spectral_bound(t.abs_z, mp_context(30)))
    alg = space.algebra
    return ConnectionGerm(
        f"{space.name}@t={t.describe(mp_context(15))}",
        alg.mu_diagonal(),
        tuple(tuple(r) for r in alg.pairing_rows()),
        alg.unit_index,
        euler_fn,
        frame_fn,
        bound,
        space,
        t,
    )


def ode_frame(euler_fn: Callable[[PrecisionContext], Any], mu: Sequence[Fraction]) -> FrameFn:
    """Flat frame normalized to the identity at z = 1, continued by ODE along the unit arc then radially."""

    def frame_fn(z: BranchedValue, pc: PrecisionContext):
        ctx = pc.mp
        system = FlatSystem(euler_fn(pc), tuple(mu))
        theta = z.arg(ctx)
        start = BranchedValue(1, 0, Fraction(0), ctx.eye(len(mu)))
        end = ode_integrate(system, Arc(sweep=theta), start, pc).end
        r = to_mp(ctx, z.abs_z)
        if r != 1:
            end = ode_integrate(system, Ray(1, r), BranchedValue(1, theta, Fraction(0), end.value), pc).end
        return end.value

    return frame_fn


def quantum_germ(qa: QuantumAlgebra, q: Sequence[Any]) -> ConnectionGerm:
    """Germ for user quantum data; the reference frame comes from ODE continuation."""

    def euler_fn(pc: PrecisionContext):
        return qa.euler_matrix(q, pc)

    spec = spectrum_of_matrix(euler_fn(PrecisionContext(30)), PrecisionContext(30))
    alg = qa.base
    return ConnectionGerm(
        f"{qa.name}@q={list(q)}",
        alg.mu_diagonal(),
        tuple(tuple(r) for r in alg.pairing_rows()),
        alg.unit_index,
        euler_fn,
        ode_frame(euler_fn, alg.mu_diagonal()),
        max(float(spec.T), 1e-6),
    )


def rank_one_germ(u: Any) -> ConnectionGerm:
    """Rank-1 germ E⋆ = u, μ = 0: the flat section is e^{−u/z}."""

    def euler_fn(pc: PrecisionContext):
        return pc.mp.matrix([[to_mp(pc.mp, u)]])

    def frame_fn(z: BranchedValue, pc: PrecisionContext):
        ctx = pc.mp
        return ctx.matrix([[ctx.exp(-to_mp(ctx, u) / z.point(ctx))]])

    return ConnectionGerm(
        f"rank1(u={u})", (Fraction(0),), ((Fraction(1),),), 0, euler_fn, frame_fn,
        max(abs(complex(u)), 1e-6),
    )


# ---------------------------------------------------------------------------
# Formal solutions
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FormalData:
    """Eigenvalues u_i with normalized idempotents Ψ_i and G_ab = (Ψ_a, μΨ_b)."""

    values: tuple
    psi: tuple  # Ψ_i as tuples of coefficients
    G: Any
    sign_rules: tuple[str, ...]
    digits: int

    @property
    def dim(self) -> int:
        return len(self.values)

    def psi_matrix(self, ctx):
        n = self.dim
        return ctx.matrix([[ctx.convert(self.psi[j][i]) for j in range(n)] for i in range(n)])


def _fix_sign(v, unit_index: int, ctx, tol) -> tuple[Any, str]:
    """Sign making the degree-0 component's real part positive, else the first component with a nonzero real part."""
    lead = ctx.re(v[unit_index])
    if abs(lead) > tol:
        return (v if lead > 0 else -v), "degree-0 real part > 0"
    for k in range(v.rows):
        re = ctx.re(v[k])
        if abs(re) > tol:
            return (v if re > 0 else -v), f"component {k} real part > 0"
    return v, "unnormalized"


def idempotent_data(germ: ConnectionGerm, pc: PrecisionContext) -> FormalData:
    ctx = pc.mp
    spec = spectrum_of_matrix(germ.euler(pc), pc)
    if not spec.distinct:
        rep = [(v, m) for v, m in zip(spec.values, spec.multiplicities) if m > 1][0]
        raise UnsupportedError(
            f"{germ.name}: repeated eigenvalue {ctx.nstr(rep[0], 8)} (multiplicity {rep[1]}); "
            "asymptotic bases need distinct eigenvalues"
        )
    pairing = germ.pairing_matrix(ctx)
    tol = pc.eps(pc.digits // 2)
    psis, rules = [], []
    for vec in spec.eigen.vectors:
        v = ctx.matrix(list(vec))
        norm2 = (v.T * pairing * v)[0, 0]
        if abs(norm2) <= tol:
            raise UnsupportedError(f"{germ.name}: isotropic eigenvector, the point is not semisimple")
        v = v / ctx.sqrt(norm2)
        v, rule = _fix_sign(v, germ.unit_index, ctx, tol)
        psis.append(tuple(v[i] for i in range(v.rows)))
        rules.append(rule)
    n = germ.dim
    psi = ctx.matrix([[psis[j][i] for j in range(n)] for i in range(n)])
    G = psi.T * pairing * diag(ctx, germ.mu) * psi
    return FormalData(tuple(spec.eigen.values), tuple(psis), G, tuple(rules), pc.digits)


def formal_solution_coefficients(data: FormalData, i: int, order: int, ctx) -> list[list[Any]]:
    """r_0 … r_order in the Ψ-basis for the formal solution e^{−u_i/z} Σ_k (Σ_b r_{k,b} Ψ_b) z^k.

    (u_j − u_i) r_{k,j} = Σ_b G_jb r_{k−1,b} + (k−1) r_{k−1,j} for j ≠ i and
    r_{k,i} = −(1/k) Σ_{b≠i} G_ib r_{k,b}.
    """
    n = data.dim
    u = [ctx.convert(x) for x in data.values]
    G = data.G
    out = [[ctx.one if b == i else ctx.zero for b in range(n)]]
    for k in range(1, order + 1):
        prev = out[-1]
        cur = [ctx.zero] * n
        for j in range(n):
            if j == i:
                continue
            acc = (k - 1) * prev[j]
            for b in range(n):
                acc += ctx.convert(G[j, b]) * prev[b]
            cur[j] = acc / (u[j] - u[i])
        cur[i] = -sum((ctx.convert(G[i, b]) * cur[b] for b in range(n) if b != i), ctx.zero) / k
        out.append(cur)
    return out


def _formal_columns(data: FormalData, z, ctx, min_order: int = MIN_ASYMPTOTIC_ORDER):
    """Matrix with columns Σ_{k≤m_i} f_{i,k} z^k, each optimally truncated, and the orders m_i."""
    n = data.dim
    psi = data.psi_matrix(ctx)
    absz = abs(z)
    cols, orders = [], []
    for i in range(n):
        coeffs = formal_solution_coefficients(data, i, MAX_ASYMPTOTIC_ORDER, ctx)
        sizes = []
        best_k, best = 0, None
        for k, r in enumerate(coeffs):
            size = max(abs(x) for x in r) * absz ** k
            sizes.append(size)
            if k and (best is None or size < best):
                best_k, best = k, size
            if best is not None and k > best_k + 5 and size > 10 * best:
                break
        m = max(best_k - 1, min_order)
        total = [ctx.zero] * n
        zk = ctx.one
        for k in range(m + 1):
            r = coeffs[k]
            for a in range(n):
                total[a] += zk * sum((psi[a, b] * r[b] for b in range(n)), ctx.zero)
            zk *= z
        cols.append(total)
        orders.append(m)
    mat = ctx.matrix([[cols[j][a] for j in range(n)] for a in range(n)])
    return mat, orders


# ---------------------------------------------------------------------------
# Asymptotic basis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticBasis:
    germ: ConnectionGerm
    phi: Any
    margin: Any
    data: FormalData
    coefficients: Any  # columns a_i: y_i = F(z) a_i
    r_match: Any
    orders: tuple[int, ...]
    digits: int
    target_digits: int
    match_error: Any
    residual_curve: tuple = field(default=())

    @property
    def values(self) -> tuple:
        return self.data.values

    @property
    def dim(self) -> int:
        return self.data.dim

    def order(self) -> list[int]:
        """Indices sorted by Im(e^{−iφ}u) descending (ties: Re descending, then index)."""
        return order_eigenvalues(self.values, self.phi, PrecisionContext(self.digits))

    def precision_at(self, z: BranchedValue) -> PrecisionContext:
        need = self.germ.digits_for(z.abs_z, self.target_digits)
        return PrecisionContext(max(self.digits, need))

    def evaluate(self, z: BranchedValue):
        """Matrix whose columns are y_i(z), on the branch carried by z."""
        pc = self.precision_at(z)
        ctx = pc.mp
        return self.germ.frame(z, pc) * _rebase(ctx, self.coefficients)

    def deviation(self, i: int, z: BranchedValue):
        """‖e^{u_i/z} y_i(z) − Ψ_i‖ (max norm)."""
        pc = self.precision_at(z)
        ctx = pc.mp
        y = self.evaluate(z)
        w = ctx.exp(ctx.convert(self.values[i]) / z.point(ctx))
        return max(abs(w * y[a, i] - ctx.convert(self.data.psi[i][a])) for a in range(self.dim))

    def formal_deviation(self, i: int, z: BranchedValue):
        """‖e^{u_i/z} y_i(z) − (optimally truncated formal series)‖."""
        pc = self.precision_at(z)
        ctx = pc.mp
        y = self.evaluate(z)
        zp = z.point(ctx)
        formal, _ = _formal_columns(self.data, zp, ctx)
        w = ctx.exp(ctx.convert(self.values[i]) / zp)
        return max(abs(w * y[a, i] - formal[a, i]) for a in range(self.dim))


def _wrap(ctx, x):
    two_pi = 2 * ctx.pi
    x = x % two_pi
    return x - two_pi if x > ctx.pi else x


def _match(germ: ConnectionGerm, data: FormalData, phi, margin, r, pc: PrecisionContext, workers: int):
    ctx = pc.mp
    n = germ.dim
    half = ctx.pi / 2 + margin / 2
    u = [ctx.convert(x) for x in data.values]
    angles: list[Any] = [phi]
    where: dict[tuple[int, int], int] = {}
    for i in range(n):
        for j in range(n):
            if i == j:
                continue
            delta = _wrap(ctx, ctx.arg(u[i] - u[j]) - phi)
            theta = phi + max(-half, min(half, delta))
            for k, a in enumerate(angles):
                if abs(a - theta) <= pc.eps(5):
                    where[(i, j)] = k
                    break
            else:
                where[(i, j)] = len(angles)
                angles.append(theta)

    def reduced(theta):
        lctx = pc.mp
        z = BranchedValue(r, theta)
        frame = germ.frame(z, pc)
        formal, orders = _formal_columns(data, z.point(lctx), lctx)
        return lctx.inverse(formal) * frame, orders, z.point(lctx)

    results = fanout.map_ordered(reduced, angles, workers=workers)
    q0, orders0, z0 = results[0]
    coeffs = ctx.zeros(n, n)
    for i in range(n):
        a = ctx.zeros(n, n)
        b = ctx.zeros(n, 1)
        for j in range(n):
            if j == i:
                continue
            q = results[where[(i, j)]][0]
            scale = max(abs(q[j, c]) for c in range(n))
            for c in range(n):
                a[j, c] = q[j, c] / scale
        w = ctx.exp(u[i] / z0)
        for c in range(n):
            a[i, c] = w * q0[i, c]
        b[i] = 1
        sol = ctx.lu_solve(a, b)
        for c in range(n):
            coeffs[c, i] = sol[c]
    return coeffs, tuple(orders0)


def eigenvalue_gaps(values: Sequence[Any]) -> tuple[Any, Any]:
    """(largest, smallest) |u_i − u_j| over index pairs i ≠ j; needs at least two values."""
    if len(values) < 2:
        raise DomainError("eigenvalue gaps need at least two eigenvalues")
    diffs = [abs(values[i] - values[j]) for i in range(len(values)) for j in range(len(values)) if i != j]
    return max(diffs), min(diffs)


def asymptotic_basis_for(
    germ: ConnectionGerm,
    pc: PrecisionContext,
    phi: Any = None,
    *,
    match_digits: int = DEFAULT_MATCH_DIGITS,
    workers: int = 1,
    r_match: Any = None,
) -> AsymptoticBasis:
    """Asymptotic basis y^φ of a germ with distinct eigenvalues.

    Without ``r_match`` the matching radius starts at (diam + sep)/(match_digits·ln 10)
    and shrinks by 4/5 until two consecutive matchings agree to 10^{2−match_digits}.

    Args:
        germ: Connection germ at z = 0; its Euler matrix must have a distinct spectrum.
        pc: Working precision. Matching may raise the digits further.
        phi: Phase of the sector. ``None`` picks the most admissible one.
        match_digits: Digits the truncated formal solutions must reach at the match radius.
        workers: Threads used to shoot the columns.
        r_match: Match once at this radius, skipping the shrinking search.

    Returns:
        The matched ``AsymptoticBasis``. A fixed ``r_match`` leaves ``match_error`` at zero
        and the residual curve empty.

    Raises:
        DomainError: ``phi`` is not admissible, or ``r_match`` is not positive.
        TruncationError: the shrinking search did not settle.
    """
    ctx = pc.mp
    spec = spectrum_of_matrix(germ.euler(pc), pc)
    choice = admissible_phase(spec, pc, phi)
    if not choice.admissible:
        raise DomainError(
            f"phase {ctx.nstr(choice.phi, 10)} is not admissible for {germ.name} "
            f"(margin {ctx.nstr(choice.margin, 5)})"
        )
    phi, margin = choice.phi, min(choice.margin, ctx.pi / 2)
    values = spec.values
    n = len(values)
    if r_match is not None:
        r = to_mp(ctx, r_match)
        if not r > 0:
            raise DomainError(f"matching radius must be positive, got {ctx.nstr(r, 5)}")
        work = PrecisionContext(max(pc.digits, germ.digits_for(r, match_digits)))
        data = idempotent_data(germ, work)
        coeffs, orders = _match(germ, data, to_mp(work.mp, phi), to_mp(work.mp, margin), to_mp(work.mp, r), work, workers)
        return AsymptoticBasis(germ, phi, margin, data, coeffs, r, orders, work.digits, match_digits, ctx.zero)
    if n == 1 or not spec.distinct:
        r = ctx.one
        data = idempotent_data(germ, pc)
        coeffs, orders = _match(germ, data, phi, margin, r, pc, workers)
        return AsymptoticBasis(germ, phi, margin, data, coeffs, r, orders, pc.digits, match_digits, ctx.zero)

    diam, sep = eigenvalue_gaps(values)
    r = (diam + sep) / (match_digits * ctx.ln10)
    tol = ctx.mpf(10) ** (2 - match_digits)
    prev = None
    curve = []
    for attempt in range(MAX_MATCH_SHRINKS + 1):
        work = PrecisionContext(max(pc.digits, germ.digits_for(r, match_digits)))
        data = idempotent_data(germ, work)
        coeffs, orders = _match(germ, data, to_mp(work.mp, phi), to_mp(work.mp, margin), to_mp(work.mp, r), work, workers)
        if prev is not None:
            wctx = work.mp
            old = _rebase(wctx, prev[1])
            diff = max_abs(coeffs - old) / max_abs(coeffs)
            curve.append((ctx.nstr(r, 6), ctx.nstr(diff, 4)))
            if diff <= tol:
                log.debug(f"{germ.name}: matched at r={ctx.nstr(r, 5)} ({work.digits} digits), change {ctx.nstr(diff, 3)}")
                return AsymptoticBasis(
                    germ, phi, margin, data, coeffs, r, orders, work.digits, match_digits, diff, tuple(curve)
                )
            _log(f"{germ.name}: matching moved by {ctx.nstr(diff, 3)} at r={ctx.nstr(r, 5)}, shrinking")
        prev = (r, coeffs)
        r = r * MATCH_SHRINK.numerator / MATCH_SHRINK.denominator
    raise TruncationError(
        f"{germ.name}: asymptotic matching did not settle",
        {"residual_curve": curve, "phase": ctx.nstr(phi, 10)},
    )


def asymptotic_basis(
    space: Space,
    pc: PrecisionContext,
    phi: Any = None,
    *,
    t: BranchedValue | None = None,
    match_digits: int = DEFAULT_MATCH_DIGITS,
    workers: int = 1,
) -> AsymptoticBasis:
    return asymptotic_basis_for(space_germ(space, t), pc, phi, match_digits=match_digits, workers=workers)


def shoot_from_match(basis: AsymptoticBasis, i: int, r_to: Any = 1) -> list[tuple[Any, Any]]:
    """Continue y_i outward from r_match along arg φ by ODE; relative gap to F(z)a_i per recorded step."""
    pc = PrecisionContext(basis.digits)
    ctx = pc.mp
    start_z = BranchedValue(basis.r_match, basis.phi)
    y0 = basis.evaluate(start_z)
    col = ctx.matrix([ctx.convert(y0[a, i]) for a in range(basis.dim)])
    path = ode_integrate(
        basis.germ.system(pc), Ray(basis.r_match, r_to), start_z.with_value(col), pc, record=True
    )
    curve = []
    for point in path.points[1::max(1, len(path.points) // 8)]:
        direct = basis.evaluate(BranchedValue(point.abs_z, basis.phi))
        ref = ctx.matrix([ctx.convert(direct[a, i]) for a in range(basis.dim)])
        gap = max_abs(point.value - ref) / max_abs(ref)
        curve.append((point.abs_z, gap))
    return curve


# ---------------------------------------------------------------------------
# Stokes matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class StokesResult:
    phi: Any
    values: tuple  # eigenvalues in the Im(e^{−iφ}u)-descending order
    order: tuple[int, ...]  # canonical indices in that order
    raw: Any
    integer: list[list[int]] | None
    rounding_error: Any
    unitriangular: bool
    triangular_error: Any


def _nearest_permutation(values: Sequence[Any], other: Sequence[Any]) -> list[int]:
    perm = []
    for v in values:
        k = min(range(len(other)), key=lambda j: abs(other[j] - v))
        if k in perm:
            raise DomainError("eigenvalues of the two bases do not correspond")
        perm.append(k)
    return perm


def _round(raw, ctx) -> tuple[list[list[int]], Any]:
    n = raw.rows
    ints = [[int(ctx.nint(ctx.re(raw[i, j]))) for j in range(n)] for i in range(n)]
    err = max(abs(raw[i, j] - ints[i][j]) for i in range(n) for j in range(n))
    return ints, err


def _triangularity(raw, values, phi, ctx) -> tuple[bool, Any]:
    n = raw.rows
    rot = ctx.expj(-phi)
    keys = [ctx.im(rot * v) for v in values]
    tol = ctx.mpf(TRIANGULAR_TOL)
    err = max(abs(raw[i, i] - 1) for i in range(n))
    for i in range(n):
        for j in range(n):
            if i != j and keys[i] <= keys[j] + tol:
                err = max(err, abs(raw[i, j]))
    return err < tol, err


def _finish_stokes(raw_canon, basis: AsymptoticBasis, ctx) -> StokesResult:
    order = basis.order()
    n = basis.dim
    raw = ctx.matrix([[raw_canon[order[a], order[b]] for b in range(n)] for a in range(n)])
    values = tuple(ctx.convert(basis.values[k]) for k in order)
    ints, err = _round(raw, ctx)
    if err > ctx.mpf(INTEGER_TOL):
        _log(f"Stokes entries are {ctx.nstr(err, 3)} away from integers; returning the raw matrix")
        ints = None
    tri, tri_err = _triangularity(raw, values, to_mp(ctx, basis.phi), ctx)
    return StokesResult(basis.phi, values, tuple(order), raw, ints, err, tri, tri_err)


def stokes_point(basis: AsymptoticBasis) -> BranchedValue:
    """|z| = 1 on arg φ + π/2, inside both opposite sectors."""
    ctx = mp_context(basis.digits)
    return BranchedValue(1, to_mp(ctx, basis.phi) + ctx.pi / 2)


def stokes_matrix(basis: AsymptoticBasis, opposite: AsymptoticBasis) -> StokesResult:
    """S with y_j^φ = Σ_i y_i^{φ+π} S_ij, solved at arg z = φ + π/2."""
    z = stokes_point(basis)
    pc = PrecisionContext(max(basis.digits, opposite.digits))
    ctx = pc.mp
    y1 = _rebase(ctx, basis.evaluate(z))
    y2 = _rebase(ctx, opposite.evaluate(z))
    perm = _nearest_permutation([ctx.convert(v) for v in basis.values], [ctx.convert(v) for v in opposite.values])
    n = basis.dim
    y2 = ctx.matrix([[y2[a, perm[j]] for j in range(n)] for a in range(n)])
    return _finish_stokes(ctx.inverse(y2) * y1, basis, ctx)


def stokes_from_pairing(basis: AsymptoticBasis) -> StokesResult:
    """S_ij = [y_i, y_j) = (y_i(e^{−πi}z), y_j(z)) on the same basis."""
    z = stokes_point(basis)
    pc = PrecisionContext(basis.digits)
    ctx = pc.mp
    here = _rebase(ctx, basis.evaluate(z))
    there = _rebase(ctx, basis.evaluate(z.rotated(-1)))
    return _finish_stokes(there.T * basis.germ.pairing_matrix(ctx) * here, basis, ctx)


def opposite_basis(basis: AsymptoticBasis, half_turns: int = 1, *, workers: int = 1) -> AsymptoticBasis:
    ctx = mp_context(basis.digits)
    return asymptotic_basis_for(
        basis.germ,
        PrecisionContext(basis.digits),
        to_mp(ctx, basis.phi) + half_turns * ctx.pi,
        match_digits=basis.target_digits,
        workers=workers,
    )


# ---------------------------------------------------------------------------
# Identification with the Γ̂-framing
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Identification:
    classes: tuple[KClass, ...] | None  # in the Im(e^{−iφ}u)-descending order
    order: tuple[int, ...]
    central_connection: Any  # column i: coordinates of y_i in the K-basis framing sections
    rounding_error: Any
    residual: Any
    self_pairings: tuple | None
    gram: list[list[int]] | None

    @property
    def conclusive(self) -> bool:
        return self.classes is not None and all(c == 1 for c in self.self_pairings or ())


def sample_ray(basis: AsymptoticBasis, count: int, arg_offset: Any = 0, r_lo: Any = "0.5", r_hi: Any = "1.5") -> list[BranchedValue]:
    ctx = mp_context(basis.digits)
    lo, hi = ctx.mpf(r_lo), ctx.mpf(r_hi)
    theta = to_mp(ctx, basis.phi) + to_mp(ctx, arg_offset)
    if count == 1:
        return [BranchedValue(lo, theta)]
    return [BranchedValue(lo + (hi - lo) * k / (count - 1), theta) for k in range(count)]


def identify_K_classes(basis: AsymptoticBasis, samples: int | None = None) -> Identification:
    """Least-squares coordinates of each y_i in the framing sections s(K-basis) over ≥ 2N points on arg φ."""
    space = basis.germ.space
    if space is None:
        raise UnsupportedError(f"{basis.germ.name}: identification needs a Γ̂-framing")
    n = basis.dim
    pc = PrecisionContext(basis.digits)
    ctx = pc.mp
    lattice = space.lattice
    basis_classes = [lattice.basis(k) for k in range(lattice.rank)]
    points = sample_ray(basis, max(samples or 0, 2 * n))
    rows = n * len(points)
    a = ctx.zeros(rows, lattice.rank)
    bs = ctx.zeros(rows, n)
    for p, z in enumerate(points):
        zpc = basis.precision_at(z)
        frame = _rebase(ctx, basis.germ.frame(z, zpc))
        sect = frame * basis.germ.framing_columns(basis_classes, pc)
        y = _rebase(ctx, basis.evaluate(z))
        for r in range(n):
            for k in range(lattice.rank):
                a[p * n + r, k] = sect[r, k]
            for i in range(n):
                bs[p * n + r, i] = y[r, i]
    normal = a.H * a
    coeffs = ctx.zeros(lattice.rank, n)
    for i in range(n):
        col = ctx.lu_solve(normal, a.H * ctx.matrix([bs[r, i] for r in range(rows)]))
        for k in range(lattice.rank):
            coeffs[k, i] = col[k]
    order = basis.order()
    central = ctx.matrix([[coeffs[k, order[i]] for i in range(n)] for k in range(lattice.rank)])
    ints = [[int(ctx.nint(ctx.re(central[k, i]))) for i in range(n)] for k in range(lattice.rank)]
    rounding = max(abs(central[k, i] - ints[k][i]) for k in range(lattice.rank) for i in range(n))
    fitted = a * ctx.matrix(ints)
    target = ctx.matrix([[bs[r, order[i]] for i in range(n)] for r in range(rows)])
    residual = max_abs(fitted - target) / max_abs(target)

    if rounding > ctx.mpf(INTEGER_TOL):
        _log(f"K-class coordinates are {ctx.nstr(rounding, 3)} from integers; identification inconclusive")
        return Identification(None, tuple(order), central, rounding, residual, None, None)
    classes = tuple(lattice.element([ints[k][i] for k in range(lattice.rank)]) for i in range(n))
    selfs = tuple(euler_pairing_exact(c, c) for c in classes)
    gram = [[int(euler_pairing_exact(x, y)) for y in classes] for x in classes]
    return Identification(classes, tuple(order), central, rounding, residual, selfs, gram)


# ---------------------------------------------------------------------------
# Semiorthogonal decomposition of flat sections
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class SODReport:
    pieces: tuple  # (eigenvalue, multiplicity) in the φ-order
    pairings: tuple  # ((u, u'), |[V_u, V_u')|) for Im(e^{−iφ}u) < Im(e^{−iφ}u')
    max_pairing: Any
    lattice_decomposition: bool | None

    @property
    def semiorthogonal(self) -> bool:
        return self.max_pairing < mp_context(30).mpf("1e-8")


def sod_flat_sections(basis: AsymptoticBasis, identification: Identification | None = None) -> SODReport:
    """Group y_i by eigenvalue and check [V_u, V_u') = 0 whenever Im(e^{−iφ}u) < Im(e^{−iφ}u')."""
    pc = PrecisionContext(basis.digits)
    ctx = pc.mp
    z = stokes_point(basis)
    here = _rebase(ctx, basis.evaluate(z))
    there = _rebase(ctx, basis.evaluate(z.rotated(-1)))
    gram = there.T * basis.germ.pairing_matrix(ctx) * here
    rot = ctx.expj(-to_mp(ctx, basis.phi))
    order = basis.order()
    pieces = tuple((ctx.convert(basis.values[k]), 1) for k in order)
    pairings = []
    worst = ctx.zero
    for i in order:
        for j in order:
            if ctx.im(rot * basis.values[i]) < ctx.im(rot * basis.values[j]) - pc.eps(pc.digits // 2):
                value = abs(gram[i, j])
                pairings.append(((ctx.convert(basis.values[i]), ctx.convert(basis.values[j])), value))
                worst = max(worst, value)
    decomposition = None
    if identification is not None and identification.classes is not None:
        cols = [list(c.coeffs) for c in identification.classes]
        rows = [[cols[i][k] for i in range(len(cols))] for k in range(len(cols[0]))]
        decomposition = len(cols) == len(rows) and abs(exact.det(rows)) == 1
    return SODReport(pieces, tuple(pairings), worst, decomposition)


# ---------------------------------------------------------------------------
# Riemann–Hilbert forward checks
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class RHCheck:
    name: str
    residual: Any
    worst_point: str
    passed: bool


@dataclass(frozen=True)
class RHReport:
    checks: tuple[RHCheck, ...]
    gram: list[list[int]] | None
    t_matrix: list[list[int]] | None

    @property
    def passed(self) -> bool:
        return bool(self.checks) and all(c.passed for c in self.checks)


def twist_identities(space: Space, classes: Sequence[KClass]) -> tuple[bool, bool, list[list[int]]]:
    """T = (Gᵀ)^{-1} G against ⊗ω^∨[−n], and T^{-1} against ⊗ω[n], on the basis ``classes``."""
    lattice = space.lattice
    n = len(classes)
    gram = [[euler_pairing_exact(a, b) for b in classes] for a in classes]
    t_mat = exact.matmul(exact.inverse(exact.transpose(gram)), gram)
    coords = [[Fraction(classes[i].coeffs[k]) for i in range(n)] for k in range(lattice.rank)]
    cinv = exact.inverse(coords)

    def in_basis(op) -> list[list[Fraction]]:
        k = [[Fraction(v) for v in row] for row in lattice.operator_matrix(op)]
        return exact.matmul(cinv, exact.matmul(k, coords))

    dual_shift = in_basis(lambda v: space.twist_by_omega_shift(v, -1))
    serre = in_basis(lambda v: space.twist_by_omega_shift(v, 1))
    t_ints = exact.integer_matrix(t_mat)
    return t_mat == dual_shift, exact.inverse(t_mat) == serre, t_ints


def _residual_over(points, fn) -> tuple[Any, str]:
    worst, where = None, ""
    for z in points:
        value = fn(z)
        if worst is None or value > worst:
            worst, where = value, f"|z|={z.abs_z} arg={z.arg(mp_context(15))}"
    return worst, where


def verify_rh_consistency(
    space: Space,
    pc: PrecisionContext,
    phi: Any = None,
    *,
    t: BranchedValue | None = None,
    samples: int = 10,
    tol: Any = "1e-8",
    match_digits: int = DEFAULT_MATCH_DIGITS,
    workers: int = 1,
) -> RHReport:
    """Gluing identities on I (y_i = s(E_i)), D⁺ (y^φ = y^{φ+π}·G) and D⁻ (y^φ = y^{φ−π}·Gᵀ), plus T."""
    basis = asymptotic_basis(space, pc, phi, t=t, match_digits=match_digits, workers=workers)
    plus = opposite_basis(basis, 1, workers=workers)
    minus = opposite_basis(basis, -1, workers=workers)
    ident = identify_K_classes(basis)
    ctx = mp_context(basis.digits)
    limit = ctx.mpf(tol)
    if ident.classes is None:
        return RHReport((RHCheck("identification", ident.rounding_error, "", False),), None, None)
    n = basis.dim
    order = list(ident.order)
    gram = ident.gram

    def ordered(b: AsymptoticBasis, z: BranchedValue):
        y = _rebase(ctx, b.evaluate(z))
        perm = _nearest_permutation([ctx.convert(basis.values[k]) for k in order], [ctx.convert(v) for v in b.values])
        return ctx.matrix([[y[a, perm[j]] for j in range(n)] for a in range(n)])

    phis = basis.germ.framing_columns(list(ident.classes), PrecisionContext(basis.digits))

    def on_i(z: BranchedValue):
        y = ordered(basis, z)
        s = _rebase(ctx, basis.germ.frame(z, basis.precision_at(z))) * phis
        return max_abs(y - s) / max_abs(y)

    g = ctx.matrix(gram)

    def on_plus(z: BranchedValue):
        y = ordered(basis, z)
        return max_abs(y - ordered(plus, z) * g) / max_abs(y)

    def on_minus(z: BranchedValue):
        y = ordered(basis, z)
        return max_abs(y - ordered(minus, z) * g.T) / max_abs(y)

    spread = to_mp(ctx, basis.margin) / 4
    checks = []
    for name, offset, fn in (
        ("gluing over I", 0, on_i),
        ("gluing over D+", ctx.pi / 2, on_plus),
        ("gluing over D-", -ctx.pi / 2, on_minus),
    ):
        pts = []
        for k in range(samples):
            pts.append(sample_ray(basis, samples, offset + spread * (k % 3 - 1))[k])
        residual, where = _residual_over(pts, fn)
        checks.append(RHCheck(name, residual, where, residual < limit))

    dual_ok, serre_ok, t_ints = twist_identities(space, ident.classes)
    checks.append(RHCheck("T = tensor by dual canonical, shifted by -n", ctx.zero if dual_ok else ctx.one, "", dual_ok))
    checks.append(RHCheck("T^-1 = tensor by canonical, shifted by n", ctx.zero if serre_ok else ctx.one, "", serre_ok))
    return RHReport(tuple(checks), gram, t_ints)


def verify_rh_rank_one(u: Any, pc: PrecisionContext, samples: int = 10) -> RHReport:
    """Rank-1 datum: y = e^{−u/z} in every sector and trivial Stokes data."""
    germ = rank_one_germ(u)
    basis = asymptotic_basis_for(germ, pc)
    plus = opposite_basis(basis, 1)
    ctx = mp_context(basis.digits)
    stokes = stokes_matrix(basis, plus)
    checks = [RHCheck("trivial Stokes matrix", abs(stokes.raw[0, 0] - 1), "", abs(stokes.raw[0, 0] - 1) < pc.eps(10))]

    def exact_section(z: BranchedValue):
        y = basis.evaluate(z)[0, 0]
        ref = ctx.exp(-to_mp(ctx, u) / z.point(ctx))
        return abs(y - ref) / abs(ref)

    residual, where = _residual_over(sample_ray(basis, samples), exact_section)
    checks.append(RHCheck("y = exp(-u/z)", residual, where, residual < pc.eps(10)))
    return RHReport(tuple(checks), [[1]], [[1]])


@dataclass(frozen=True)
class FactorizationReport:
    ode_residual: Any
    framing_residual: Any
    passed: bool


def stokes_factorization_check(basis: AsymptoticBasis, stokes: StokesResult, tol: Any = "1e-8") -> FactorizationReport:
    """Y^φ(e^{2πi}z) = Y^φ(z)(Sᵀ)^{-1}S: by ODE around |z| = 1 and by the branch of the reference frame."""
    pc = PrecisionContext(basis.digits)
    ctx = pc.mp
    n = basis.dim
    order = list(stokes.order)
    z0 = BranchedValue(1, to_mp(ctx, basis.phi))
    y = _rebase(ctx, basis.evaluate(z0))
    y0 = ctx.matrix([[y[a, order[j]] for j in range(n)] for a in range(n)])
    s = _rebase(ctx, stokes.raw)
    predicted = y0 * ctx.inverse(s.T) * s
    scale = max_abs(predicted)

    looped = ode_integrate(basis.germ.system(pc), Arc(pi_sweep=Fraction(2)), z0.with_value(y0), pc).end.value
    direct_all = _rebase(ctx, basis.evaluate(z0.rotated(2)))
    direct = ctx.matrix([[direct_all[a, order[j]] for j in range(n)] for a in range(n)])
    ode_res = max_abs(looped - predicted) / scale
    framing_res = max_abs(direct - predicted) / scale
    limit = ctx.mpf(tol)
    return FactorizationReport(ode_res, framing_res, ode_res < limit and framing_res < limit)
