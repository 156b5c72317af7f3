"""Quantitative checks of Gamma conjecture I and the exponential growth law of J."""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Sequence

from . import exact, fanout, log
from .charclasses import KClass, gamma_class
from .errors import DomainError, PrecisionError
from .numerics import BranchedValue, FlatSystem, PrecisionContext, Ray, mp_context, ode_integrate, to_mp
from .quantum import conjecture_O_check, euler_spectrum
from .sections import fundamental_solution_inverse, framing_vector, j_function, required_digits
from .spaces import Space

# Digits kept after the e^{2T/z} cancellation in flat-form evaluations.
FLAT_FORM_KEEP = 15
SMALL_T = "1e-6"


def _log(msg: str) -> None:
    log.source_log("Gamma1", msg)


def fubini_study_distance(a: Sequence[Any], b: Sequence[Any], ctx) -> Any:
    """Angle between the complex lines through a and b (Hermitian coefficient norm)."""
    na = ctx.sqrt(sum(abs(x) ** 2 for x in a))
    nb = ctx.sqrt(sum(abs(x) ** 2 for x in b))
    if not na or not nb:
        raise DomainError("Fubini–Study distance of a zero vector")
    ua = [x / na for x in a]
    ub = [x / nb for x in b]
    c = sum((ctx.conj(x) * y for x, y in zip(ua, ub)), ctx.zero)
    perp = ctx.sqrt(sum(abs(y - c * x) ** 2 for x, y in zip(ua, ub)))
    return ctx.atan2(perp, abs(c))


@dataclass(frozen=True)
class LinearFit:
    coefficients: tuple
    standard_errors: tuple
    residual: Any  # RMS of the fitted residuals


def least_squares(rows: Sequence[Sequence[Any]], rhs: Sequence[Any], ctx) -> LinearFit:
    """Ordinary least squares with standard errors from the residual variance."""
    a = ctx.matrix([list(r) for r in rows])
    b = ctx.matrix(list(rhs))
    m, k = a.rows, a.cols
    if m < k:
        raise DomainError(f"least squares needs at least {k} points, got {m}")
    x, _ = ctx.qr_solve(a, b)
    fitted = a * x
    sq = sum(((fitted[i] - b[i]) ** 2 for i in range(m)), ctx.zero)
    dof = max(m - k, 1)
    cov = ctx.inverse(a.T * a) * (sq / dof)
    errs = tuple(ctx.sqrt(abs(cov[i, i])) for i in range(k))
    return LinearFit(tuple(x[i] for i in range(k)), errs, ctx.sqrt(sq / m))


# ---------------------------------------------------------------------------
# Limit form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ConvergenceTable:
    """Fubini–Study distances d(t) between [J(c₁ log t, 1)] and [Γ̂], with d ≈ c·t^{−α}."""

    space: str
    t_grid: tuple
    distances: tuple
    alpha: Any
    alpha_error: Any
    prefactor: Any
    fit_residual: Any
    limit_ratio: Any  # second/first nonzero coefficient of J at the largest t

    def __post_init__(self) -> None:
        if any(b <= a for a, b in zip(self.t_grid, self.t_grid[1:])):
            raise DomainError("t grid must be strictly increasing")
        if any(d < 0 for d in self.distances):
            raise DomainError("distances must be non-negative")

    @property
    def decreasing(self) -> bool:
        return all(b < a for a, b in zip(self.distances, self.distances[1:]))

    def doubling_ratios(self) -> list[tuple[Any, Any]]:
        """d(2t)/d(t) wherever both t and 2t are on the grid."""
        out = []
        for i, t in enumerate(self.t_grid):
            for j, s in enumerate(self.t_grid):
                if abs(s - 2 * t) <= 1e-9 * t:
                    out.append((t, self.distances[j] / self.distances[i]))
        return out

    def rows(self) -> list[tuple[Any, Any]]:
        return list(zip(self.t_grid, self.distances))


def j_direction(space: Space, t: Any, pc: PrecisionContext) -> tuple:
    """Coefficients of J(c₁ log t, 1) for real t > 0."""
    value = j_function(space, BranchedValue(t), BranchedValue(1), pc).value
    return tuple(value.coeffs)


def gamma1_limit_test(
    space: Space,
    t_grid: Sequence[Any],
    pc: PrecisionContext,
    *,
    workers: int = 1,
) -> ConvergenceTable:
    """Distance from [J(c₁ log t, 1)] to [Γ̂_X] on a grid of real t and the fitted decay order.

    Args:
        space: Space with a closed-form J-function.
        t_grid: At least two real t > 0, strictly increasing.
        pc: Working precision; each grid point runs in its own context.
        workers: Threads for the grid points.

    Returns:
        A ``ConvergenceTable`` with the distances and the fit log d = log c − α log t.

    Raises:
        DomainError: the grid is too short or has a non-positive t.
        UnsupportedError: the space has no closed-form J-function.
    """
    space.require_j_function()
    ctx = pc.mp
    grid = tuple(to_mp(ctx, t) for t in t_grid)
    if len(grid) < 2:
        raise DomainError("the t grid needs at least two points")
    if any(t <= 0 for t in grid):
        raise DomainError("conjecture runs use real t > 0")
    gamma = gamma_class(space.tangent, pc).numeric(pc).coeffs

    def at(t):
        lpc = PrecisionContext(pc.digits)
        coeffs = j_direction(space, t, lpc)
        return coeffs, fubini_study_distance(coeffs, gamma, lpc.mp)

    results = fanout.map_ordered(at, grid, workers=workers)
    distances = tuple(ctx.convert(d) for _, d in results)
    for t, d in zip(grid, distances):
        log.debug(f"{space.name}: t={ctx.nstr(t, 6)} d={ctx.nstr(d, 8)}")

    fit = least_squares([[1, ctx.log(t)] for t in grid], [ctx.log(d) for d in distances], ctx)
    last = results[-1][0]
    nonzero = [c for c in last if abs(c) > 0]
    ratio = nonzero[1] / nonzero[0] if len(nonzero) > 1 else None
    return ConvergenceTable(
        space.name,
        grid,
        distances,
        -fit.coefficients[1],
        fit.standard_errors[1],
        ctx.exp(fit.coefficients[0]),
        fit.residual,
        ratio,
    )


@dataclass(frozen=True)
class SmallTReport:
    t: Any
    distance_to_gamma: Any
    distance_to_top: Any


def small_t_direction(space: Space, pc: PrecisionContext, t: Any = SMALL_T) -> SmallTReport:
    """As t → 0, J(c₁ log t, 1) ≈ e^{c₁ log t} points to the top-degree class, not to [Γ̂]."""
    ctx = pc.mp
    coeffs = j_direction(space, ctx.mpf(t), pc)
    gamma = gamma_class(space.tangent, pc).numeric(pc).coeffs
    top = [int(i == space.algebra.top_index) for i in range(space.algebra.dim)]
    return SmallTReport(
        ctx.mpf(t),
        fubini_study_distance(coeffs, gamma, ctx),
        fubini_study_distance(coeffs, top, ctx),
    )


# ---------------------------------------------------------------------------
# Flat form
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlatFormPoint:
    z: Any
    angle: Any
    digits: int
    method: str


@dataclass(frozen=True)
class FlatFormReport:
    space: str
    bundle: str
    T: Any
    perron: tuple
    exact_perron: bool
    points: tuple[FlatFormPoint, ...]

    @property
    def decreasing(self) -> bool:
        by_z = sorted(self.points, key=lambda p: p.z)
        return all(a.angle < b.angle for a, b in zip(by_z, by_z[1:]))

    @property
    def final_angle(self) -> Any:
        return min(self.points, key=lambda p: p.z).angle

    def rows(self) -> list[tuple[Any, Any]]:
        return [(p.z, p.angle) for p in self.points]


def perron_vector(space: Space, pc: PrecisionContext) -> tuple[Any, tuple, bool]:
    """(T, eigenvector of c₁⋆ at τ = 0 for T, exact?) with the exact nullspace when T is an integer."""
    qa = space.require_quantum()
    ctx = pc.mp
    q = space.q_of_t(BranchedValue(1), ctx)
    spectrum = euler_spectrum(qa, q, pc)
    verdict = conjecture_O_check(spectrum, pc)
    if not verdict.passed:
        raise DomainError(f"{space.name}: {verdict.detail}")
    T = spectrum.T
    candidate = Fraction(int(ctx.nint(T)))
    if abs(T - candidate.numerator) <= pc.eps(pc.digits // 2):
        rows = qa.exact_euler_rows([1] * qa.n_params)
        shifted = [[v - (candidate if i == j else 0) for j, v in enumerate(row)] for i, row in enumerate(rows)]
        kernel = exact.nullspace(shifted)
        if len(kernel) == 1:
            return ctx.mpf(candidate.numerator), tuple(to_mp(ctx, x) for x in kernel[0]), True
    index = min(range(len(spectrum.eigen.values)), key=lambda i: abs(spectrum.eigen.values[i] - T))
    return T, tuple(spectrum.eigen.vectors[index]), False


def smallest_safe_z(space: Space, max_digits: int, keep: int = FLAT_FORM_KEEP) -> float:
    """Smallest |z| at which ``max_digits`` still leave ``keep`` digits after cancellation."""
    ctx = mp_context(30)
    T = space.spectral_bound(1, ctx)
    return float(2 * T / (ctx.ln10 * (max_digits - keep)))


def _flat_section(space: Space, v: KClass, z: Any, pc: PrecisionContext, method: str, start: Any):
    ctx = pc.mp
    one = BranchedValue(1)
    phi = ctx.matrix(list(framing_vector(space, v, pc).coeffs))
    if method == "series":
        frame = fundamental_solution_inverse(space, one, BranchedValue(z), pc, guard=False)
        return frame.standard_frame() * phi
    frame = fundamental_solution_inverse(space, one, BranchedValue(start), pc, guard=False)
    init = BranchedValue(start, 0, Fraction(0), frame.standard_frame() * phi)
    qa = space.require_quantum()
    system = FlatSystem(qa.euler_matrix(space.q_of_t(one, ctx), pc), space.algebra.mu_diagonal())
    return ode_integrate(system, Ray(start, z), init, pc).end.value


def gamma1_flat_form_test(
    space: Space,
    z_grid: Sequence[Any],
    pc: PrecisionContext,
    *,
    bundle: KClass | None = None,
    method: str = "series",
    max_digits: int = 400,
    workers: int = 1,
) -> FlatFormReport:
    """Angle between e^{T/z} s(V)(τ = 0, z) and the Perron eigenvector of c₁⋆₀ for real z ↓ 0.

    The cancellation needs about 2T/(z ln 10) extra digits; each z runs at
    its own boosted precision, refusing when that exceeds ``max_digits``.
    ``method="ode"`` starts from the series at the largest z of the grid and
    continues inward by ODE.
    """
    if method not in ("series", "ode"):
        raise DomainError(f"unknown flat-form method {method!r}")
    space.require_j_function()
    v = bundle or space.line_bundle(*([0] * len(space.hyperplanes)))
    ctx = pc.mp
    zs = tuple(to_mp(ctx, z) for z in z_grid)
    if not zs or any(z <= 0 for z in zs):
        raise DomainError("flat-form runs use real z > 0")
    T, perron, exact_perron = perron_vector(space, pc)
    start = max(zs)

    plan = []
    for z in zs:
        need = max(pc.digits, required_digits(space, BranchedValue(1), min(z, start), FLAT_FORM_KEEP, ctx))
        if need > max_digits:
            raise PrecisionError(
                f"{space.name}: z={ctx.nstr(z, 5)} is below the smallest safe z "
                f"{smallest_safe_z(space, max_digits):.4g} for {max_digits} digits",
                need,
            )
        plan.append((z, need))

    def at(item):
        z, need = item
        lpc = PrecisionContext(need)
        lctx = lpc.mp
        section = _flat_section(space, v, lctx.convert(z), lpc, method, lctx.convert(start))
        scaled = [lctx.exp(lctx.convert(T) / lctx.convert(z)) * section[i] for i in range(section.rows)]
        angle = fubini_study_distance(scaled, [lctx.convert(x) for x in perron], lctx)
        _log(f"{space.name}: z={lctx.nstr(z, 5)} at {need} digits, angle {lctx.nstr(angle, 5)}")
        return FlatFormPoint(z, angle, need, method)

    points = tuple(fanout.map_ordered(at, plan, workers=workers))
    return FlatFormReport(space.name, v.describe(), T, perron, exact_perron, points)


# ---------------------------------------------------------------------------
# Growth law
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AsymptoticFitReport:
    """log‖J(c₁ log t, 1)‖ ≈ log|C| + T t − a log t + b/t."""

    space: str
    T: Any
    T_error: Any
    exponent: Any
    exponent_error: Any
    log_C: Any
    correction: Any
    residual: Any
    spectrum_T: Any
    expected_exponent: Fraction

    @property
    def T_relative_error(self) -> Any:
        return abs(self.T - self.spectrum_T) / self.spectrum_T

    @property
    def exponent_relative_error(self) -> Any:
        return abs(self.exponent - self.expected_exponent.numerator / self.expected_exponent.denominator) / (
            self.expected_exponent.numerator / self.expected_exponent.denominator
        )


def asymptotic_fit(
    space: Space,
    t_grid: Sequence[Any],
    pc: PrecisionContext,
    *,
    workers: int = 1,
) -> AsymptoticFitReport:
    space.require_j_function()
    ctx = pc.mp
    qa = space.require_quantum()
    spectrum = euler_spectrum(qa, space.q_of_t(BranchedValue(1), ctx), pc)
    verdict = conjecture_O_check(spectrum, pc)
    if not verdict.passed:
        raise DomainError(f"{space.name}: {verdict.detail}")
    grid = tuple(to_mp(ctx, t) for t in t_grid)
    if any(t <= 0 for t in grid):
        raise DomainError("conjecture runs use real t > 0")

    def norm_at(t):
        lpc = PrecisionContext(pc.digits)
        coeffs = j_direction(space, t, lpc)
        return lpc.mp.sqrt(sum(abs(c) ** 2 for c in coeffs))

    norms = fanout.map_ordered(norm_at, grid, workers=workers)
    rows = [[1, t, -ctx.log(t), 1 / t] for t in grid]
    fit = least_squares(rows, [ctx.log(ctx.convert(n)) for n in norms], ctx)
    log_c, T, a, b = fit.coefficients
    report = AsymptoticFitReport(
        space.name,
        T,
        fit.standard_errors[1],
        a,
        fit.standard_errors[2],
        log_c,
        b,
        fit.residual,
        spectrum.T,
        Fraction(space.algebra.dim_complex, 2),
    )
    if report.T_relative_error > ctx.mpf("0.01"):
        _log(f"{space.name}: fitted T={ctx.nstr(T, 8)} is off the spectral radius {ctx.nstr(spectrum.T, 8)}")
    return report


def t_spread(values: Sequence[Any]) -> Any:
    """Largest relative deviation between estimates of T from different checks."""
    vals = [abs(v) for v in values]
    ref = max(vals)
    return max(abs(a - b) for a in vals for b in vals) / ref if ref else 0
