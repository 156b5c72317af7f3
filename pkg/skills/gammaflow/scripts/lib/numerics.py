"""Configurable-precision arithmetic, constants, matrix helpers and the flat-section ODE integrator.

Every numeric value is an mpmath number owned by the MPContext of a
PrecisionContext. Contexts are cached per thread, so operations stay pure and
safe to call from a worker pool.
"""

from __future__ import annotations

import functools
import threading
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Callable, Sequence

import mpmath

from . import log
from .errors import DomainError, EigenError, IntegrationError

DEFAULT_DIGITS = 50
MIN_DIGITS = 30

# Fraction of the local convergence radius used as a Taylor step.
STEP_RATIO = 0.25
# Hard cap on Taylor terms per step, relative to the working digits.
TAYLOR_TERM_FACTOR = 4
# Halvings allowed before a step is declared underflowed.
MAX_HALVINGS = 30

_local = threading.local()


def _log(msg: str) -> None:
    log.source_log("ODE", msg)


def mp_context(digits: int) -> mpmath.ctx_mp.MPContext:
    """Return this thread's MPContext at the given decimal precision."""
    cache = getattr(_local, "contexts", None)
    if cache is None:
        cache = _local.contexts = {}
    ctx = cache.get(digits)
    if ctx is None:
        ctx = mpmath.MPContext()
        ctx.dps = digits
        cache[digits] = ctx
    return ctx


@dataclass(frozen=True)
class PrecisionContext:
    """Working precision and the tolerances derived from it."""

    digits: int = DEFAULT_DIGITS
    series_tol: float | str | None = None
    ode_tol: float | str | None = None

    def __post_init__(self) -> None:
        if isinstance(self.digits, bool) or not isinstance(self.digits, int):
            raise DomainError(f"digits must be an integer, got {self.digits!r}")
        if self.digits < MIN_DIGITS:
            raise DomainError(f"digits must be >= {MIN_DIGITS}, got {self.digits}")
        for name in ("series_tol", "ode_tol"):
            value = getattr(self, name)
            if value is None:
                continue
            x = self.mp.mpf(value)
            if not x > 0:
                raise DomainError(f"{name} must be positive, got {value!r}")
            if x < self.mp.mpf(10) ** (-self.digits):
                raise DomainError(f"{name}={value!r} is not representable at {self.digits} digits")

    @property
    def mp(self) -> mpmath.ctx_mp.MPContext:
        return mp_context(self.digits)

    def series_eps(self):
        if self.series_tol is not None:
            return self.mp.mpf(self.series_tol)
        return self.mp.mpf(10) ** (2 - self.digits)

    def ode_eps(self):
        if self.ode_tol is not None:
            return self.mp.mpf(self.ode_tol)
        return self.mp.mpf(10) ** (5 - self.digits)

    def eps(self, slack: int = 0):
        """10^(slack - digits): the usual 'zero to working precision' threshold."""
        return self.mp.mpf(10) ** (slack - self.digits)


def to_mp(ctx, value: Any):
    """Promote an exact or foreign number into ctx."""
    if isinstance(value, Fraction):
        return ctx.mpf(value.numerator) / value.denominator
    if isinstance(value, int):
        return ctx.mpf(value)
    return ctx.convert(value)


# ---------------------------------------------------------------------------
# Constants
# ---------------------------------------------------------------------------

@functools.lru_cache(maxsize=None)
def _zeta_cached(digits: int, k: int):
    ctx = mpmath.MPContext()
    ctx.dps = digits + 10
    return ctx.zeta(k)


@functools.lru_cache(maxsize=None)
def _euler_cached(digits: int):
    ctx = mpmath.MPContext()
    ctx.dps = digits + 10
    return +ctx.euler


def zeta_value(k: int, pc: PrecisionContext):
    """ζ(k) for integer k >= 2 at the working precision."""
    if isinstance(k, bool) or not isinstance(k, int) or k < 2:
        raise DomainError(f"zeta_value needs an integer k >= 2, got {k!r}")
    return pc.mp.mpf(_zeta_cached(pc.digits, k))


def euler_gamma(pc: PrecisionContext):
    return pc.mp.mpf(_euler_cached(pc.digits))


def gamma_of_one_plus_nilpotent(x, pc: PrecisionContext, order: int | None = None):
    """Γ(1+x) = exp(−γx + Σ_{k≥2} (−1)^k ζ(k) x^k / k) for a nilpotent class x.

    ``x`` is a CohClass; the series stops at ``order`` (default: the
    algebra's complex dimension, beyond which every power vanishes).
    """
    if not x.is_nilpotent(pc):
        raise DomainError("gamma_of_one_plus_nilpotent needs a class with zero degree-0 part")
    ctx = pc.mp
    top = x.algebra.dim_complex if order is None else order
    coeffs = [ctx.zero, -euler_gamma(pc)]
    for k in range(2, top + 1):
        coeffs.append((-1) ** k * zeta_value(k, pc) / k)
    return x.power_series(coeffs, pc).exp(pc)


# ---------------------------------------------------------------------------
# Branched values
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BranchedValue:
    """A point z = abs_z·e^{i·arg} on the universal cover of C*, optionally with a value.

    The argument is arg_z + π·pi_shift. Keeping rational multiples of π apart
    lets monodromy shifts stay exact at every precision. Nothing is reduced
    modulo 2π.
    """

    abs_z: Any
    arg_z: Any = 0
    pi_shift: Fraction = Fraction(0)
    value: Any = field(default=None, compare=False)

    def __post_init__(self) -> None:
        if not self.abs_z > 0:
            raise DomainError(f"abs_z must be positive, got {self.abs_z!r}")
        object.__setattr__(self, "pi_shift", Fraction(self.pi_shift))

    @classmethod
    def from_pi(cls, abs_z: Any, multiple: Fraction | int | str) -> BranchedValue:
        """Point with argument multiple·π, exact at every precision."""
        return cls(abs_z, 0, Fraction(multiple))

    def arg(self, ctx):
        return to_mp(ctx, self.arg_z) + ctx.pi * to_mp(ctx, self.pi_shift)

    def log(self, ctx):
        return ctx.mpc(ctx.log(to_mp(ctx, self.abs_z)), self.arg(ctx))

    def point(self, ctx):
        return to_mp(ctx, self.abs_z) * ctx.expjpi(to_mp(ctx, self.pi_shift)) * ctx.expj(to_mp(ctx, self.arg_z))

    def rotated(self, half_turns: Fraction | int) -> BranchedValue:
        """Same modulus, argument shifted by half_turns·π (continuously)."""
        return replace(self, pi_shift=self.pi_shift + Fraction(half_turns), value=None)

    def with_value(self, value: Any) -> BranchedValue:
        return replace(self, value=value)

    def describe(self, ctx) -> str:
        return f"|z|={ctx.nstr(to_mp(ctx, self.abs_z), 8)} arg={ctx.nstr(self.arg(ctx), 8)}"


# ---------------------------------------------------------------------------
# Matrix helpers
# ---------------------------------------------------------------------------

def as_matrix(ctx, rows: Sequence[Sequence[Any]]):
    return ctx.matrix([[to_mp(ctx, v) for v in row] for row in rows])


def diag(ctx, entries: Sequence[Any]):
    n = len(entries)
    m = ctx.zeros(n, n)
    for i, v in enumerate(entries):
        m[i, i] = to_mp(ctx, v)
    return m


def max_abs(m) -> Any:
    best = 0
    for i in range(m.rows):
        for j in range(m.cols):
            a = abs(m[i, j])
            if a > best:
                best = a
    return best


def condition_number(ctx, m, inverse=None):
    inv = ctx.inverse(m) if inverse is None else inverse
    return ctx.mnorm(m, 1) * ctx.mnorm(inv, 1)


def branch_power(z: BranchedValue, exponent, pc: PrecisionContext):
    """exp(exponent · log z) with log z = log|z| + i·arg_z.

    Diagonal exponents are exponentiated entrywise, nilpotent ones by their
    finite Taylor polynomial; anything else goes through ctx.expm.
    """
    ctx = pc.mp
    a = exponent if isinstance(exponent, ctx.matrix) else as_matrix(ctx, exponent)
    n = a.rows
    lz = z.log(ctx)
    off_diagonal = any(a[i, j] != 0 for i in range(n) for j in range(n) if i != j)
    if not off_diagonal:
        return diag(ctx, [ctx.exp(a[i, i] * lz) for i in range(n)])
    if max_abs(a ** n) == 0:
        power = ctx.eye(n)
        total = ctx.eye(n)
        scaled = a * lz
        for k in range(1, n + 1):
            power = power * scaled / k
            if max_abs(power) == 0:
                break
            total += power
        return total
    return ctx.expm(a * lz)


@dataclass(frozen=True)
class EigenReport:
    """Eigenpairs with residual certificates and multiplicity clusters."""

    values: tuple
    vectors: tuple  # column vectors as tuples
    residuals: tuple
    clusters: tuple  # (representative value, multiplicity, member indices)


def _descending(ctx, tie):
    """Comparator: real part descending, then imaginary part; parts within ``tie`` count as equal."""

    def compare(a, b) -> int:
        for x, y in ((ctx.re(a[0]), ctx.re(b[0])), (ctx.im(a[0]), ctx.im(b[0]))):
            if abs(x - y) > tie:
                return -1 if x > y else 1
        return 0

    return compare


def eigen_decompose(m, pc: PrecisionContext, *, cluster_tol=None) -> EigenReport:
    ctx = pc.mp
    a = m if isinstance(m, ctx.matrix) else as_matrix(ctx, m)
    n = a.rows
    trace: list[str] = [f"dim={n}", f"digits={pc.digits}"]
    try:
        values, right = ctx.eig(a)
    except Exception as exc:  # mpmath signals non-convergence with bare exceptions
        trace.append(f"{type(exc).__name__}: {exc}")
        raise EigenError("eigensolver failed to converge", trace) from exc

    scale = max(ctx.mnorm(a, 1), ctx.mpf(1))
    items = []
    for j, lam in enumerate(values):
        v = [right[i, j] for i in range(n)]
        vn = max(abs(x) for x in v)
        v = [x / vn for x in v]
        res = max(abs(sum(a[i, k] * v[k] for k in range(n)) - lam * v[i]) for i in range(n))
        items.append((lam, v, res / scale))
    items.sort(key=functools.cmp_to_key(_descending(ctx, pc.eps(5) * scale)))

    worst = max((it[2] for it in items), default=ctx.zero)
    trace.append(f"max residual={ctx.nstr(worst, 5)}")
    if worst > ctx.mpf(10) ** (-pc.digits // 2):
        raise EigenError("eigenpair residuals too large", trace)

    tol = cluster_tol if cluster_tol is not None else ctx.mpf(10) ** (-pc.digits // 3) * scale
    clusters: list[list[int]] = []
    for idx, (lam, _, _) in enumerate(items):
        for group in clusters:
            if abs(items[group[0]][0] - lam) <= tol:
                group.append(idx)
                break
        else:
            clusters.append([idx])
    cluster_rows = tuple(
        (sum((items[i][0] for i in g), ctx.zero) / len(g), len(g), tuple(g)) for g in clusters
    )
    log.debug(f"eigen_decompose: {len(cluster_rows)} clusters, residual {ctx.nstr(worst, 3)}")
    return EigenReport(
        values=tuple(it[0] for it in items),
        vectors=tuple(tuple(it[1]) for it in items),
        residuals=tuple(it[2] for it in items),
        clusters=cluster_rows,
    )


# ---------------------------------------------------------------------------
# Flat-section ODE
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class FlatSystem:
    """The system (z d/dz) s = ((1/z)·M − μ) s, i.e. z² s' = (M − zμ) s."""

    euler: Any  # ctx.matrix of E⋆
    mu: tuple  # diagonal of the grading operator


@dataclass(frozen=True)
class Ray:
    """Radial segment z = r·e^{i·arg(base)} from r_from to r_to."""

    r_from: Any
    r_to: Any

    def __post_init__(self) -> None:
        if not (self.r_from > 0 and self.r_to > 0):
            raise DomainError("ray radii must be positive")


@dataclass(frozen=True)
class Arc:
    """Circular segment at fixed |z| sweeping the argument by sweep (radians or π-multiple)."""

    sweep: Any = 0
    pi_sweep: Fraction = Fraction(0)


@dataclass(frozen=True)
class ODEPath:
    points: tuple  # BranchedValue with values
    error_estimate: Any
    steps: int

    @property
    def end(self) -> BranchedValue:
        return self.points[-1]


def _taylor_step(ctx, system: FlatSystem, z0, w, y0, tol, term_cap, min_terms=0):
    """Advance y from z0 to z0 + w by the local Taylor series.

    At least ``min_terms`` terms are summed, then the series stops after two
    consecutive terms below tol.

    d_k = c_k w^k with z0² (k+1) c_{k+1} = (M − μ z0 − 2 z0 k) c_k − (μ + k − 1) c_{k−1}.
    Returns (y1, tail) or None if the series did not settle within term_cap.
    """
    n = system.euler.rows
    mu = [to_mp(ctx, m) for m in system.mu]
    z2 = z0 * z0
    base = system.euler.copy()
    for i in range(n):
        base[i, i] -= mu[i] * z0
    cols = y0.cols
    prev = ctx.zeros(n, cols)
    cur = y0.copy()
    total = y0.copy()
    scale = max(max_abs(y0), ctx.mpf(10) ** (-ctx.dps))
    small = 0
    for k in range(term_cap):
        nxt = base * cur
        f = -2 * z0 * k
        for i in range(n):
            g = mu[i] + k - 1
            for c in range(cols):
                nxt[i, c] = (nxt[i, c] + f * cur[i, c]) * w - g * prev[i, c] * w * w
        nxt = nxt / (z2 * (k + 1))
        total += nxt
        size = max_abs(nxt)
        if size <= tol * scale:
            small += 1
            if small >= 2 and k + 1 >= min_terms:
                return total, size / scale
        else:
            small = 0
        prev, cur = cur, nxt
    return None


def ode_integrate(
    system: FlatSystem,
    path: Ray | Arc,
    init: BranchedValue,
    pc: PrecisionContext,
    *,
    record: bool = False,
) -> ODEPath:
    """Continue a solution (vector or matrix value on ``init``) along a ray or arc.

    Steps are Taylor expansions about the current point with length
    STEP_RATIO·min(|z|, |z|²/‖M‖); arcs are followed by chords while the
    argument is transported continuously.
    """
    ctx = pc.mp
    if init.value is None:
        raise DomainError("ode_integrate needs an initial value on the BranchedValue")
    y = init.value if isinstance(init.value, ctx.matrix) else ctx.matrix(init.value)
    y = ctx.matrix(y)
    tol = pc.ode_eps() / 10
    term_cap = TAYLOR_TERM_FACTOR * pc.digits + 50
    # one more term for every halving of tol
    min_terms = min(int(ctx.ceil(-ctx.log(tol, 2))), term_cap - 1)
    norm_m = max(ctx.mnorm(system.euler, 1), ctx.mpf(10) ** (-pc.digits))

    r = to_mp(ctx, init.abs_z)
    theta0 = init.arg(ctx)
    points = [init.with_value(y)]
    error = ctx.zero
    steps = 0

    if isinstance(path, Ray):
        if abs(to_mp(ctx, path.r_from) - r) > ctx.mpf(10) ** (10 - pc.digits) * r:
            raise DomainError("ray start does not match the initial point")
        r_end = to_mp(ctx, path.r_to)
        phase = ctx.expj(theta0)
        direction = 1 if r_end > r else -1
        frac = ctx.one
        while abs(r_end - r) > ctx.mpf(10) ** (5 - pc.digits) * r_end:
            h = STEP_RATIO * min(r, r * r / norm_m) * frac
            h = min(h, abs(r_end - r))
            r_next = r_end if h == abs(r_end - r) else r + direction * h
            out = _taylor_step(ctx, system, r * phase, (r_next - r) * phase, y, tol, term_cap, min_terms)
            if out is None:
                frac /= 2
                if frac < ctx.mpf(2) ** (-MAX_HALVINGS):
                    raise IntegrationError(
                        f"step underflow at |z|={ctx.nstr(r, 8)}",
                        last_point=BranchedValue(r, init.arg_z, init.pi_shift, y),
                    )
                _log(f"halving step at |z|={ctx.nstr(r, 6)}")
                continue
            y, tail = out
            error += tail
            r = r_next
            steps += 1
            frac = min(frac * 2, ctx.one)
            if record:
                points.append(BranchedValue(r, init.arg_z, init.pi_shift, y))
        end = BranchedValue(r_end, init.arg_z, init.pi_shift, y)
    else:
        sweep = to_mp(ctx, path.sweep) + ctx.pi * to_mp(ctx, path.pi_sweep)
        target = theta0 + sweep
        theta = theta0
        direction = 1 if sweep >= 0 else -1
        frac = ctx.one
        while abs(target - theta) > ctx.mpf(10) ** (5 - pc.digits):
            h = STEP_RATIO * min(r, r * r / norm_m) * frac
            dtheta = min(2 * ctx.asin(min(h / (2 * r), ctx.mpf(1) / 2)), abs(target - theta))
            theta_next = target if dtheta == abs(target - theta) else theta + direction * dtheta
            z0 = r * ctx.expj(theta)
            w = r * ctx.expj(theta_next) - z0
            out = _taylor_step(ctx, system, z0, w, y, tol, term_cap, min_terms)
            if out is None:
                frac /= 2
                if frac < ctx.mpf(2) ** (-MAX_HALVINGS):
                    raise IntegrationError(
                        f"step underflow at arg={ctx.nstr(theta, 8)}",
                        last_point=BranchedValue(r, theta, Fraction(0), y),
                    )
                _log(f"halving step at arg={ctx.nstr(theta, 6)}")
                continue
            y, tail = out
            error += tail
            theta = theta_next
            steps += 1
            frac = min(frac * 2, ctx.one)
            if record:
                points.append(BranchedValue(r, theta, Fraction(0), y))
        # Keep the exact π-multiple bookkeeping of the start point.
        end = BranchedValue(
            init.abs_z,
            to_mp(ctx, init.arg_z) + to_mp(ctx, path.sweep),
            init.pi_shift + path.pi_sweep,
            y,
        )

    if not record:
        points = [points[0]]
    points.append(end)
    log.debug(f"ode_integrate: {steps} steps, error estimate {ctx.nstr(error, 3)}")
    return ODEPath(points=tuple(points), error_estimate=error, steps=steps)


def cauchy_coefficients(ctx, fn: Callable[[Any], Any], radius, count: int, samples: int):
    """Laurent coefficients a_0..a_{count-1} of fn(w) = Σ a_k w^k by the trapezoid rule on |w|=radius.

    ``fn`` returns an mpmath matrix; the result is a list of matrices.
    """
    values = []
    for j in range(samples):
        w = radius * ctx.expjpi(ctx.mpf(2 * j) / samples)
        values.append((w, fn(w)))
    out = []
    for k in range(count):
        acc = None
        for w, v in values:
            term = v * (w ** (-k))
            acc = term if acc is None else acc + term
        out.append(acc / samples)
    return out
