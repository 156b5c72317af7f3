#!/usr/bin/env python3
# ruff: noqa: E402
"""gammaflow CLI: verification runs over quantum D-module data."""

from __future__ import annotations

import argparse
import json
import os
import re
import sys
from fractions import Fraction
from pathlib import Path
from typing import Any, Callable

MIN_PYTHON = (3, 12)


def ensure_supported_python(version_info: tuple[int, int, int] | object | None = None) -> None:
    if version_info is None:
        version_info = sys.version_info
    major, minor, micro = tuple(version_info[:3])
    if (major, minor) >= MIN_PYTHON:
        return
    sys.stderr.write(
        "gammaflow requires Python 3.12+.\n"
        f"Detected Python {major}.{minor}.{micro}.\n"
    )
    raise SystemExit(1)


ensure_supported_python()

SCRIPT_DIR = Path(__file__).parent.resolve()
sys.path.insert(0, str(SCRIPT_DIR))

from lib import (
    birational,
    charclasses,
    conjectures,
    env,
    fanout,
    log,
    mutations,
    quantum,
    render,
    schema,
    sections,
    spaces,
    stokes,
    userdata,
)
from lib.errors import DataError, DomainError, GammaflowError, PrecisionError, TruncationError
from lib.numerics import BranchedValue, PrecisionContext, to_mp

DEFAULT_T_GRID = "25,50,100,200"
DEFAULT_FIT_GRID = "10:40:7"
DEFAULT_Z_GRID = "0.5,0.25,0.1"
DEFAULT_DE_POINTS = "1,2"
DEFAULT_DE_Z = "1,0.5,2@1/5pi,1@1/3pi,3"

Handler = Callable[[argparse.Namespace, PrecisionContext, schema.Report], None]


# ---------------------------------------------------------------------------
# Argument parsing
# ---------------------------------------------------------------------------

def parse_number(raw: str) -> Fraction:
    try:
        return Fraction(raw.strip())
    except (ValueError, ZeroDivisionError):
        raise DomainError(f"not a number: {raw!r}") from None


def parse_grid(raw: str) -> list[Fraction]:
    """``a:b:n`` (n equally spaced points, both ends included) or a comma list."""
    if ":" in raw:
        parts = raw.split(":")
        if len(parts) != 3:
            raise DomainError(f"grid {raw!r} is not of the form a:b:n")
        lo, hi = parse_number(parts[0]), parse_number(parts[1])
        try:
            count = int(parts[2])
        except ValueError:
            raise DomainError(f"grid {raw!r}: point count must be an integer") from None
        if count < 2:
            raise DomainError(f"grid {raw!r} needs at least two points")
        return [lo + (hi - lo) * k / (count - 1) for k in range(count)]
    values = [parse_number(x) for x in raw.split(",") if x.strip()]
    if not values:
        raise DomainError("empty grid")
    return values


def parse_point(raw: str) -> BranchedValue:
    """``r`` or ``r@theta``; theta in radians, or a rational multiple of π written ``1/5pi``."""
    modulus, _, angle = raw.partition("@")
    r = parse_number(modulus)
    if r <= 0:
        raise DomainError(f"point {raw!r} needs a positive modulus")
    angle = angle.strip()
    if not angle:
        return BranchedValue(r)
    if angle.endswith("pi"):
        head = angle[:-2].strip()
        if head in ("", "+", "-"):
            head += "1"
        return BranchedValue.from_pi(r, parse_number(head))
    return BranchedValue(r, parse_number(angle))


def parse_points(raw: str) -> list[BranchedValue]:
    return [parse_point(x) for x in raw.split(",") if x.strip()]


def parse_phase(raw: str | None, ctx) -> Any:
    if raw is None or raw.strip().lower() == "auto":
        return None
    text = raw.strip()
    if text.endswith("pi"):
        head = text[:-2].strip()
        if head in ("", "+", "-"):
            head += "1"
        return ctx.pi * to_mp(ctx, parse_number(head))
    return to_mp(ctx, parse_number(text))


def parse_matrix(raw: str) -> list[list[int]]:
    try:
        rows = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise DomainError(f"matrix is not valid JSON: {exc.msg}") from None
    if not isinstance(rows, list) or not rows or any(not isinstance(r, list) or len(r) != len(rows) for r in rows):
        raise DomainError("matrix must be a non-empty square list of lists")
    if any(isinstance(v, bool) or not isinstance(v, int) for r in rows for v in r):
        raise DomainError("matrix entries must be integers")
    return rows


_WORD_RE = re.compile(r"^([RL])(\d+)$")


def parse_word(raw: str) -> list[tuple[str, int]]:
    """Mutation word such as ``R0,L1`` (0-based positions, applied left to right)."""
    word = []
    for part in raw.split(","):
        part = part.strip().upper()
        if not part:
            continue
        m = _WORD_RE.match(part)
        if not m:
            raise DomainError(f"mutation {part!r} is not R<i> or L<i>")
        word.append((m.group(1), int(m.group(2))))
    return word


def parse_degrees(raw: str) -> tuple[int, ...]:
    try:
        return tuple(int(x) for x in raw.split(",") if x.strip())
    except ValueError:
        raise DomainError(f"line bundle degrees {raw!r} must be integers") from None


def slugify(value: str) -> str:
    slug = re.sub(r"[^a-z0-9]+", "-", value.lower()).strip("-")
    return slug or "gammaflow"


# ---------------------------------------------------------------------------
# Shared helpers
# ---------------------------------------------------------------------------

def resolve_space(args: argparse.Namespace) -> spaces.Space:
    if not args.space:
        raise DomainError(f"'{' '.join(x for x in (args.command, args.subcommand) if x)}' needs --space")
    return spaces.builtin_space(args.space)


def tolerance(args: argparse.Namespace, pc: PrecisionContext, default: Any) -> Any:
    ctx = pc.mp
    return to_mp(ctx, parse_number(args.tol)) if args.tol else to_mp(ctx, default)


def quantum_source(args: argparse.Namespace, pc: PrecisionContext):
    """(name, quantum algebra, q, hypersurface) from --data or --space."""
    hyper = None
    if args.data:
        data = userdata.load_user_data(args.data)
        if data.quantum is None:
            raise DataError(f"{data.name}: no quantum product given", field="quantum")
        name, qa, q, hyper = data.name, data.quantum, data.q, data.hypersurface
    else:
        space = resolve_space(args)
        t = parse_point(args.t or "1")
        name, qa, q = space.name, space.require_quantum(), space.q_of_t(t, pc.mp)
    if getattr(args, "hypersurface", None):
        hyper = parse_degrees(args.hypersurface)
        if len(hyper) != 2:
            raise DomainError(f"--hypersurface expects n,d, got {args.hypersurface!r}")
    return name, qa, q, hyper


def lattice_classes(space: spaces.Space) -> list[charclasses.KClass]:
    return [space.lattice.basis(i) for i in range(space.lattice.rank)]


def asymptotic_basis(args: argparse.Namespace, pc: PrecisionContext) -> stokes.AsymptoticBasis:
    phi = parse_phase(args.phase, pc.mp)
    if args.data:
        data = userdata.load_user_data(args.data)
        if data.quantum is None:
            raise DataError(f"{data.name}: no quantum product given", field="quantum")
        germ = stokes.quantum_germ(data.quantum, data.q)
        return stokes.asymptotic_basis_for(germ, pc, phi, match_digits=args.match_digits, workers=args.workers)
    space = resolve_space(args)
    t = parse_point(args.t or "1")
    return stokes.asymptotic_basis(space, pc, phi, t=t, match_digits=args.match_digits, workers=args.workers)


def record_basis(report: schema.Report, basis: stokes.AsymptoticBasis) -> None:
    report.values["phase"] = basis.phi
    report.values["eigenvalues"] = [basis.values[k] for k in basis.order()]
    report.values["matching radius"] = basis.r_match
    report.values["asymptotic orders"] = list(basis.orders)
    report.values["matching digits"] = basis.digits


def add_stokes_checks(report: schema.Report, result: stokes.StokesResult) -> None:
    report.add("integer entries", result.integer is not None, result.rounding_error, stokes.INTEGER_TOL)
    report.add("unitriangular", result.unitriangular, result.triangular_error, stokes.TRIANGULAR_TOL)
    report.values["stokes matrix"] = result.integer if result.integer is not None else result.raw
    report.values["raw stokes matrix"] = result.raw


def add_labelled(report: schema.Report, outcomes, verdict: Callable[[str, Any], None]) -> None:
    """Record labelled fanout results; failed runs become FAIL lines."""
    for label, result, exc in outcomes:
        if exc is not None:
            report.add(label, False, detail=f"{type(exc).__name__}: {exc}")
        else:
            verdict(label, result)


# ---------------------------------------------------------------------------
# check
# ---------------------------------------------------------------------------

def check_algebra(args: argparse.Namespace, pc: PrecisionContext, report: schema.Report) -> None:
    if args.data:
        data = userdata.load_user_data(args.data, strict=False)
        algebra, qa, q = data.algebra, data.quantum, list(data.q)
    else:
        space = resolve_space(args)
        algebra, qa = space.algebra, space.quantum
        q = [1] * qa.n_params if qa is not None else []
    for check in algebra.validate().checks:
        report.add(check.name, check.passed, detail=check.witness)
    if qa is not None:
        for check in qa.validate_at(q).checks:
            report.add(f"quantum {check.name}", check.passed, detail=check.witness)
    report.values["basis"] = list(algebra.labels)
    report.values["mu"] = list(algebra.mu_diagonal())


def check_gamma_identity(args: argparse.Namespace, pc: PrecisionContext, report: schema.Report) -> None:
    if args.data:
        data = userdata.load_user_data(args.data)
        if data.tangent is None:
            raise DataError(f"{data.name}: the Γ̂ identity needs ch_tangent", field="ch_tangent")
        tangent = data.tangent
    else:
        tangent = resolve_space(args).tangent
    result = charclasses.check_gamma_ahat(tangent, pc)
    report.add("gamma-Ahat identity", result.passed, result.residual, result.threshold)
    report.values["gamma class"] = list(charclasses.gamma_class(tangent, pc).numeric(pc).coeffs)


def check_hrr(args: argparse.Namespace, pc: PrecisionContext, report: schema.Report) -> None:
    space = resolve_space(args)
    classes = lattice_classes(space)
    exact_gram = charclasses.euler_gram(classes).as_integers()
    numeric = [[charclasses.euler_pairing(a, b, pc) for b in classes] for a in classes]
    worst = max(v.error for row in numeric for v in row)
    rounded = [[v.integer for v in row] for row in numeric]
    report.add("HRR integrality", all(v.integral for row in numeric for v in row), worst, pc.eps(8))
    report.add("numeric Gram equals exact Gram", rounded == exact_gram)
    report.add("unitriangular", mutations.MutationSystem.from_classes(classes).unitriangular)
    report.values["labels"] = list(space.lattice.labels)
    report.values["gram"] = exact_gram


def check_pairing(args: argparse.Namespace, pc: PrecisionContext, report: schema.Report) -> None:
    space = resolve_space(args)
    t = parse_point(args.t or "1")
    z = parse_point(args.z or "1")
    result = sections.framing_gram(space, lattice_classes(space), t, z, pc)
    limit = tolerance(args, pc, pc.eps(20))
    report.add("pairing equals Euler form", result.max_error < limit, result.max_error, limit)
    report.values["gram"] = result.expected
    report.values["pairing matrix"] = result.raw


def check_monodromy(args: argparse.Namespace, pc: PrecisionContext, report: schema.Report) -> None:
    space = resolve_space(args)
    t = parse_point(args.t or "1")
    z = parse_point(args.z or "1")
    submissions = [
        (f"monodromy {v.describe()}", lambda v=v: sections.monodromy_check(space, v, t, z, pc, composed=args.composed))
        for v in lattice_classes(space)
    ]

    def verdict(label: str, result: sections.MonodromyReport) -> None:
        worst = max(r for r in (result.z_loop_residual, result.tau_shift_residual, result.composed_residual) if r is not None)
        detail = f"z-loop {pc.mp.nstr(result.z_loop_residual, 3)}, tau-shift {pc.mp.nstr(result.tau_shift_residual, 3)}"
        report.add(label, result.passed, worst, result.threshold, detail)

    add_labelled(report, fanout.run_labelled(submissions, workers=args.workers), verdict)


def check_levelt(args: argparse.Namespace, pc: PrecisionContext, report: schema.Report) -> None:
    space = resolve_space(args)
    result = sections.levelt_recursion_check(space, parse_point(args.t or "1"), pc)
    report.values["kernel dimension"] = result.kernel_dimension
    if result.max_deviation is None:
        report.warnings.append(f"{space.name}: no J-function, only the kernel dimension is reported")
        return
    limit = tolerance(args, pc, pc.eps(pc.digits // 2))
    report.add("Levelt recursion", result.max_deviation < limit, result.max_deviation, limit, f"{result.orders} orders")


def check_quantum_de(args: argparse.Namespace, pc: PrecisionContext, report: schema.Report) -> None:
    space = resolve_space(args)
    grid = [(t, z) for t in parse_points(args.t or DEFAULT_DE_POINTS) for z in parse_points(args.z or DEFAULT_DE_Z)]
    residuals = fanout.map_ordered(
        lambda tz: sections.quantum_de_residual(space, tz[0], tz[1], PrecisionContext(pc.digits)),
        grid,
        workers=args.workers,
    )
    worst = max(residuals)
    limit = tolerance(args, pc, pc.eps(15))
    report.add("quantum differential equation", worst < limit, worst, limit, f"{len(grid)} (t, z) points")
    ctx = pc.mp
    report.tables.append(schema.Table(
        "quantum-de",
        ("abs_t", "arg_t", "abs_z", "arg_z", "residual"),
        tuple((to_mp(ctx, t.abs_z), t.arg(ctx), to_mp(ctx, z.abs_z), z.arg(ctx), r) for (t, z), r in zip(grid, residuals)),
    ))


def check_kunneth(args: argparse.Namespace, pc: PrecisionContext, report: schema.Report) -> None:
    space = resolve_space(args)
    if len(space.factors) != 2:
        raise DomainError(f"{space.name}: the Künneth check needs a product of two projective spaces")
    a, b = (spaces.projective(n) for n in space.factors)
    t = parse_point(args.t or "1")
    z = parse_point(args.z or "1")
    submissions = [
        (f"Künneth {va.describe()} ⊠ {vb.describe()}",
         lambda va=va, vb=vb: sections.kunneth_residual(a, b, space, va, vb, t, z, pc))
        for va in lattice_classes(a)
        for vb in lattice_classes(b)
    ]
    limit = tolerance(args, pc, pc.eps(25))
    add_labelled(
        report,
        fanout.run_labelled(submissions, workers=args.workers),
        lambda label, residual: report.add(label, residual < limit, residual, limit),
    )


# ---------------------------------------------------------------------------
# spectrum
# ---------------------------------------------------------------------------

def run_spectrum(args: argparse.Namespace, pc: PrecisionContext, report: schema.Report) -> None:
    ctx = pc.mp
    name, qa, q, hyper = quantum_source(args, pc)
    spectrum = quantum.euler_spectrum(qa, q, pc)
    verdict = quantum.conjecture_O_check(spectrum, pc)
    report.add("Conjecture O", verdict.passed, verdict.T, detail=verdict.detail)
    choice = quantum.admissible_phase(spectrum, pc, parse_phase(args.phase, ctx))
    report.add("admissible phase", choice.admissible, choice.phi, detail=f"margin {ctx.nstr(choice.margin, 6)}")
    report.values["T"] = spectrum.T
    report.values["distinct eigenvalues"] = spectrum.distinct
    report.values["forbidden directions"] = list(choice.forbidden)
    report.tables.append(schema.Table(
        "spectrum",
        ("re", "im", "abs", "multiplicity"),
        tuple((ctx.re(v), ctx.im(v), abs(v), m) for v, m in zip(spectrum.values, spectrum.multiplicities)),
    ))
    if hyper is not None:
        n, d = hyper
        pattern = quantum.hypersurface_pattern_check(spectrum, n, d, pc)
        report.add(
            "hypersurface pattern",
            pattern.passed,
            pattern.max_deviation,
            detail=f"T = {ctx.nstr(pattern.expected_T, 12)}; zero multiplicity "
                   f"{pattern.zero_multiplicity} (expected {pattern.expected_zero_multiplicity})",
        )
    log.debug(f"{name}: spectrum at q={list(q)}")


# ---------------------------------------------------------------------------
# gamma1
# ---------------------------------------------------------------------------

def gamma1_limit(args: argparse.Namespace, pc: PrecisionContext, report: schema.Report) -> None:
    space = resolve_space(args)
    table = conjectures.gamma1_limit_test(space, parse_grid(args.t or DEFAULT_T_GRID), pc, workers=args.workers)
    report.add("distance decreasing", table.decreasing)
    band = tolerance(args, pc, Fraction(1, 5))
    report.add("decay order near 1", abs(table.alpha - 1) <= band, table.alpha, band,
               f"± {pc.mp.nstr(table.alpha_error, 3)}")
    small = conjectures.small_t_direction(space, pc)
    report.add("small t points away from Gamma", small.distance_to_top < small.distance_to_gamma,
               small.distance_to_gamma, detail=f"distance to top class {pc.mp.nstr(small.distance_to_top, 3)}")
    report.values["prefactor"] = table.prefactor
    report.values["fit residual"] = table.fit_residual
    report.values["limit ratio"] = table.limit_ratio
    report.values["doubling ratios"] = table.doubling_ratios()
    report.tables.append(schema.Table("gamma1-limit", ("t", "distance"), tuple(table.rows())))


def gamma1_flat_form(args: argparse.Namespace, pc: PrecisionContext, report: schema.Report) -> None:
    space = resolve_space(args)
    degrees = parse_degrees(args.bundle) if args.bundle else (0,) * len(space.hyperplanes)
    bundle = space.line_bundle(*degrees)
    result = conjectures.gamma1_flat_form_test(
        space,
        parse_grid(args.z or DEFAULT_Z_GRID),
        pc,
        bundle=bundle,
        method=args.method,
        max_digits=args.max_digits,
        workers=args.workers,
    )
    if any(degrees):
        limit = tolerance(args, pc, Fraction(1, 10))
        report.add("angle stays away from the Perron direction", result.final_angle > limit, result.final_angle, limit)
    else:
        limit = tolerance(args, pc, Fraction(2, 100))
        report.add("angle decreasing", result.decreasing)
        report.add("final angle", result.final_angle < limit, result.final_angle, limit)
    report.values["bundle"] = result.bundle
    report.values["T"] = result.T
    report.values["perron vector"] = list(result.perron)
    report.values["exact perron vector"] = result.exact_perron
    report.values["smallest safe z"] = conjectures.smallest_safe_z(space, args.max_digits)
    report.tables.append(schema.Table(
        "gamma1-flat-form",
        ("z", "angle", "digits"),
        tuple((p.z, p.angle, p.digits) for p in result.points),
    ))


def gamma1_fit(args: argparse.Namespace, pc: PrecisionContext, report: schema.Report) -> None:
    space = resolve_space(args)
    result = conjectures.asymptotic_fit(space, parse_grid(args.t or DEFAULT_FIT_GRID), pc, workers=args.workers)
    report.add("growth rate T", result.T_relative_error <= pc.mp.mpf("0.01"), result.T, "0.01",
               f"spectral radius {pc.mp.nstr(result.spectrum_T, 12)}")
    report.add("polynomial exponent", result.exponent_relative_error <= pc.mp.mpf("0.1"), result.exponent, "0.1",
               f"expected {result.expected_exponent}")
    report.values["log C"] = result.log_C
    report.values["1/t correction"] = result.correction
    report.values["fit residual"] = result.residual
    report.values["T spread"] = conjectures.t_spread([result.T, result.spectrum_T])


# ---------------------------------------------------------------------------
# stokes
# ---------------------------------------------------------------------------

def stokes_compute(args: argparse.Namespace, pc: PrecisionContext, report: schema.Report) -> None:
    basis = asymptotic_basis(args, pc)
    record_basis(report, basis)
    result = stokes.stokes_matrix(basis, stokes.opposite_basis(basis, workers=args.workers))
    add_stokes_checks(report, result)
    cross = stokes.stokes_from_pairing(basis)
    n = basis.dim
    gap = max(abs(result.raw[i, j] - cross.raw[i, j]) for i in range(n) for j in range(n))
    limit = tolerance(args, pc, stokes.TRIANGULAR_TOL)
    report.add("pairing cross-check", gap < limit, gap, limit)
    if args.loop:
        loop = stokes.stokes_factorization_check(basis, result)
        report.add("loop monodromy factorization", loop.passed, max(loop.ode_residual, loop.framing_residual), "1e-8")


def stokes_identify(args: argparse.Namespace, pc: PrecisionContext, report: schema.Report) -> None:
    basis = asymptotic_basis(args, pc)
    record_basis(report, basis)
    ident = stokes.identify_K_classes(basis)
    report.add("integral K-coordinates", ident.classes is not None, ident.rounding_error, stokes.INTEGER_TOL)
    report.values["central connection matrix"] = ident.central_connection
    report.values["identification residual"] = ident.residual
    if ident.classes is not None:
        report.values["classes"] = [c.describe() for c in ident.classes]
        report.values["gram"] = ident.gram
        report.add("exceptional classes", ident.conclusive, detail=f"χ(E,E) = {[str(x) for x in ident.self_pairings]}")
        result = stokes.stokes_matrix(basis, stokes.opposite_basis(basis, workers=args.workers))
        add_stokes_checks(report, result)
        report.add("Stokes matrix equals Gram of identified classes", result.integer == ident.gram)
        space = basis.germ.space
        target = mutations.MutationSystem.from_classes(lattice_classes(space)).gram
        match = mutations.braid_orbit_search(ident.gram, target, args.depth)
        report.add("braid orbit of the standard basis", match.found,
                   detail=f"word {list(match.word)}, signs {match.signs}, {match.explored} explored")
    sod = stokes.sod_flat_sections(basis, ident)
    report.add("semiorthogonal flat sections", sod.semiorthogonal, sod.max_pairing, "1e-8")
    if sod.lattice_decomposition is not None:
        report.add("K-lattice decomposition", sod.lattice_decomposition)


def stokes_mutate(args: argparse.Namespace, pc: PrecisionContext, report: schema.Report) -> None:
    if args.gram:
        system = mutations.MutationSystem.from_gram(parse_matrix(args.gram))
    else:
        system = mutations.MutationSystem.from_classes(lattice_classes(resolve_space(args)))
    for tag, i in parse_word(args.word or ""):
        system = (mutations.mutate_right if tag == "R" else mutations.mutate_left)(system, i)
    report.values["gram"] = [list(r) for r in system.gram]
    if system.labels is not None:
        report.values["labels"] = list(system.labels)
    report.add("unimodular", system.unimodular, system.det())
    report.add("unitriangular", system.unitriangular)

    target = None
    if args.target:
        target = parse_matrix(args.target)
    elif args.gram and args.space:
        target = mutations.MutationSystem.from_classes(lattice_classes(resolve_space(args))).gram
    if target is not None:
        match = mutations.braid_orbit_search(system.gram, target, args.depth)
        report.add("braid orbit match", match.found, detail=f"{match.explored} Gram matrices explored")
        report.values["word"] = [f"{tag}{i}" for tag, i in match.word]
        report.values["signs"] = match.signs


# ---------------------------------------------------------------------------
# rh / blowup / data
# ---------------------------------------------------------------------------

def rh_verify(args: argparse.Namespace, pc: PrecisionContext, report: schema.Report) -> None:
    if args.rank_one:
        result = stokes.verify_rh_rank_one(parse_point(args.rank_one).point(pc.mp), pc, args.samples)
    else:
        space = resolve_space(args)
        result = stokes.verify_rh_consistency(
            space,
            pc,
            parse_phase(args.phase, pc.mp),
            t=parse_point(args.t or "1"),
            samples=args.samples,
            tol=args.tol or "1e-8",
            match_digits=args.match_digits,
            workers=args.workers,
        )
    for check in result.checks:
        report.add(check.name, check.passed, check.residual, detail=check.worst_point or None)
    report.values["gram"] = result.gram
    report.values["T"] = result.t_matrix


def blowup_check(args: argparse.Namespace, pc: PrecisionContext, report: schema.Report) -> None:
    data = birational.assemble_blowup(args.preset)
    sod = birational.orlov_sod(data)
    if args.order:
        sod = birational.reorder_blocks(sod, [b.strip() for b in args.order.split(",") if b.strip()])
    result = birational.check_sod_lattice(sod, pc)
    for check in result.checks:
        report.add(check.name, check.passed, detail=check.detail)
    report.add("exceptional integrality", birational.exceptional_integrality(data))
    report.values["labels"] = list(sod.system.labels or ())
    report.values["blocks"] = list(sod.blocks)
    report.values["gram"] = [list(r) for r in result.gram]
    report.values["c1^2"] = birational.integral_c1_squared(data)
    report.values["todd integral"] = birational.todd_integral(data)
    report.values["betti numbers"] = data.betti_numbers()


def data_validate(args: argparse.Namespace, pc: PrecisionContext, report: schema.Report) -> None:
    if not args.data:
        raise DomainError("'data validate' needs --data")
    data = userdata.load_user_data(args.data, strict=False)
    report.values["name"] = data.name
    report.values["basis"] = list(data.algebra.labels)
    if data.valid:
        report.add("axioms", True, detail=data.source)
    for violation in data.violations:
        report.add("axioms", False, detail=violation)
    if args.space:
        builtin = spaces.builtin_space(args.space).require_quantum()
        same = data.quantum is not None and userdata.same_structure(data.quantum, builtin)
        report.add(f"same structure as built-in {args.space}", same)
    if data.hypersurface is not None and data.quantum is not None and data.valid:
        n, d = data.hypersurface
        spectrum = quantum.euler_spectrum(data.quantum, data.q, pc)
        pattern = quantum.hypersurface_pattern_check(spectrum, n, d, pc)
        report.add("hypersurface pattern", pattern.passed, pattern.max_deviation,
                   detail=f"T = {pc.mp.nstr(pattern.expected_T, 12)}")


HANDLERS: dict[tuple[str, str | None], Handler] = {
    ("check", "algebra"): check_algebra,
    ("check", "gamma-identity"): check_gamma_identity,
    ("check", "hrr"): check_hrr,
    ("check", "pairing"): check_pairing,
    ("check", "monodromy"): check_monodromy,
    ("check", "levelt"): check_levelt,
    ("check", "quantum-de"): check_quantum_de,
    ("check", "kunneth"): check_kunneth,
    ("spectrum", None): run_spectrum,
    ("gamma1", "limit"): gamma1_limit,
    ("gamma1", "flat-form"): gamma1_flat_form,
    ("gamma1", "fit"): gamma1_fit,
    ("stokes", "compute"): stokes_compute,
    ("stokes", "identify"): stokes_identify,
    ("stokes", "mutate"): stokes_mutate,
    ("rh", "verify"): rh_verify,
    ("blowup", "check"): blowup_check,
    ("data", "validate"): data_validate,
}


# ---------------------------------------------------------------------------
# Entry point
# ---------------------------------------------------------------------------

def _common_options() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--space", help="Built-in space: P<n>, P<a>xP<b>..., or F1")
    common.add_argument("--data", help="User data file (JSON)")
    common.add_argument("--digits", type=int, help="Working precision in decimal digits")
    common.add_argument("--max-digits", type=int, help="Ceiling for automatic precision boosts")
    common.add_argument("--match-digits", type=int, help="Target accuracy of the asymptotic matching")
    common.add_argument("--workers", type=int, help="Thread pool width for grids")
    common.add_argument("--t", help="t point, list or grid (a:b:n)")
    common.add_argument("--z", help="z point, list or grid; points may be written r@theta or r@k/mpi")
    common.add_argument("--phase", help="Phase φ in radians, as k/mpi, or 'auto'")
    common.add_argument("--tol", help="Override the pass tolerance of the run")
    common.add_argument("--output", help="Write the JSON report to this path")
    common.add_argument("--csv", help="Write plot tables as CSV to this path")
    common.add_argument("--emit", default="text", choices=["text", "json"])
    common.add_argument("--debug", action="store_true", help="Enable debug logging")
    return common


def build_parser() -> argparse.ArgumentParser:
    common = _common_options()
    parser = argparse.ArgumentParser(prog="gammaflow", description="Quantum D-module numerics and Γ̂ verifications")
    commands = parser.add_subparsers(dest="command", required=True)

    check = commands.add_parser("check", help="Identity checks on a space")
    check_sub = check.add_subparsers(dest="subcommand", required=True)
    for name in ("algebra", "gamma-identity", "hrr", "pairing", "levelt", "quantum-de", "kunneth"):
        check_sub.add_parser(name, parents=[common])
    monodromy = check_sub.add_parser("monodromy", parents=[common])
    monodromy.add_argument("--composed", action="store_true", help="Also check n+1 loops against the τ-shift by ω^{n+1}")

    spectrum = commands.add_parser("spectrum", parents=[common], help="Spectrum of c₁⋆ and Conjecture O")
    spectrum.add_argument("--hypersurface", help="n,d: compare with the degree-d hypersurface pattern in P^n")
    spectrum.set_defaults(subcommand=None)

    gamma1 = commands.add_parser("gamma1", help="Gamma conjecture I runs")
    gamma1_sub = gamma1.add_subparsers(dest="subcommand", required=True)
    gamma1_sub.add_parser("limit", parents=[common])
    flat = gamma1_sub.add_parser("flat-form", parents=[common])
    flat.add_argument("--bundle", help="Line bundle degrees, one per hyperplane class (default O)")
    flat.add_argument("--method", default="series", choices=["series", "ode"])
    gamma1_sub.add_parser("fit", parents=[common])

    stokes_cmd = commands.add_parser("stokes", help="Stokes matrices and exceptional bases")
    stokes_sub = stokes_cmd.add_subparsers(dest="subcommand", required=True)
    compute = stokes_sub.add_parser("compute", parents=[common])
    compute.add_argument("--loop", action="store_true", help="Also check the loop monodromy factorization")
    identify = stokes_sub.add_parser("identify", parents=[common])
    identify.add_argument("--depth", type=int, default=mutations.MAX_SEARCH_DEPTH)
    mutate = stokes_sub.add_parser("mutate", parents=[common])
    mutate.add_argument("--gram", help="Starting Gram matrix as JSON (default: the space's K-basis)")
    mutate.add_argument("--word", help="Mutations to apply, e.g. R0,L1")
    mutate.add_argument("--target", help="Gram matrix to search for in the braid and sign orbit")
    mutate.add_argument("--depth", type=int, default=mutations.MAX_SEARCH_DEPTH)

    rh = commands.add_parser("rh", help="Riemann–Hilbert consistency")
    rh_sub = rh.add_subparsers(dest="subcommand", required=True)
    verify = rh_sub.add_parser("verify", parents=[common])
    verify.add_argument("--samples", type=int, default=10)
    verify.add_argument("--rank-one", help="Run the rank-1 check with eigenvalue u (r or r@theta)")

    blowup = commands.add_parser("blowup", help="Blowup K-theory decompositions")
    blowup_sub = blowup.add_subparsers(dest="subcommand", required=True)
    bcheck = blowup_sub.add_parser("check", parents=[common])
    bcheck.add_argument("--preset", default="F1", choices=list(birational.PRESETS))
    bcheck.add_argument("--order", help="Block order, e.g. exceptional,base")

    data = commands.add_parser("data", help="User data files")
    data_sub = data.add_subparsers(dest="subcommand", required=True)
    data_sub.add_parser("validate", parents=[common])
    return parser


def emit_output(report: schema.Report, emit: str) -> str:
    if emit == "json":
        return schema.dumps(report)
    return render.render_text(report)


def save_artifacts(report: schema.Report, args: argparse.Namespace, output_dir: str | None) -> list[Path]:
    saved = []
    stem = slugify("-".join(x for x in (args.command, args.subcommand, args.space or (Path(args.data).stem if args.data else None)) if x))
    json_path = args.output or (str(Path(output_dir) / f"{stem}.json") if output_dir else None)
    if json_path:
        saved.append(render.write_json(report, json_path))
    csv_path = args.csv or (str(Path(output_dir) / f"{stem}.csv") if output_dir else None)
    if csv_path and report.tables:
        base = Path(csv_path)
        for table in report.tables:
            path = base if len(report.tables) == 1 else base.with_name(f"{base.stem}-{table.name}{base.suffix}")
            saved.append(render.write_csv(table, path))
    return saved


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    if args.debug:
        os.environ["GAMMAFLOW_DEBUG"] = "1"
        log.DEBUG = True

    config = env.get_config()
    digits = args.digits if args.digits is not None else config["GAMMAFLOW_DIGITS"]
    args.max_digits = args.max_digits if args.max_digits is not None else config["GAMMAFLOW_MAX_DIGITS"]
    args.match_digits = args.match_digits if args.match_digits is not None else config["GAMMAFLOW_MATCH_DIGITS"]
    args.workers = args.workers if args.workers is not None else config["GAMMAFLOW_WORKERS"]

    report = schema.Report(schema.RunConfig(
        command=args.command,
        subcommand=args.subcommand,
        space=args.space,
        data=args.data,
        digits=digits,
        max_digits=args.max_digits,
        match_digits=args.match_digits,
        workers=args.workers,
        t=args.t,
        z=args.z,
        phase=args.phase,
        tolerance=args.tol,
        output=args.output,
        csv=args.csv,
        config_source=config.get("_CONFIG_SOURCE"),
    ))
    handler = HANDLERS[(args.command, args.subcommand)]
    try:
        handler(args, PrecisionContext(digits), report)
    except (DomainError, DataError) as exc:
        report.error = str(exc)
        status = 2
    except GammaflowError as exc:
        report.error = f"{type(exc).__name__}: {exc}"
        if isinstance(exc, TruncationError):
            report.values["diagnostics"] = exc.diagnostics
        if isinstance(exc, PrecisionError):
            report.values["required digits"] = exc.required_digits
        status = 1
    else:
        status = 0 if report.passed else 1

    if report.error:
        sys.stderr.write(f"[gammaflow] {report.error}\n")
    for path in save_artifacts(report, args, config.get("GAMMAFLOW_OUTPUT_DIR")):
        sys.stderr.write(f"[gammaflow] Saved {path}\n")
    sys.stderr.flush()
    print(emit_output(report, args.emit))
    return status


if __name__ == "__main__":
    raise SystemExit(main())
