"""The blowup F1 = Bl_pt P2: cohomology, tangent data, Orlov basis and lattice checks.

Everything here is exact; the only numeric step is the optional HRR
integrality report at working precision.
"""

from __future__ import annotations

import collections
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Sequence

from . import exact, log
from .charclasses import KClass, KLattice, TangentData, euler_gram, euler_pairing
from .cohomology import CohClass, GradedFrobeniusAlgebra
from .errors import DomainError
from .mutations import MutationSystem
from .numerics import PrecisionContext
from .spaces import Space, projective

PRESETS = ("F1",)


def _log(msg: str) -> None:
    log.source_log("Blowup", msg)


def _f1_algebra() -> GradedFrobeniusAlgebra:
    """Basis {1, h, e, pt}: h² = pt, e² = −pt, he = 0."""
    one = Fraction(1)
    cup = [(0, j, j, one) for j in range(4)] + [(j, 0, j, one) for j in range(1, 4)]
    cup += [(1, 1, 3, one), (2, 2, 3, -one)]
    pairing = (
        (0, 0, 0, 1),
        (0, 1, 0, 0),
        (0, 0, -1, 0),
        (1, 0, 0, 0),
    )
    return GradedFrobeniusAlgebra(
        name="F1",
        labels=("1", "h", "e", "pt"),
        degrees=(0, 2, 2, 4),
        dim_complex=2,
        cup=tuple(cup),
        pairing=tuple(tuple(Fraction(v) for v in row) for row in pairing),
        unit_index=0,
        top_index=3,
    )


def exceptional_pushforward(e: CohClass, x: CohClass) -> CohClass:
    """ch(j_* F) for F on the exceptional divisor with ch(F) restricted from x.

    Grothendieck–Riemann–Roch along j: E → X̃ with normal bundle O_E(E):
    j_*(x · Td(N)^{-1}) = e ∪ x ∪ (1 − e/2), truncated in the ring.
    """
    alg = e.algebra
    return e.cup(x).cup(alg.unit() - e.scale(Fraction(1, 2)))


@dataclass(frozen=True, eq=False)
class BlowupData:
    """Blowup of ``base`` along a center of complex dimension ``center_dim`` and codimension ``codim``."""

    name: str
    base: Space
    center_dim: int
    codim: int
    space: Space
    pullback_columns: tuple[tuple[int, ...], ...]  # H*(base) basis index → H*(X̃) index
    blocks: tuple[str, ...] = field(default=())

    @property
    def algebra(self) -> GradedFrobeniusAlgebra:
        return self.space.algebra

    @property
    def tangent(self) -> TangentData:
        return self.space.tangent

    @property
    def lattice(self) -> KLattice:
        return self.space.lattice

    def expected_rank(self) -> int:
        """rank K(X) + (c − 1)·rank K(Z); the center is a point here."""
        return self.base.lattice.rank + (self.codim - 1) * 1

    def betti_numbers(self) -> dict[int, int]:
        return dict(collections.Counter(self.algebra.degrees))

    def expected_betti_numbers(self) -> dict[int, int]:
        """H*(X) ⊕ H^{*−2}(Z) ⊕ ⋯ ⊕ H^{*−2c+2}(Z) for a point center."""
        counts = collections.Counter(self.base.algebra.degrees)
        for k in range(1, self.codim):
            counts[2 * k] += 1
        return dict(counts)

    def pull_back_class(self, x: CohClass) -> CohClass:
        coeffs = [Fraction(0)] * self.algebra.dim
        for i, c in enumerate(x.coeffs):
            for j, w in enumerate(self.pullback_columns[i]):
                coeffs[j] += c * w
        return self.algebra.element(coeffs)

    def pull_back(self, v: KClass) -> KClass:
        return self.lattice.from_ch(self.pull_back_class(v.ch))


def assemble_blowup(preset: str) -> BlowupData:
    if preset.strip().upper() != "F1":
        raise DomainError(f"unsupported blowup preset {preset!r} (available: {', '.join(PRESETS)})")
    base = projective(2)
    alg = _f1_algebra()
    h, e, pt = alg.basis(1), alg.basis(2), alg.basis(3)
    c1 = h.scale(3) - e
    c2 = pt.scale(4)
    tangent = TangentData.from_chern(alg, [c1, c2])

    chs = [h.scale(k).exp() for k in range(3)]
    chs.append(exceptional_pushforward(e, alg.unit()))
    lattice = KLattice(
        "F1",
        tangent,
        ("φ*O", "φ*O(1)", "φ*O(2)", "j*O_E"),
        tuple(chs),
        blocks=("base", "base", "base", "exceptional"),
    )
    space = Space("F1", tangent, lattice, None, (), (h, e))
    pull = ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 0, 1))
    data = BlowupData("F1", base, 0, 2, space, pull, lattice.blocks)
    if data.lattice.rank != data.expected_rank():
        raise DomainError(f"F1: K-rank {data.lattice.rank} != expected {data.expected_rank()}")
    if data.betti_numbers() != data.expected_betti_numbers():
        raise DomainError("F1: Betti numbers do not match the blowup formula")
    return data


# ---------------------------------------------------------------------------
# Orlov decomposition
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class OrlovSOD:
    """A block-labelled basis; blocks are listed in SOD order."""

    data: BlowupData
    system: MutationSystem
    blocks: tuple[str, ...]

    def block_indices(self) -> dict[str, list[int]]:
        out: dict[str, list[int]] = {}
        for i, b in enumerate(self.blocks):
            out.setdefault(b, []).append(i)
        return out

    def block_order(self) -> list[str]:
        seen: list[str] = []
        for b in self.blocks:
            if b not in seen:
                seen.append(b)
        return seen


def orlov_sod(data: BlowupData) -> OrlovSOD:
    """φ*K(X) followed by K(Z)_0 = j_*(O_E ⊗ π*K(Z))."""
    lattice = data.lattice
    classes = [lattice.basis(i) for i in range(lattice.rank)]
    return OrlovSOD(data, MutationSystem.from_classes(classes), tuple(data.blocks))


def reorder_blocks(sod: OrlovSOD, order: Sequence[str]) -> OrlovSOD:
    """The same classes with blocks arranged in ``order`` (used to build negative checks)."""
    if sorted(order) != sorted(sod.block_order()):
        raise DomainError(f"block order {list(order)} does not list the blocks {sod.block_order()}")
    idx = sod.block_indices()
    perm = [i for b in order for i in idx[b]]
    classes = [sod.system.classes[i] for i in perm]
    return OrlovSOD(sod.data, MutationSystem.from_classes(classes), tuple(sod.blocks[i] for i in perm))


@dataclass(frozen=True)
class LatticeCheck:
    name: str
    passed: bool
    detail: str


@dataclass(frozen=True)
class SODLatticeReport:
    checks: tuple[LatticeCheck, ...]
    gram: tuple[tuple[int, ...], ...]
    max_rounding: Any = None

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)


def check_sod_lattice(sod: OrlovSOD, pc: PrecisionContext | None = None) -> SODLatticeReport:
    """Unimodularity, χ-isometry of the base inclusion, and one-directional vanishing between blocks."""
    gram = sod.system.gram
    det = sod.system.det()
    checks = [LatticeCheck("unimodular", abs(det) == 1, f"det = {det}")]

    data = sod.data
    base_idx = sod.block_indices().get("base", [])
    base_classes = [data.base.lattice.basis(i) for i in range(data.base.lattice.rank)]
    base_gram = euler_gram(base_classes).as_integers()
    pulled = MutationSystem.from_classes([data.pull_back(v) for v in base_classes]).gram
    sub = [[gram[i][j] for j in base_idx] for i in base_idx]
    iso = [list(r) for r in pulled] == base_gram and sub == base_gram
    checks.append(LatticeCheck("isometry", iso, f"base Gram {base_gram}, pulled back {[list(r) for r in pulled]}"))

    order = sod.block_order()
    idx = sod.block_indices()
    bad = []
    for a, early in enumerate(order):
        for late in order[a + 1:]:
            for i in idx[late]:
                for j in idx[early]:
                    if gram[i][j] != 0:
                        bad.append(f"χ({sod.system.labels[i]}, {sod.system.labels[j]}) = {gram[i][j]}")
    checks.append(LatticeCheck("semiorthogonal", not bad, "; ".join(bad) or "χ(later, earlier) = 0"))

    worst = None
    if pc is not None:
        classes = sod.system.classes or ()
        values = [euler_pairing(a, b, pc) for a in classes for b in classes]
        worst = max(v.error for v in values)
        ok = all(v.integral for v in values)
        checks.append(LatticeCheck("HRR integrality", ok, f"max distance to integers {pc.mp.nstr(worst, 3)}"))
    if not all(c.passed for c in checks):
        _log("; ".join(f"{c.name}: {c.detail}" for c in checks if not c.passed))
    return SODLatticeReport(tuple(checks), gram, worst)


def integral_c1_squared(data: BlowupData) -> Fraction:
    c1 = data.tangent.c1
    return c1.cup(c1).integrate()


def todd_integral(data: BlowupData) -> Fraction:
    return data.lattice.todd().integrate()


def exceptional_integrality(data: BlowupData) -> bool:
    """χ(E_a, j*O_E) and χ(j*O_E, E_a) are integers for every basis class."""
    lattice = data.lattice
    exc = lattice.named("j*O_E")
    gram = euler_gram([exc] + [lattice.basis(i) for i in range(lattice.rank)])
    return exact.integer_matrix(gram.entries) is not None
