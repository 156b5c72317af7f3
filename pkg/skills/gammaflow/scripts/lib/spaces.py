"""Built-in spaces: projective spaces, their products, and the blowup F1."""

from __future__ import annotations

import functools
import itertools
import re
from dataclasses import dataclass
from typing import Any

from .charclasses import KClass, KLattice, TangentData
from .cohomology import CohClass, GradedFrobeniusAlgebra, kunneth_tensor, projective_space, tensor_class
from .errors import DomainError, UnsupportedError
from .numerics import BranchedValue, to_mp
from .quantum import QuantumAlgebra, kunneth_quantum, projective_quantum

MAX_PROJECTIVE_DIM = 6

_PRODUCT_RE = re.compile(r"^P(\d+)(?:xP(\d+))*$")


@dataclass(frozen=True, eq=False)
class Space:
    """A space with cohomology, tangent data, a K-lattice and optional quantum data.

    ``factors`` lists the projective factor dimensions when the space is a
    product of projective spaces; those spaces carry a closed-form J-function
    with τ = c₁ log t, i.e. q_r = t^{n_r+1}.
    """

    name: str
    tangent: TangentData
    lattice: KLattice
    quantum: QuantumAlgebra | None = None
    factors: tuple[int, ...] = ()
    hyperplanes: tuple[CohClass, ...] = ()

    @property
    def algebra(self) -> GradedFrobeniusAlgebra:
        return self.tangent.algebra

    @property
    def dim(self) -> int:
        return self.algebra.dim_complex

    @property
    def has_j_function(self) -> bool:
        return bool(self.factors)

    def require_quantum(self) -> QuantumAlgebra:
        if self.quantum is None:
            raise UnsupportedError(f"{self.name} has no quantum product data")
        return self.quantum

    def require_j_function(self) -> None:
        if not self.factors:
            raise UnsupportedError(f"{self.name} has no closed-form J-function")

    def q_of_t(self, t: BranchedValue, ctx) -> tuple:
        """q_r = exp((n_r + 1) log t) on the branch carried by t."""
        lt = t.log(ctx)
        return tuple(ctx.exp((n + 1) * lt) for n in self.factors)

    def spectral_bound(self, abs_t: Any, ctx) -> Any:
        """Σ (n_r + 1)|t|: the spectral radius of c₁⋆ at τ = c₁ log t."""
        return sum((n + 1) for n in self.factors) * to_mp(ctx, abs_t)

    def line_bundle(self, *degrees: int) -> KClass:
        if len(degrees) != len(self.hyperplanes):
            raise DomainError(f"{self.name} line bundles take {len(self.hyperplanes)} degree(s)")
        c1 = self.algebra.zero()
        for d, h in zip(degrees, self.hyperplanes):
            c1 = c1 + h.scale(d)
        return self.lattice.line_bundle(c1)

    def twist_by_omega_shift(self, v: KClass, power: int = 1) -> KClass:
        """V ⊗ ω^{power}[power·n]: tensor by ω^{power} with sign (−1)^{n·power}."""
        omega = self.lattice.canonical()
        out = v
        if power >= 0:
            for _ in range(power):
                out = self.lattice.tensor(out, omega)
        else:
            dual = self.lattice.dual(omega)
            for _ in range(-power):
                out = self.lattice.tensor(out, dual)
        return out * (-1 if (self.dim * power) % 2 else 1)


def _projective_tangent(algebra: GradedFrobeniusAlgebra) -> TangentData:
    """ch(TP^n) = (n+1)e^p − 1."""
    n = algebra.dim_complex
    total = algebra.basis(1).exp().scale(n + 1) - algebra.unit() if n else algebra.zero()
    return TangentData.from_total_ch(algebra, total)


def projective(n: int) -> Space:
    if not 1 <= n <= MAX_PROJECTIVE_DIM:
        raise DomainError(f"built-in P^n needs 1 <= n <= {MAX_PROJECTIVE_DIM}, got {n}")
    algebra = projective_space(n)
    tangent = _projective_tangent(algebra)
    p = algebra.basis(1)
    labels = tuple("O" if j == 0 else f"O({j})" for j in range(n + 1))
    lattice = KLattice(algebra.name, tangent, labels, tuple(p.scale(j).exp() for j in range(n + 1)))
    return Space(algebra.name, tangent, lattice, projective_quantum(algebra), (n,), (p,))


def product(a: Space, b: Space) -> Space:
    """Künneth product of two spaces with projective-product data."""
    name = f"{a.name}x{b.name}"
    alg = kunneth_tensor(a.algebra, b.algebra, name)
    ua, ub = a.algebra.unit(), b.algebra.unit()
    total = tensor_class(a.tangent.total_ch(), ub, alg) + tensor_class(ua, b.tangent.total_ch(), alg)
    tangent = TangentData.from_total_ch(alg, total)
    labels = []
    chs = []
    for (la, ca), (lb, cb) in itertools.product(zip(a.lattice.labels, a.lattice.ch_basis),
                                                zip(b.lattice.labels, b.lattice.ch_basis)):
        labels.append(f"{la}⊠{lb}")
        chs.append(tensor_class(ca, cb, alg))
    lattice = KLattice(name, tangent, tuple(labels), tuple(chs))
    quantum = None
    if a.quantum is not None and b.quantum is not None:
        quantum = kunneth_quantum(a.quantum, b.quantum, alg)
    hyper = tuple(tensor_class(h, ub, alg) for h in a.hyperplanes) + tuple(
        tensor_class(ua, h, alg) for h in b.hyperplanes
    )
    return Space(name, tangent, lattice, quantum, a.factors + b.factors, hyper)


@functools.lru_cache(maxsize=None)
def builtin_space(name: str) -> Space:
    """P<n>, products like P1xP2, or F1."""
    key = name.strip()
    if key.upper() == "F1":
        from .birational import assemble_blowup  # birational builds on projective()
        return assemble_blowup("F1").space
    if not _PRODUCT_RE.match(key):
        raise DomainError(f"unknown space {name!r} (expected P<n>, P<a>xP<b>..., or F1)")
    dims = [int(x) for x in re.findall(r"P(\d+)", key)]
    spaces = [projective(n) for n in dims]
    out = spaces[0]
    for nxt in spaces[1:]:
        out = product(out, nxt)
    return out
