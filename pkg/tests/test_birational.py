import pytest

from lib.birational import (
    assemble_blowup,
    check_sod_lattice,
    exceptional_integrality,
    integral_c1_squared,
    orlov_sod,
    reorder_blocks,
    todd_integral,
)
from lib.charclasses import euler_pairing_exact
from lib.errors import DomainError, UnsupportedError

F1_GRAM = ((1, 3, 6, 1), (0, 1, 3, 1), (0, 0, 1, 1), (0, 0, 0, 1))


@pytest.fixture
def f1():
    return assemble_blowup("F1")


def test_topology(f1):
    assert f1.betti_numbers() == {0: 1, 2: 2, 4: 1}
    assert f1.betti_numbers() == f1.expected_betti_numbers()
    assert f1.lattice.rank == f1.expected_rank() == 4
    assert integral_c1_squared(f1) == 8
    assert todd_integral(f1) == 1


def test_pull_back_is_an_isometry(f1):
    base = f1.base.lattice
    o, o1 = base.named("O"), base.named("O(1)")
    assert f1.pull_back(o1) == f1.lattice.named("φ*O(1)")
    assert euler_pairing_exact(f1.pull_back(o), f1.pull_back(o1)) == euler_pairing_exact(o, o1) == 3


def test_exceptional_pairings_are_integral(f1):
    assert exceptional_integrality(f1)


def test_orlov_decomposition(pc, f1):
    sod = orlov_sod(f1)
    assert sod.system.gram == F1_GRAM
    assert sod.block_order() == ["base", "exceptional"]
    report = check_sod_lattice(sod, pc)
    assert report.passed
    assert [c.name for c in report.checks] == ["unimodular", "isometry", "semiorthogonal", "HRR integrality"]
    assert report.max_rounding < pc.eps(8)


def test_wrong_block_order_is_not_semiorthogonal(f1):
    report = check_sod_lattice(reorder_blocks(orlov_sod(f1), ["exceptional", "base"]))
    failed = [c.name for c in report.checks if not c.passed]
    assert "semiorthogonal" in failed
    assert "unimodular" not in failed


def test_reorder_needs_every_block(f1):
    with pytest.raises(DomainError):
        reorder_blocks(orlov_sod(f1), ["base"])


def test_unknown_preset():
    with pytest.raises(DomainError):
        assemble_blowup("Bl_line P3")


def test_f1_has_no_quantum_data(f1):
    with pytest.raises(UnsupportedError):
        f1.space.require_quantum()
