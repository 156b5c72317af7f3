from fractions import Fraction

import pytest

from lib import spaces
from lib.errors import DomainError, UnsupportedError
from lib.mutations import braid_orbit_search
from lib.numerics import BranchedValue, PrecisionContext, max_abs
from lib.stokes import (
    asymptotic_basis,
    asymptotic_basis_for,
    eigenvalue_gaps,
    identify_K_classes,
    opposite_basis,
    quantum_germ,
    shoot_from_match,
    sod_flat_sections,
    stokes_factorization_check,
    stokes_from_pairing,
    stokes_matrix,
    twist_identities,
    verify_rh_consistency,
    verify_rh_rank_one,
)

pytestmark = pytest.mark.slow


@pytest.fixture(scope="module")
def p1_basis():
    return asymptotic_basis(spaces.builtin_space("P1"), PrecisionContext(50))


@pytest.fixture(scope="module")
def p1_stokes(p1_basis):
    return stokes_matrix(p1_basis, opposite_basis(p1_basis))


class TestAsymptoticBasis:
    def test_p1_basis(self, p1_basis):
        ctx = PrecisionContext(p1_basis.digits).mp
        assert abs(p1_basis.phi - ctx.pi / 2) < 1e-30
        assert p1_basis.dim == 2
        assert p1_basis.match_error <= 1e-18

    def test_deviation_shrinks_towards_zero(self, p1_basis):
        near = p1_basis.deviation(0, BranchedValue(Fraction(1, 20), p1_basis.phi))
        far = p1_basis.deviation(0, BranchedValue(Fraction(1, 5), p1_basis.phi))
        assert near < far

    def test_formal_series_is_matched(self, p1_basis):
        for i in range(2):
            assert p1_basis.formal_deviation(i, BranchedValue(Fraction(1, 20), p1_basis.phi)) < 1e-10

    def test_continuation_from_the_matching_radius(self, p1_basis):
        curve = shoot_from_match(p1_basis, 0)
        assert curve
        assert all(gap < 1e-10 for _, gap in curve)

    def test_inadmissible_phase_rejected(self):
        with pytest.raises(DomainError):
            asymptotic_basis(spaces.builtin_space("P1"), PrecisionContext(40), 0)

    def test_repeated_eigenvalue_refused(self):
        with pytest.raises(UnsupportedError):
            asymptotic_basis(spaces.builtin_space("P1xP1"), PrecisionContext(40))

    def test_halving_the_matching_radius_keeps_the_solutions(self, p1_basis):
        pc = PrecisionContext(50, ode_tol="1e-18")
        ctx = pc.mp
        z = BranchedValue(Fraction(1, 2), p1_basis.phi)

        def columns(r):
            basis = asymptotic_basis_for(p1_basis.germ, pc, p1_basis.phi, r_match=r)
            m = basis.evaluate(z)
            return ctx.matrix([[ctx.convert(m[a, b]) for b in range(m.cols)] for a in range(m.rows)])

        full = columns(p1_basis.r_match)
        half = columns(p1_basis.r_match / 2)
        assert max_abs(full - half) / max_abs(full) < 10 * pc.ode_eps()

    def test_fixed_matching_radius_must_be_positive(self, p1_basis):
        with pytest.raises(DomainError):
            asymptotic_basis_for(p1_basis.germ, PrecisionContext(40), p1_basis.phi, r_match=0)

    def test_gaps_compare_positions_not_objects(self):
        assert eigenvalue_gaps([2, 2, -2]) == (4, 0)
        with pytest.raises(DomainError):
            eigenvalue_gaps([1])


class TestStokes:
    def test_p1_stokes_matrix(self, p1_stokes):
        assert p1_stokes.unitriangular
        assert p1_stokes.integer is not None
        assert [p1_stokes.integer[0][0], p1_stokes.integer[1][1], p1_stokes.integer[1][0]] == [1, 1, 0]
        assert abs(p1_stokes.integer[0][1]) == 2

    def test_loop_monodromy_factorizes(self, p1_basis, p1_stokes):
        report = stokes_factorization_check(p1_basis, p1_stokes)
        assert report.passed
        assert report.ode_residual < 1e-8 and report.framing_residual < 1e-8

    def test_pairing_route_agrees(self, p1_basis, p1_stokes):
        via_pairing = stokes_from_pairing(p1_basis)
        assert via_pairing.integer == p1_stokes.integer

    def test_stokes_matrix_is_in_the_braid_orbit_of_the_beilinson_gram(self, p1_stokes):
        assert braid_orbit_search(p1_stokes.integer, ((1, 2), (0, 1)), depth=2).found

    def test_user_quantum_data_gives_the_same_stokes_matrix(self, p1_stokes):
        qa = spaces.builtin_space("P1").quantum
        basis = asymptotic_basis_for(quantum_germ(qa, [1]), PrecisionContext(40))
        result = stokes_from_pairing(basis)
        assert result.integer is not None
        assert abs(result.integer[0][1]) == 2


class TestIdentification:
    def test_p1_classes(self, p1_basis):
        ident = identify_K_classes(p1_basis)
        assert ident.conclusive
        assert len(ident.classes) == 2
        assert abs(ident.gram[0][1]) == 2
        assert braid_orbit_search(ident.gram, ((1, 2), (0, 1)), depth=2).found

    def test_p2_flat_sections_are_semiorthogonal(self):
        basis = asymptotic_basis(spaces.builtin_space("P2"), PrecisionContext(50))
        assert abs(basis.phi) < 1e-30
        report = sod_flat_sections(basis, identify_K_classes(basis))
        assert report.semiorthogonal
        assert report.lattice_decomposition


class TestRiemannHilbert:
    def test_twist_identities_on_p1(self, p1):
        dual_ok, serre_ok, t_mat = twist_identities(p1, [p1.lattice.named("O"), p1.lattice.named("O(1)")])
        assert dual_ok and serre_ok
        assert t_mat == [[1, 2], [-2, -3]]

    def test_p1_gluing_data(self):
        report = verify_rh_consistency(spaces.builtin_space("P1"), PrecisionContext(50))
        assert report.passed
        assert report.gram is not None

    def test_rank_one(self):
        assert verify_rh_rank_one(3, PrecisionContext(40)).passed
