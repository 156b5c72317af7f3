from fractions import Fraction

import pytest

from lib import spaces
from lib.errors import DomainError
from lib.quantum import (
    admissible_phase,
    conjecture_O_check,
    euler_spectrum,
    hypersurface_pattern_check,
    order_eigenvalues,
    quantum_product,
    spectrum_of_matrix,
)


class TestProducts:
    def test_p1_point_squares_to_q(self, p1):
        qa = p1.quantum
        p = p1.algebra.named("p")
        assert quantum_product(qa, p, p, [1]).coeffs == (1, 0)
        assert quantum_product(qa, p, p, [Fraction(5, 2)]).coeffs == (Fraction(5, 2), 0)

    def test_classical_limit(self, p2):
        qa = p2.quantum
        p, pp = p2.algebra.named("p"), p2.algebra.named("p^2")
        assert qa.product(p, p, [0]).coeffs == p.cup(p).coeffs
        assert qa.product(p, pp, [0]).coeffs == (0, 0, 0)
        assert qa.product(p, pp, [3]).coeffs == (3, 0, 0)

    def test_factorwise_rule_on_p1xp1(self):
        space = spaces.builtin_space("P1xP1")
        qa = space.quantum
        h1, h2 = space.algebra.basis(2), space.algebra.basis(1)
        q = [2, 3]
        assert qa.product(h1, h1, q).coeffs == (2, 0, 0, 0)
        assert qa.product(h2, h2, q).coeffs == (3, 0, 0, 0)
        assert qa.product(h1, h2, q).coeffs == (0, 0, 0, 1)

    def test_exact_euler_rows_of_p1(self, p1):
        assert p1.quantum.exact_euler_rows([1]) == [[0, 2], [2, 0]]

    @pytest.mark.parametrize("name,q", [("P1", [1]), ("P2", [2]), ("P3", [Fraction(1, 3)]), ("P1xP1", [1, 2])])
    def test_axioms_hold_at_rational_q(self, name, q):
        assert spaces.builtin_space(name).quantum.validate_at(q).passed

    def test_wrong_parameter_count(self, pc):
        qa = spaces.builtin_space("P1xP1").quantum
        with pytest.raises(DomainError):
            qa.euler_matrix([1], pc)

    def test_non_finite_parameter(self, pc, ctx, p1):
        with pytest.raises(DomainError):
            p1.quantum.euler_matrix([ctx.inf], pc)


class TestSpectrum:
    def test_p1(self, pc, p1):
        spec = euler_spectrum(p1.quantum, [1], pc)
        assert spec.distinct
        assert abs(spec.values[0] - 2) < pc.eps(10)
        assert abs(spec.values[1] + 2) < pc.eps(10)
        assert abs(spec.T - 2) < pc.eps(10)
        assert spec.simple_max

    def test_p2_is_three_times_the_cube_roots_of_unity(self, pc, ctx, p2):
        spec = euler_spectrum(p2.quantum, [1], pc)
        assert spec.distinct
        for k in range(3):
            target = 3 * ctx.root(1, 3, k)
            assert min(abs(v - target) for v in spec.values) < pc.eps(10)

    def test_p1xp1_has_a_double_zero(self, pc):
        spec = euler_spectrum(spaces.builtin_space("P1xP1").quantum, [1, 1], pc)
        assert not spec.distinct
        assert sorted(spec.multiplicities) == [1, 1, 2]
        assert abs(spec.T - 4) < pc.eps(10)


class TestConjectureO:
    @pytest.mark.parametrize("name", ["P1", "P2", "P3", "P1xP1"])
    def test_holds_for_builtins(self, pc, name):
        space = spaces.builtin_space(name)
        spec = euler_spectrum(space.quantum, [1] * space.quantum.n_params, pc)
        assert conjecture_O_check(spec, pc).passed

    def test_repeated_top_eigenvalue_fails(self, pc, ctx):
        spec = spectrum_of_matrix(ctx.diag([3, 3, 1]), pc)
        report = conjecture_O_check(spec, pc)
        assert not report.passed
        assert report.multiplicity == 2

    def test_negative_top_eigenvalue_fails(self, pc, ctx):
        spec = spectrum_of_matrix(ctx.diag([-3, 1]), pc)
        report = conjecture_O_check(spec, pc)
        assert not report.passed
        assert not report.positive_real


class TestPhases:
    def test_p1_auto_phase(self, pc, ctx, p1):
        choice = admissible_phase(euler_spectrum(p1.quantum, [1], pc), pc)
        assert choice.auto and choice.admissible
        assert abs(choice.phi - ctx.pi / 2) < pc.eps(10)
        assert abs(choice.margin - ctx.pi / 2) < pc.eps(10)

    def test_p1_zero_phase_is_forbidden(self, pc, p1):
        choice = admissible_phase(euler_spectrum(p1.quantum, [1], pc), pc, 0)
        assert not choice.admissible
        assert abs(choice.margin) < pc.eps(10)

    def test_p2_auto_phase_is_zero(self, pc, p2):
        spec = euler_spectrum(p2.quantum, [1], pc)
        assert len(spec.forbidden) == 6
        choice = admissible_phase(spec, pc)
        assert abs(choice.phi) < pc.eps(10)
        assert choice.admissible

    def test_p2_rejects_a_stokes_direction(self, pc, ctx, p2):
        spec = euler_spectrum(p2.quantum, [1], pc)
        assert not admissible_phase(spec, pc, ctx.pi / 6).admissible

    def test_order_eigenvalues(self, pc, ctx):
        values = [ctx.mpf(2), ctx.mpf(-2)]
        assert order_eigenvalues(values, ctx.pi / 2, pc) == [1, 0]
        assert order_eigenvalues(values, -ctx.pi / 2, pc) == [0, 1]


class TestHypersurfacePattern:
    def test_quadric_surface(self, pc):
        spec = euler_spectrum(spaces.builtin_space("P1xP1").quantum, [1, 1], pc)
        report = hypersurface_pattern_check(spec, 3, 2, pc)
        assert report.passed
        assert abs(report.expected_T - 4) < pc.eps(10)
        assert report.zero_multiplicity == 2

    def test_wrong_pattern_fails(self, pc):
        spec = euler_spectrum(spaces.builtin_space("P1xP1").quantum, [1, 1], pc)
        assert not hypersurface_pattern_check(spec, 3, 1, pc).passed

    @pytest.mark.parametrize("d", [0, 4])
    def test_degree_out_of_range(self, pc, p1, d):
        spec = euler_spectrum(p1.quantum, [1], pc)
        with pytest.raises(DomainError):
            hypersurface_pattern_check(spec, 3, d, pc)
