from fractions import Fraction

import pytest

from lib.cohomology import projective_space
from lib.errors import DomainError
from lib.numerics import (
    Arc,
    BranchedValue,
    FlatSystem,
    PrecisionContext,
    Ray,
    branch_power,
    cauchy_coefficients,
    condition_number,
    diag,
    eigen_decompose,
    euler_gamma,
    gamma_of_one_plus_nilpotent,
    max_abs,
    ode_integrate,
    zeta_value,
)


class TestPrecisionContext:
    def test_rejects_too_few_digits(self):
        with pytest.raises(DomainError):
            PrecisionContext(10)

    def test_rejects_non_integer_digits(self):
        with pytest.raises(DomainError):
            PrecisionContext(True)

    def test_rejects_unrepresentable_tolerance(self):
        with pytest.raises(DomainError):
            PrecisionContext(50, ode_tol="1e-60")

    def test_explicit_tolerances_win(self):
        pc = PrecisionContext(40, series_tol="1e-20", ode_tol="1e-25")
        assert pc.series_eps() == pc.mp.mpf("1e-20")
        assert pc.ode_eps() == pc.mp.mpf("1e-25")

    def test_contexts_are_cached_per_precision(self):
        assert PrecisionContext(60).mp is PrecisionContext(60).mp
        assert PrecisionContext(60).mp.dps == 60


class TestConstants:
    def test_zeta_closed_forms(self, pc, ctx):
        assert abs(zeta_value(2, pc) - ctx.pi ** 2 / 6) < pc.eps(2)
        assert abs(zeta_value(4, pc) - ctx.pi ** 4 / 90) < pc.eps(2)
        assert abs(zeta_value(3, pc) - ctx.mpf("1.2020569031595942853997381615114499907649862923405")) < pc.eps(3)

    @pytest.mark.parametrize("k", [0, 1, -3])
    def test_zeta_rejects_small_k(self, pc, k):
        with pytest.raises(DomainError):
            zeta_value(k, pc)

    def test_euler_gamma_at_30_digits(self):
        pc = PrecisionContext(30)
        expected = pc.mp.mpf("0.577215664901532860606512090082")
        assert abs(euler_gamma(pc) - expected) < pc.eps(1)


class TestGammaOfNilpotent:
    def test_p1(self, pc):
        p = projective_space(1).basis(1)
        value = gamma_of_one_plus_nilpotent(p, pc)
        assert abs(value.coeffs[0] - 1) < pc.eps(2)
        assert abs(value.coeffs[1] + euler_gamma(pc)) < pc.eps(2)

    def test_reflection_on_p1(self, pc):
        p = projective_space(1).basis(1)
        product = gamma_of_one_plus_nilpotent(p, pc).cup(gamma_of_one_plus_nilpotent(-p, pc))
        assert abs(product.coeffs[0] - 1) < pc.eps(2)
        assert abs(product.coeffs[1]) < pc.eps(2)

    def test_reflection_on_p2_matches_pi_x_over_sin(self, pc, ctx):
        p = projective_space(2).basis(1)
        product = gamma_of_one_plus_nilpotent(p, pc).cup(gamma_of_one_plus_nilpotent(-p, pc))
        expected = [1, 0, ctx.pi ** 2 / 6]
        for got, want in zip(product.coeffs, expected):
            assert abs(got - want) < pc.eps(3)

    def test_rejects_unit(self, pc):
        with pytest.raises(DomainError):
            gamma_of_one_plus_nilpotent(projective_space(1).unit(), pc)


class TestBranchedValue:
    def test_full_turn_keeps_point_but_not_argument(self, ctx):
        z = BranchedValue(1)
        turned = z.rotated(2)
        assert turned.pi_shift == Fraction(2)
        assert abs(turned.point(ctx) - 1) < ctx.mpf(10) ** -45
        assert abs(turned.arg(ctx) - 2 * ctx.pi) < ctx.mpf(10) ** -45

    def test_from_pi(self, ctx):
        z = BranchedValue.from_pi(2, "1/2")
        assert abs(z.point(ctx) - 2j) < ctx.mpf(10) ** -45

    def test_rejects_non_positive_modulus(self):
        with pytest.raises(DomainError):
            BranchedValue(0)


class TestBranchPower:
    def test_zero_exponent_is_identity(self, pc, ctx):
        m = branch_power(BranchedValue(3), ctx.zeros(2, 2), pc)
        assert max_abs(m - ctx.eye(2)) == 0

    def test_diagonal_exponent(self, pc, ctx):
        m = branch_power(BranchedValue(ctx.e), diag(ctx, [-1, 0, 1]), pc)
        assert abs(m[0, 0] - ctx.exp(-1)) < pc.eps(2)
        assert abs(m[1, 1] - 1) < pc.eps(2)
        assert abs(m[2, 2] - ctx.e) < pc.eps(2)

    def test_nilpotent_exponent_sees_the_branch(self, pc, ctx):
        c1 = ctx.matrix([[0, 0], [2, 0]])
        before = branch_power(BranchedValue(1), c1, pc)
        after = branch_power(BranchedValue.from_pi(1, 2), c1, pc)
        assert abs(before[1, 0]) < pc.eps(2)
        assert abs(after[1, 0] - 4j * ctx.pi) < pc.eps(2)


class TestEigen:
    def test_identity_is_one_cluster(self, pc, ctx):
        report = eigen_decompose(ctx.eye(3), pc)
        assert len(report.clusters) == 1
        assert report.clusters[0][1] == 3

    def test_values_sorted_by_real_part(self, pc, ctx):
        report = eigen_decompose(ctx.matrix([[0, 2], [2, 0]]), pc)
        assert abs(report.values[0] - 2) < pc.eps(10)
        assert abs(report.values[1] + 2) < pc.eps(10)
        assert max(report.residuals) < pc.eps(10)

    def test_close_real_parts_keep_their_order(self, pc, ctx):
        tiny = ctx.mpf(10) ** -20
        report = eigen_decompose(ctx.matrix([[1, 0], [0, 1 + tiny]]), pc)
        assert ctx.re(report.values[0] - report.values[1]) > tiny / 2

    def test_equal_real_parts_order_by_imaginary_part(self, pc, ctx):
        report = eigen_decompose(ctx.matrix([[0, -1], [1, 0]]), pc)
        assert ctx.im(report.values[0]) > 0 > ctx.im(report.values[1])

    def test_condition_number_of_identity(self, ctx):
        assert condition_number(ctx, ctx.eye(3)) == 1


class TestODE:
    def test_rank_one_ray(self, pc, ctx):
        system = FlatSystem(ctx.matrix([[2]]), (Fraction(0),))
        init = BranchedValue(1, 0, Fraction(0), ctx.matrix([[ctx.exp(-2)]]))
        path = ode_integrate(system, Ray(1, 2), init, pc)
        assert path.steps > 0
        assert abs(path.end.value[0, 0] / ctx.exp(-1) - 1) < ctx.mpf(10) ** -35

    def test_rank_one_half_circle(self, pc, ctx):
        system = FlatSystem(ctx.matrix([[2]]), (Fraction(0),))
        init = BranchedValue(1, 0, Fraction(0), ctx.matrix([[ctx.exp(-2)]]))
        end = ode_integrate(system, Arc(pi_sweep=Fraction(1)), init, pc).end
        assert end.pi_shift == Fraction(1)
        assert abs(end.value[0, 0] / ctx.exp(2) - 1) < ctx.mpf(10) ** -35

    def test_euler_equation_matches_branch_power(self, pc, ctx):
        mu = (Fraction(-1, 2), Fraction(1, 2))
        system = FlatSystem(ctx.zeros(2, 2), mu)
        init = BranchedValue(1, 0, Fraction(0), ctx.eye(2))
        end = ode_integrate(system, Ray(1, 3), init, pc).end
        expected = branch_power(BranchedValue(3), diag(ctx, [-m for m in mu]), pc)
        for i in range(2):
            assert abs(end.value[i, i] - expected[i, i]) < ctx.mpf(10) ** -35

    def test_ray_must_start_at_the_initial_point(self, pc, ctx):
        system = FlatSystem(ctx.matrix([[1]]), (Fraction(0),))
        init = BranchedValue(1, 0, Fraction(0), ctx.matrix([[1]]))
        with pytest.raises(DomainError):
            ode_integrate(system, Ray(2, 3), init, pc)

    def test_needs_an_initial_value(self, pc, ctx):
        system = FlatSystem(ctx.matrix([[1]]), (Fraction(0),))
        with pytest.raises(DomainError):
            ode_integrate(system, Ray(1, 2), BranchedValue(1), pc)

    @pytest.mark.parametrize("euler, mu, start, exact", [
        ([[-2]], Fraction(0), lambda ctx: ctx.exp(2), lambda ctx: ctx.e),
        ([[0]], Fraction(1, 2), lambda ctx: ctx.one, lambda ctx: 1 / ctx.sqrt(2)),
    ])
    def test_halving_the_tolerance_halves_the_error(self, euler, mu, start, exact):
        def error(ode_tol):
            pc = PrecisionContext(50, ode_tol=ode_tol)
            ctx = pc.mp
            init = BranchedValue(1, 0, Fraction(0), ctx.matrix([[start(ctx)]]))
            end = ode_integrate(FlatSystem(ctx.matrix(euler), (mu,)), Ray(1, 2), init, pc).end
            return abs(end.value[0, 0] - exact(ctx))

        coarse, fine = error("1e-12"), error("5e-13")
        assert coarse > 0
        assert fine <= coarse / 2


def test_cauchy_coefficients_of_exp(ctx):
    coeffs = cauchy_coefficients(ctx, lambda w: ctx.matrix([[ctx.exp(w)]]), ctx.one, 4, 32)
    for k, c in enumerate(coeffs):
        assert abs(c[0, 0] - 1 / ctx.factorial(k)) < ctx.mpf(10) ** -30
