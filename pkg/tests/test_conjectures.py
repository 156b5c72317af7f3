import pytest

from lib import spaces
from lib.conjectures import (
    ConvergenceTable,
    asymptotic_fit,
    fubini_study_distance,
    gamma1_flat_form_test,
    gamma1_limit_test,
    least_squares,
    perron_vector,
    small_t_direction,
    smallest_safe_z,
    t_spread,
)
from lib.errors import DomainError, PrecisionError
from lib.numerics import euler_gamma


class TestHelpers:
    def test_fubini_study_distance(self, ctx):
        assert fubini_study_distance([1, 2], [2, 4], ctx) < ctx.mpf(10) ** -40
        assert fubini_study_distance([1, 2], [-3j, -6j], ctx) < ctx.mpf(10) ** -40
        assert abs(fubini_study_distance([1, 0], [0, 1], ctx) - ctx.pi / 2) < ctx.mpf(10) ** -40

    def test_fubini_study_distance_of_zero(self, ctx):
        with pytest.raises(DomainError):
            fubini_study_distance([0, 0], [1, 0], ctx)

    def test_least_squares_recovers_a_line(self, ctx):
        fit = least_squares([[1, x] for x in (0, 1, 2, 3)], [1 + 2 * x for x in (0, 1, 2, 3)], ctx)
        assert abs(fit.coefficients[0] - 1) < ctx.mpf(10) ** -40
        assert abs(fit.coefficients[1] - 2) < ctx.mpf(10) ** -40
        assert fit.residual < ctx.mpf(10) ** -40

    def test_least_squares_needs_enough_points(self, ctx):
        with pytest.raises(DomainError):
            least_squares([[1, 0, 0]], [1], ctx)

    def test_t_spread(self):
        assert t_spread([2, 2, 2]) == 0
        assert abs(t_spread([2.0, 1.98]) - 0.01) < 1e-12

    def test_convergence_table_needs_an_increasing_grid(self):
        with pytest.raises(DomainError):
            ConvergenceTable("P1", (2, 1), (0.1, 0.05), 1, 0, 1, 0, None)


class TestLimitForm:
    def test_grid_is_validated(self, pc, p1):
        with pytest.raises(DomainError):
            gamma1_limit_test(p1, [5], pc)
        with pytest.raises(DomainError):
            gamma1_limit_test(p1, [-1, 2], pc)

    @pytest.mark.slow
    def test_p1_converges_at_rate_one_over_t(self, pc, p1):
        table = gamma1_limit_test(p1, [10, 20, 40, 80], pc)
        assert table.decreasing
        assert 0.8 <= table.alpha <= 1.2
        assert abs(table.limit_ratio + 2 * euler_gamma(pc)) < 0.05
        for _, ratio in table.doubling_ratios():
            assert 0.4 < ratio < 0.6

    def test_small_t_points_to_the_top_class(self, pc, p1):
        report = small_t_direction(p1, pc)
        assert report.distance_to_top < report.distance_to_gamma
        assert report.distance_to_top < 0.05


class TestFlatForm:
    def test_perron_vector_of_p1(self, pc, ctx, p1):
        T, vec, exact = perron_vector(p1, pc)
        assert exact
        assert T == 2
        assert fubini_study_distance(vec, [1, 1], ctx) < pc.eps(5)

    def test_smallest_safe_z(self, p1):
        assert abs(smallest_safe_z(p1, 400) - 0.00451) < 1e-5

    def test_refuses_z_that_needs_too_many_digits(self, pc, p1):
        with pytest.raises(PrecisionError) as err:
            gamma1_flat_form_test(p1, ["0.001"], pc, max_digits=100)
        assert err.value.required_digits > 100

    def test_unknown_method(self, pc, p1):
        with pytest.raises(DomainError):
            gamma1_flat_form_test(p1, ["0.5"], pc, method="magic")

    def test_z_must_be_positive(self, pc, p1):
        with pytest.raises(DomainError):
            gamma1_flat_form_test(p1, [0], pc)

    @pytest.mark.slow
    def test_structure_sheaf_approaches_the_perron_vector(self, pc, p1):
        report = gamma1_flat_form_test(p1, ["0.5", "0.25", "0.1", "0.05"], pc)
        assert report.decreasing
        assert report.final_angle < 0.1
        assert report.exact_perron

    @pytest.mark.slow
    def test_ode_continuation_agrees_with_the_series(self, pc, p1):
        grid = ["0.5", "0.2", "0.1"]
        series = gamma1_flat_form_test(p1, grid, pc)
        ode = gamma1_flat_form_test(p1, grid, pc, method="ode")
        for a, b in zip(series.points, ode.points):
            assert abs(a.angle - b.angle) < 1e-10

    @pytest.mark.slow
    def test_other_line_bundles_do_not_approach_it(self, pc, p1):
        report = gamma1_flat_form_test(p1, ["0.25", "0.1", "0.05"], pc, bundle=p1.lattice.named("O(1)"))
        assert report.final_angle > 0.1


@pytest.mark.slow
def test_growth_law_of_p1(pc, p1):
    report = asymptotic_fit(p1, list(range(20, 61, 5)), pc)
    assert 1.99 <= report.T <= 2.01
    assert report.T_relative_error < 0.005
    assert abs(report.exponent - 0.5) < 0.1
