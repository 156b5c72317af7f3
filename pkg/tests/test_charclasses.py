from fractions import Fraction
from math import comb

import pytest

from lib import spaces
from lib.charclasses import (
    a_hat_class,
    check_gamma_ahat,
    dual_gamma,
    euler_gram,
    euler_pairing,
    euler_pairing_exact,
    gamma_class,
    todd_class,
)
from lib.cohomology import tensor_class
from lib.errors import DomainError
from lib.numerics import euler_gamma, zeta_value


class TestGammaClass:
    def test_p1(self, pc, p1):
        g = gamma_class(p1.tangent, pc)
        assert abs(g.coeffs[0] - 1) < pc.eps(2)
        assert abs(g.coeffs[1] + 2 * euler_gamma(pc)) < pc.eps(2)
        assert abs(g.coeffs[1] + pc.mp.mpf("1.154431329803")) < 1e-12

    def test_p2(self, pc, p2):
        g = gamma_class(p2.tangent, pc)
        gamma = euler_gamma(pc)
        assert abs(g.coeffs[1] + 3 * gamma) < pc.eps(2)
        assert abs(g.coeffs[2] - (9 * gamma ** 2 + 3 * zeta_value(2, pc)) / 2) < pc.eps(3)

    def test_multiplicative_on_products(self, pc):
        a, b = spaces.builtin_space("P1"), spaces.builtin_space("P2")
        prod = spaces.builtin_space("P1xP2")
        expected = tensor_class(gamma_class(a.tangent, pc), gamma_class(b.tangent, pc), prod.algebra)
        assert (gamma_class(prod.tangent, pc) - expected).norm() < pc.eps(4)

    def test_dual_gamma_of_p1(self, pc, p1):
        g = dual_gamma(gamma_class(p1.tangent, pc))
        assert abs(g.coeffs[1] - 2 * euler_gamma(pc)) < pc.eps(2)

    @pytest.mark.parametrize("name", ["P1", "P2", "P3", "P1xP1", "F1"])
    def test_gamma_ahat_identity(self, pc, name):
        report = check_gamma_ahat(spaces.builtin_space(name).tangent, pc)
        assert report.passed
        assert report.residual < pc.eps(5)


class TestBernoulliGenera:
    def test_todd_of_p1(self, p1):
        assert todd_class(p1.tangent).coeffs == (1, 1)

    def test_todd_integrates_to_one_on_p2(self, p2):
        assert todd_class(p2.tangent).integrate() == 1

    def test_a_hat_of_p1_is_one(self, p1):
        assert a_hat_class(p1.tangent).coeffs == (1, 0)

    def test_a_hat_of_p2(self, p2):
        # Â = 1 − p₁/24 with p₁(P²) = 3p²
        assert a_hat_class(p2.tangent).coeffs == (1, 0, Fraction(-1, 8))


class TestEulerPairing:
    def test_p1(self, p1):
        o, o1 = p1.lattice.named("O"), p1.lattice.named("O(1)")
        assert euler_pairing_exact(o, o1) == 2
        assert euler_pairing_exact(o1, o) == 0

    @pytest.mark.parametrize("n", [1, 2, 3])
    def test_binomial_formula(self, n):
        space = spaces.projective(n)
        classes = [space.lattice.basis(i) for i in range(n + 1)]
        gram = euler_gram(classes).as_integers()
        for i in range(n + 1):
            for j in range(n + 1):
                assert gram[i][j] == comb(n + j - i, n)

    def test_numeric_pairing_is_integral(self, pc, p2):
        o, o2 = p2.lattice.named("O"), p2.lattice.named("O(2)")
        value = euler_pairing(o, o2, pc)
        assert value.integral
        assert value.integer == 6
        assert value.error < pc.eps(8)


class TestKLattice:
    def test_describe(self, p1):
        assert p1.lattice.element([1, -2]).describe() == "O - 2·O(1)"
        assert p1.lattice.zero().describe() == "0"

    def test_canonical_class_of_p1(self, p1):
        assert p1.lattice.canonical().coeffs == (3, -2)

    def test_non_integral_class_rejected(self, p1):
        half_point = p1.algebra.named("p").scale(Fraction(1, 2))
        with pytest.raises(DomainError):
            p1.lattice.from_ch(half_point)

    def test_tensor_of_line_bundles(self, p2):
        o1 = p2.lattice.named("O(1)")
        assert p2.lattice.tensor(o1, o1) == p2.lattice.named("O(2)")

    def test_serre_twist_on_p1(self, p1):
        o = p1.lattice.named("O")
        # O ⊗ ω[1] = −O(−2) = −(3·O − 2·O(1))
        assert p1.twist_by_omega_shift(o).coeffs == (-3, 2)
        assert p1.twist_by_omega_shift(o, -1).coeffs == (1, -2)
