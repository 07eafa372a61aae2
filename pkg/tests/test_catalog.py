import math

import numpy as np
import pytest

from dupsolve.catalog import (
    AdditionDomain,
    additive_formula,
    construct_numeric,
    example1_double,
    exponential_formula,
    power_rule_addition,
    root_rule_addition,
    weierstrass_double,
)
from dupsolve.errors import (
    DomainError,
    NotMonotone,
    OutsideAdditionDomain,
    PoleError,
)
from dupsolve.reference import closed_form_example2


class TestExponential:
    R = exponential_formula()

    def test_product(self):
        assert self.R(2.0, 3.0) == 6.0

    def test_identity(self):
        assert self.R(1.0, 0.37) == 0.37

    def test_addition_law(self):
        assert abs(self.R(math.exp(0.3), math.exp(0.4)) - math.exp(0.7)) <= 1e-14


class TestPowerRule:
    def test_double_angle_specialization(self):
        R = power_rule_addition(1, 1.0)
        for x in (0.5, 0.9, 1.3):
            assert R(x, x) == pytest.approx(x / (2 - x), rel=1e-15)

    def test_identity(self):
        R = power_rule_addition(1, 1.0)
        assert R(1.0, 0.77) == pytest.approx(0.77, rel=1e-15)

    def test_cubic_addition_law(self):
        R = power_rule_addition(2, 1.0)
        x = lambda t: (1 - 2 * t) ** -0.5  # noqa: E731
        assert abs(R(x(0.1), x(0.2)) - x(0.3)) <= 1e-12

    def test_pole(self):
        # x0^n (x^n + y^n) = x^n y^n at x = y = 2 x0 for n = 1
        with pytest.raises(PoleError):
            power_rule_addition(1, 1.0)(2.0, 2.0)

    def test_even_negative_radicand(self):
        with pytest.raises(DomainError):
            power_rule_addition(2, 1.0)(3.0, 3.0)

    def test_odd_negative_radicand_uses_real_root(self):
        R = power_rule_addition(1, 1.0)
        assert R(3.0, 3.0) == pytest.approx(9 / (6 - 9))

    @pytest.mark.parametrize("n", [0, -1])
    def test_bad_n(self, n):
        with pytest.raises(ValueError):
            power_rule_addition(n)


class TestRootRule:
    def test_identity(self):
        R = root_rule_addition(2, 1.5)
        for y in (0.4, 1.0, 3.0):
            assert R(1.5, y) == pytest.approx(y, rel=1e-14)

    def test_arithmetic(self):
        assert root_rule_addition(1, 1.0)(4.0, 9.0) == pytest.approx(16.0, rel=1e-15)

    def test_addition_law(self):
        R = root_rule_addition(1, 1.0)
        x = lambda t: (1 + t / 2) ** 2  # noqa: E731
        assert abs(R(x(0.2), x(0.4)) - x(0.6)) <= 1e-13

    def test_negative_inner_sum(self):
        with pytest.raises(DomainError):
            root_rule_addition(1, 4.0)(0.1, 0.1)


class TestDoubleAngle:
    def test_example1(self):
        R = example1_double(1.0)
        assert R(1.5) == 3.0
        assert R(1.0) == 1.0
        with pytest.raises(PoleError):
            R(2.0)

    @pytest.mark.parametrize("eps", [1e-6, 1e-3])
    def test_weierstrass_fixed_point(self, eps):
        R = weierstrass_double(eps)
        x0 = -5 / 12 + eps
        assert abs(R(x0) - x0) <= 1e-9

    @pytest.mark.parametrize("eps", [1e-12, 1e-6, 1e-2])
    def test_weierstrass_doubles_time(self, eps):
        R = weierstrass_double(eps)
        x = closed_form_example2(eps)
        for t in np.linspace(0.1, 0.5, 9):
            assert abs(R(x(t)) - x(2 * t)) <= 1e-8

    def test_printed_variant_misses_fixed_point(self):
        eps = 1e-6
        R = weierstrass_double(eps, as_printed=True)
        x0 = -5 / 12 + eps
        assert abs(R(x0) - x0) > 1e-6

    def test_beta_vanishes_at_quarter(self):
        assert weierstrass_double(0.25).meta["beta"] == 0.0

    def test_radicand_domain(self):
        with pytest.raises(DomainError):
            weierstrass_double(1e-6)(-1.0)

    @pytest.mark.parametrize("eps", [0.0, -1e-3, 0.3])
    def test_epsilon_range(self, eps):
        with pytest.raises(ValueError):
            weierstrass_double(eps)


class TestNumericConstruction:
    R = construct_numeric(math.exp, AdditionDomain(-1.0, 1.0))

    def test_reproduces_product(self):
        dom = self.R.meta["domain"]
        xs = np.exp(np.linspace(-0.45, 0.45, 10))
        for x in xs:
            for y in xs:
                assert dom.contains(x, y)
                assert abs(self.R(x, y) - x * y) <= 1e-11

    def test_identity(self):
        for y in (0.5, 1.0, 2.0):
            assert abs(self.R(1.0, y) - y) <= 1e-11

    def test_outside_domain(self):
        with pytest.raises(OutsideAdditionDomain):
            self.R(math.exp(0.75), math.exp(0.75))
        assert not self.R.meta["domain"].contains(math.exp(0.75), math.exp(0.75))

    def test_outside_image(self):
        with pytest.raises(OutsideAdditionDomain):
            self.R(10.0, 1.0)

    def test_not_monotone(self):
        with pytest.raises(NotMonotone):
            construct_numeric(math.cos, (-1.0, 1.0))

    def test_decreasing_phi(self):
        R = construct_numeric(lambda t: math.exp(-t), (-1.0, 1.0))
        assert R(math.exp(-0.2), math.exp(-0.3)) == pytest.approx(math.exp(-0.5), rel=1e-12)

    def test_sampled_phi(self):
        ts = np.linspace(-1, 1, 4097)
        R = construct_numeric((ts, np.tanh(ts)), (-1.0, 1.0))
        x, y = math.tanh(0.2), math.tanh(0.3)
        assert R(x, y) == pytest.approx((x + y) / (1 + x * y), rel=1e-9)


class TestAdditionLaws:
    @pytest.mark.parametrize(
        "formula",
        [
            power_rule_addition(1),
            power_rule_addition(2),
            power_rule_addition(3),
            root_rule_addition(1),
            root_rule_addition(2),
            exponential_formula(),
            additive_formula(2.5),
        ],
        ids=lambda f: f.name,
    )
    def test_law_on_grid(self, formula):
        lo, hi = formula.t_range
        ts = np.linspace(lo / 2, hi / 2, 11)
        x = formula.solution
        for t in ts:
            for tau in ts:
                assert abs(formula(x(t), x(tau)) - x(t + tau)) <= 1e-10
