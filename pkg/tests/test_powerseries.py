from __future__ import annotations

import math

import numpy as np
import pytest

from hardy_poincare.powerseries import GSeries, binomial_power, signed_power


def test_arithmetic_and_evaluation():
    a = GSeries.monomial(2.0, 1.0, 0.5) + 1.0
    b = GSeries.monomial(-1.0, 2.0, 0.5)
    x = 0.3
    assert (a * b)(x) == pytest.approx((1 + 2 * x) * (-x * x), rel=1e-15)
    assert (a - b)(x) == pytest.approx(1 + 2 * x + x * x, rel=1e-15)
    assert (-a)(x) == pytest.approx(-(1 + 2 * x))


def test_integrate_and_derivative():
    s = GSeries.constant(1.0, 0.5) + GSeries.monomial(3.0, 1.5, 0.5)
    i = s.integrate()
    x = 0.4
    assert i(x) == pytest.approx(x + 3.0 * x**2.5 / 2.5, rel=1e-15)
    assert s.derivative_at(x) == pytest.approx(4.5 * x**0.5, rel=1e-14)


def test_binomial_power_matches_direct():
    u = GSeries.monomial(0.3, 1.0, 0.5) + GSeries.monomial(-0.1, 2.0, 0.5)
    s = binomial_power(u, 1.7)
    for x in (0.05, 0.2, 0.45):
        assert s(x) == pytest.approx((1 + 0.3 * x - 0.1 * x * x) ** 1.7, rel=1e-13)


def test_signed_power_handles_negative_leading_term():
    s = GSeries.monomial(-2.0, 1.0, 0.3) + GSeries.monomial(0.5, 2.0, 0.3)
    t = signed_power(s, 0.5)
    for x in (0.01, 0.1, 0.25):
        v = -2 * x + 0.5 * x * x
        assert t(x) == pytest.approx(math.copysign(abs(v) ** 0.5, v), rel=1e-12)


def test_sup_bounds_values():
    s = GSeries.monomial(1.0, 1.0, 0.5) - GSeries.monomial(4.0, 3.0, 0.5)
    xs = np.linspace(0, 0.5, 101)
    assert np.max(np.abs(s(xs))) <= s.sup() + 1e-15
