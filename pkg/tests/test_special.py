from __future__ import annotations

import math

import mpmath
import numpy as np
import pytest
import scipy.special as sp
from hypothesis import given, strategies as st

from hardy_poincare.special import bessel_j, bessel_j_first_zero, gamma


@pytest.mark.parametrize("x", [0.5, 1.0, 1.5, 2.5, 3.7, 7.25, 12.0, 25.5, 49.9])
def test_gamma_matches_scipy(x):
    assert gamma(x) == pytest.approx(sp.gamma(x), rel=1e-13)


def test_gamma_half_integer():
    assert gamma(0.5) == pytest.approx(math.sqrt(math.pi), rel=1e-14)
    assert gamma(5.0) == pytest.approx(24.0, rel=1e-14)


def test_bessel_order_zero_at_origin():
    assert bessel_j(0.0, 0.0) == 1.0


def test_bessel_half_order_vanishes_at_pi():
    assert abs(bessel_j(0.5, math.pi)) < 1e-14


def test_bessel_j0_at_oracle_zero(z0_oracle):
    assert abs(bessel_j(0.0, z0_oracle)) < 1e-10


@given(order=st.floats(0.0, 6.0), x=st.floats(0.0, 20.0))
def test_bessel_matches_scipy(order, x):
    # scipy underflows for subnormal x where (x/2)^order is still sizeable
    ref = sp.jv(order, x) if x > 1e-100 else float(mpmath.besselj(order, x))
    assert abs(bessel_j(order, x) - ref) <= 1e-12


@given(order=st.floats(-0.5, 0.0), x=st.floats(1e-3, 20.0))
def test_bessel_negative_order_matches_scipy(order, x):
    ref = sp.jv(order, x)
    assert abs(bessel_j(order, x) - ref) <= 1e-12 * max(1.0, abs(ref))


def test_bessel_half_order_closed_form():
    for x in np.linspace(0.1, 20.0, 50):
        exact = math.sqrt(2.0 / (math.pi * x)) * math.sin(x)
        assert abs(bessel_j(0.5, x) - exact) < 1e-13


@pytest.mark.parametrize("order", [0.0, 0.5, 1.0, 1.5, 2.0, 4.0])
def test_first_zero_matches_scipy(order):
    ref = sp.jn_zeros(int(order), 1)[0] if order == int(order) else None
    z = bessel_j_first_zero(order)
    if ref is not None:
        assert z == pytest.approx(ref, abs=1e-12)
    assert abs(sp.jv(order, z)) < 1e-13


def test_first_zero_half_order_is_pi():
    assert bessel_j_first_zero(0.5) == pytest.approx(math.pi, abs=1e-13)


def test_bessel_rejects_bad_order():
    with pytest.raises(ValueError):
        bessel_j(-1.0, 1.0)
    with pytest.raises(ValueError):
        bessel_j(0.0, -1.0)
