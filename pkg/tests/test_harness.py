from __future__ import annotations

import json
import math

import numpy as np
import pytest

from conftest import Z0
from hardy_poincare import harness as hn
from hardy_poincare import testfunctions as tf
from hardy_poincare.constants import lambda_p
from hardy_poincare.errors import DivergentIntegral, DomainError, SingularQuotient
from hardy_poincare.phi_ode import DEFAULT_TOL, PLapParams
from hardy_poincare.quadrature import integrate_on_panels

GRID = [(p, th) for p in (2.0, 3.0, 4.0) for th in (1.0, 2.0, 3.0)]
QS = (2.0, 3.0, 4.0, 5.0)


def prm(p, theta, R=1.0):
    return PLapParams(p, theta, 0.0, R)


# ---------------------------------------------------------------------------
# radial reduction


def test_reduce_radial_examples():
    assert hn.reduce_radial(2.0, lambda r: np.ones_like(r), 1.0).value == pytest.approx(1 / 3, abs=1e-15)
    f = tf.one_minus_r2()
    v = hn.reduce_radial(1.0, lambda r: f.deriv(r) ** 2, 1.0).value
    assert v == pytest.approx(1.0, abs=1e-14)
    g = tf.poly_r_1mr()
    assert hn.reduce_radial(0.0, lambda r: g.eval(r) ** 2, 1.0).value == pytest.approx(1 / 30, abs=1e-15)
    assert hn.reduce_radial(2.0, lambda r: g.eval(r) ** 2, 1.0).value == pytest.approx(1 / 105, abs=1e-15)


def test_reduce_radial_refuses_divergent_integrals():
    with pytest.raises(DivergentIntegral):
        hn.reduce_radial(-1.0, lambda r: np.ones_like(r), 1.0)
    with pytest.raises(DivergentIntegral):
        hn.reduce_radial(-2.5, lambda r: r, 1.0, order_at_origin=0.5)
    v = hn.reduce_radial(-2.5, lambda r: r**2, 1.0, order_at_origin=2.0)
    assert v.value == pytest.approx(2.0, rel=1e-10)
    w = hn.reduce_radial(-5.0, lambda r: np.ones_like(r), 1.0, support=(0.5, 1.0), vanishes_near_origin=True)
    assert w.value == pytest.approx((0.5**-4 - 1) / 4, rel=1e-12)


def test_reduce_radial_support_check():
    with pytest.raises(DomainError):
        hn.reduce_radial(0.0, lambda r: r, 1.0, support=(0.0, 2.0))


# ---------------------------------------------------------------------------
# Poincare


def test_poincare_zero_function():
    rep = hn.poincare_gap(prm(3.0, 2.0), 3.0, tf.zero_function())
    assert rep.gap == 0.0 and rep.lhs == 0.0


def test_poincare_one_minus_r2():
    rep = hn.poincare_gap(prm(2.0, 2.0), 2.0, tf.one_minus_r2())
    assert rep.lhs == pytest.approx(1.0, abs=1e-9)
    assert rep.rhs_total == pytest.approx(Z0**2 / 6, abs=1e-9)
    assert rep.gap == pytest.approx(1.0 - Z0**2 / 6, abs=1e-9)


@pytest.mark.parametrize("p,theta", GRID)
def test_poincare_extremal_equality(p, theta):
    params = prm(p, theta, 1.3)
    f = hn.extremal_function(params)
    rep = hn.poincare_gap(params, 3.0, f)
    assert abs(rep.gap) <= 10 * (rep.quad_err + DEFAULT_TOL) * max(1.0, rep.lhs)


@pytest.mark.parametrize("p,theta", GRID)
def test_poincare_holds_for_random_profiles(p, theta):
    params = prm(p, theta)
    family = tf.random_family(200, 1.0, seed=int(10 * p + theta))
    reps = [hn.poincare_gap(params, 3.0, f) for f in family]
    assert all(r.gap >= -10 * r.quad_err for r in reps)


def test_poincare_does_not_depend_on_Q():
    f = tf.boundary_bump(1.0, 2.5)
    gaps = {hn.poincare_gap(prm(3.0, 2.0), Q, f).gap for Q in QS}
    assert len(gaps) == 1


@pytest.mark.parametrize("p,theta", [(2.0, 2.0), (3.0, 1.0), (4.0, 3.0)])
def test_poincare_gap_rescales(p, theta):
    f = tf.boundary_bump(1.0, 2.0)
    a = hn.poincare_gap(prm(p, theta, 1.0), 3.0, f)
    b = hn.poincare_gap(prm(p, theta, 2.0), 3.0, f.rescaled(2.0))
    assert b.gap == pytest.approx(2.0 ** (theta - p) * a.gap, rel=1e-9)
    assert b.lhs == pytest.approx(2.0 ** (theta - p) * a.lhs, rel=1e-11)


def test_poincare_preconditions():
    with pytest.raises(DomainError):
        hn.poincare_gap(prm(2.0, 2.0), 3.0, tf.one_minus_r2(2.0))
    half = tf.RadialTestFunction("half", lambda r: 1 - r / 2, lambda r: -0.5 * np.ones_like(r), (0.0, 1.0),
                                 False, False)
    with pytest.raises(DomainError):
        hn.poincare_gap(prm(2.0, 2.0), 3.0, half)
    with pytest.raises(DomainError):
        hn.poincare_gap(prm(2.0, 2.0), -1.0, tf.one_minus_r2())


# ---------------------------------------------------------------------------
# square identity


def test_identity_for_extremal_is_trivial():
    params = prm(3.0, 2.0)
    rep = hn.radial_identity_residual(params, 3.0, hn.extremal_function(params))
    assert abs(rep.lhs) <= 1e-9 and abs(rep.rhs_total) <= 1e-9 and rep.gap <= 1e-9


def test_identity_one_minus_r2():
    rep = hn.radial_identity_residual(prm(2.0, 2.0), 2.0, tf.one_minus_r2())
    assert rep.gap <= 1e-8
    assert rep.rhs_total == pytest.approx(1.0 - Z0**2 / 6, abs=1e-8)


def test_identity_zero_function():
    assert hn.radial_identity_residual(prm(2.0, 1.0), 2.0, tf.zero_function()).gap == 0.0


@pytest.mark.parametrize("p,theta", GRID)
def test_identity_residual_on_presets(p, theta):
    params = prm(p, theta)
    for name in ("boundary_bump", "one_minus_r2", "interior_bump", "poly_r_1mr"):
        rep = hn.radial_identity_residual(params, 3.0, hn.make_preset(name, params))
        assert rep.gap <= 10 * (rep.quad_err + DEFAULT_TOL) * max(1.0, rep.lhs)


def test_identity_needs_boundary_vanishing():
    f = tf.RadialTestFunction("shifted", lambda r: 1.1 - r**2, lambda r: -2 * r, (0.0, 1.0), False, True)
    with pytest.raises(SingularQuotient):
        hn.radial_identity_residual(prm(2.0, 2.0), 2.0, f)


# ---------------------------------------------------------------------------
# Hardy improvements


def test_hardy1_worked_example():
    rep = hn.hardy1_gap(prm(2.0, 1.0), 3.0, tf.poly_r_1mr())
    terms = dict(rep.rhs_terms)
    assert rep.lhs == pytest.approx(2 / 15, abs=1e-9)
    assert terms["hardy_term"] == pytest.approx(1 / 120, abs=1e-9)
    assert terms["remainder"] == pytest.approx(Z0**2 / 105, abs=1e-9)
    assert rep.gap == pytest.approx(2 / 15 - 1 / 120 - Z0**2 / 105, abs=1e-9)


def test_hardy1_heisenberg_dimension():
    rep = hn.hardy1_gap(prm(2.0, 1.0), 4.0, tf.poly_r_1mr())
    terms = dict(rep.rhs_terms)
    # int_0^1 (1-2r)^2 r^3 = 7/60, 1^2 int r^3 (1-r)^2 = 1/60, z0^2 int r^5 (1-r)^2 = z0^2/168
    assert rep.lhs == pytest.approx(7 / 60, abs=1e-12)
    assert terms["hardy_term"] == pytest.approx(1 / 60, abs=1e-12)
    assert terms["remainder"] == pytest.approx(Z0**2 / 168, abs=1e-12)
    assert rep.gap > 0.0


def test_hardy1_uses_lambda_and_theta_independent_zero():
    f = tf.interior_bump(1.0)
    rep = hn.hardy1_gap(prm(3.0, 2.0), 5.0, f)
    mass = hn.reduce_radial(5.0 - 1.0 - 3.0, lambda r: np.abs(f.eval(r)) ** 3, 1.0, support=f.support,
                            vanishes_near_origin=True).value
    expected = lambda_p(3.0).value * hn.nu1(3.0, 3.0) ** 3 * mass
    assert dict(rep.rhs_terms)["remainder"] == pytest.approx(expected, rel=1e-10)


@pytest.mark.parametrize("p", [2.0, 3.0, 4.0])
@pytest.mark.parametrize("theta", [1.0, 2.0, 3.0])
@pytest.mark.parametrize("Q", QS)
def test_hardy_bounds_hold_on_admissible_profiles(p, theta, Q):
    params = prm(p, theta)
    family = tf.random_family(200, 1.0, seed=int(100 * p + 10 * theta + Q))
    for f in family + [tf.interior_bump(1.0)]:
        for check in (hn.hardy1_gap, hn.hardy2_gap):
            try:
                rep = check(params, Q, f)
            except DivergentIntegral:
                assert not f.vanishes_at_origin_neighborhood
                continue
            assert rep.gap >= -10 * rep.quad_err


def test_hardy_type2_smooth_bump():
    rep = hn.hardy2_gap(prm(4.0, 1.0), 5.0, tf.interior_bump(1.0))
    assert rep.gap >= -10 * rep.quad_err


@pytest.mark.parametrize("theta,Q", [(1.0, 3.0), (2.0, 5.0), (1.5, 4.0), (3.0, 7.0)])
@pytest.mark.parametrize("fn", ["interior_bump", "boundary_bump:3"])
def test_types_coincide_when_p_is_two(theta, Q, fn):
    params = prm(2.0, theta)
    f = hn.make_preset(fn, params)
    try:
        a = hn.hardy1_gap(params, Q, f)
    except DivergentIntegral:
        pytest.skip("profile not admissible for this weight")
    b = hn.hardy2_gap(params, Q, f)
    for (ka, va), (kb, vb) in zip(a.rhs_terms, b.rhs_terms):
        assert ka == kb
        assert abs(va - vb) <= 1e-12 * max(abs(va), 1e-300)
    assert abs(a.lhs - b.lhs) <= 1e-12 * abs(a.lhs)


def test_hardy_zero_function():
    for check in (hn.hardy1_gap, hn.hardy2_gap):
        assert check(prm(3.0, 2.0), 4.0, tf.zero_function()).gap == 0.0


def test_hardy_refuses_divergent_configuration():
    with pytest.raises(DivergentIntegral):
        hn.hardy1_gap(prm(2.0, 1.0), 1.0, tf.one_minus_r2())
    with pytest.raises(DivergentIntegral):
        hn.hardy2_gap(prm(3.0, 2.0), 3.0, tf.boundary_bump())


def test_hardy_first_term_vanishes_at_critical_dimension():
    rep = hn.hardy1_gap(prm(3.0, 1.0), 3.0, tf.interior_bump(1.0))
    assert dict(rep.rhs_terms)["hardy_term"] == 0.0


# ---------------------------------------------------------------------------
# sharpness


@pytest.mark.parametrize("p,theta", [(2.0, 2.0), (3.0, 1.0), (4.0, 3.0)])
def test_sharpness_attained_by_extremal(p, theta):
    params = prm(p, theta)
    family = [hn.extremal_function(params), tf.one_minus_r2(), tf.interior_bump()]
    best = hn.sharpness_sweep(params, 3.0, family)
    assert best == pytest.approx(1.0, abs=1e-9)


def test_sharpness_of_one_minus_r2():
    assert hn.sharpness_sweep(prm(2.0, 2.0), 2.0, [tf.one_minus_r2()]) == pytest.approx(Z0**2 / 6, abs=1e-10)


def test_sharpness_ratios_never_exceed_one():
    params = prm(3.0, 2.0)
    ratios = hn.sharpness_ratios(params, tf.random_family(60, 1.0, seed=9))
    assert max(ratios) <= 1.0 + 1e-9


def test_sharpness_needs_family():
    with pytest.raises(DomainError):
        hn.sharpness_sweep(prm(2.0, 2.0), 2.0, [])


# ---------------------------------------------------------------------------
# quadrature honesty


@pytest.mark.parametrize("fn", ["boundary_bump", "interior_bump", "poly_r_1mr", "extremal"])
def test_doubling_nodes_stays_within_reported_error(fn):
    params = prm(3.0, 2.0)
    f = hn.make_preset(fn, params)
    for deriv in (True, False):
        ri = hn._power_integral(f, 3.0, 1.0, deriv, hn.DEFAULT_QUAD_TOL, "test")
        assert abs(integrate_on_panels(ri.integrand, ri.panels) - ri.value) <= ri.error


# ---------------------------------------------------------------------------
# presets, reports and sweeps


def test_make_preset_variants():
    params = prm(2.0, 2.0, 2.0)
    assert hn.make_preset("boundary_bump:3", params).id == "boundary_bump_m3"
    assert hn.make_preset("interior_bump:0.25,0.5", params).support == (0.5, 1.0)
    assert hn.make_preset("zero", params).id == "zero"
    for bad in ("nope", "interior_bump:0.1", "boundary_bump:x"):
        with pytest.raises(DomainError):
            hn.make_preset(bad, params)


def test_nu1_and_z0():
    assert hn.z0() == pytest.approx(Z0, abs=1e-14)
    assert hn.nu1(2.0, 1.0) == pytest.approx(math.pi / 2)
    assert hn.nu1(3.0, 2.0) > 0


def test_report_serialization():
    rep = hn.hardy1_gap(prm(2.0, 1.0), 3.0, tf.poly_r_1mr())
    doc = json.loads(rep.to_json())
    assert doc["inequality"] == "hardy1"
    assert doc["gap"] == rep.gap and doc["rhs_total"] == rep.rhs_total
    assert rep.holds()


def test_sweep_order_and_csv():
    cells = hn.grid_cells(["poincare", "hardy2"], [2.0, 3.0], [1.0], [3.0], [1.0], ["interior_bump", "boundary_bump"])
    serial = hn.sweep(cells)
    parallel = hn.sweep(cells, workers=3)
    assert [r.to_dict() for r in serial] == [r.to_dict() for r in parallel]
    text = hn.sweep_csv(serial)
    lines = text.splitlines()
    assert lines[0] == ",".join(hn.SWEEP_COLUMNS)
    assert len(lines) == len(cells) + 1


def test_run_check_unknown():
    with pytest.raises(DomainError):
        hn.run_check("hardy3", prm(2.0, 1.0), 3.0, tf.one_minus_r2())
