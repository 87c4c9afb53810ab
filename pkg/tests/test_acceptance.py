"""Acceptance suite: one test per criterion, each recording a PASS/FAIL line."""

from __future__ import annotations

import math
import subprocess
import sys
import time

import numpy as np
import pytest

from conftest import Z0, record, sin_p_zero
from hardy_poincare import geometry as geo
from hardy_poincare import harness as hn
from hardy_poincare import testfunctions as tf
from hardy_poincare.constants import (
    check_bound_type1,
    check_bound_type2,
    check_identity,
    lambda_p,
    margin_scale,
)
from hardy_poincare.phi_ode import PLapParams, find_zeros, solve_p

ODE_TOL = 1e-10
QUAD_TOL = 1e-11
GRID_P = (2.0, 3.0, 4.0)
GRID_THETA = (1.0, 2.0, 3.0)
GRID_Q = (2.0, 3.0, 4.0, 5.0)
PRESETS = ("boundary_bump", "one_minus_r2", "interior_bump", "poly_r_1mr", "extremal")


def ode_nu1(p, theta):
    start = time.perf_counter()
    z = find_zeros(solve_p((p, theta), 2.0 * (1.0 + theta), ODE_TOL), 1).zeros[0]
    return z, time.perf_counter() - start


def test_criterion_01_first_zeros():
    cases = [((2.0, 1.0), math.pi / 2, 1e-10), ((2.0, 2.0), Z0, 1e-8), ((2.0, 3.0), math.pi, 1e-8)]
    errs, times, ok = [], [], True
    for (p, th), ref, tol in cases:
        z, dt = ode_nu1(p, th)
        errs.append(abs(z - ref))
        times.append(dt)
        ok &= abs(z - ref) <= tol and dt < 1.0
    record(1, ok, f"nu1 errors {', '.join(f'{e:.1e}' for e in errs)}; times {', '.join(f'{t:.2f}s' for t in times)}")
    assert ok


def test_criterion_02_theta_one_closed_form():
    start = time.perf_counter()
    errs = {p: abs(ode_nu1(p, 1.0)[0] - sin_p_zero(p)) for p in (2.0, 2.5, 3.0, 4.0, 6.0)}
    dt = time.perf_counter() - start
    ok = max(errs.values()) <= 1e-7 and dt < 5.0
    record(2, ok, f"max |nu1 - closed form| = {max(errs.values()):.1e} over p in {list(errs)}; {dt:.2f}s")
    assert ok


def test_criterion_03_energy_invariant():
    worst = {}
    for p in (2.0, 3.0, 4.0):
        tr = solve_p((p, 1.0), 8.0 * sin_p_zero(p), ODE_TOL)
        e = (p - 1.0) * np.abs(tr.dphi) ** p + np.abs(tr.phi) ** p
        worst[p] = float(np.max(np.abs(e - 1.0)))
    ok = max(worst.values()) <= 1e-8
    record(3, ok, "max energy defect " + ", ".join(f"p={p:g}: {v:.1e}" for p, v in worst.items()))
    assert ok


def test_criterion_04_lambda():
    l2 = lambda_p(2.0).value
    l3 = lambda_p(3.0).value
    a = np.linspace(0.5, 1.0, 2_000_001)
    grid3 = float(np.min(a**3 + (1 - a) ** 2 * (a + 2)))
    ps = np.arange(2.0, 8.0001, 0.25)
    bounds = all(2.0**-p <= lambda_p(p).value <= p * 2.0 ** (1.0 - p) for p in ps)
    ok = abs(l2 - 1.0) <= 1e-12 and abs(l3 - (2 - math.sqrt(2))) <= 1e-10 and abs(l3 - grid3) <= 1e-10 and bounds
    record(4, ok, f"|lambda_2 - 1| = {abs(l2 - 1):.1e}, |lambda_3 - (2-sqrt2)| = {abs(l3 - 2 + math.sqrt(2)):.1e}, "
                  f"grid oracle diff {abs(l3 - grid3):.1e}, bounds on {len(ps)} p values: {bounds}")
    assert ok


def test_criterion_05_pointwise_identity_and_bounds():
    rng = np.random.default_rng(20240501)
    n = 100_000
    P = rng.uniform(2.0, 8.0, n)
    X = rng.uniform(-100.0, 100.0, n)
    Y = rng.uniform(-100.0, 100.0, n)
    id_worst = eq_worst = 0.0
    b1_min = b2_min = math.inf
    for p, x, y in zip(P, X, Y):
        s = margin_scale(p, x, y)
        id_worst = max(id_worst, check_identity(p, x, y) / s)
        b1_min = min(b1_min, check_bound_type1(p, x, y) / s)
        b2_min = min(b2_min, check_bound_type2(p, x, y) / s)
        eq_worst = max(eq_worst, abs(check_bound_type2(p, -y, y)) / margin_scale(p, y, y))
    unit_eq = max(abs(check_bound_type2(p, -y, y)) for p, y in zip(P[:2000], Y[:2000] / 100.0))
    ok = id_worst <= 1e-10 and b1_min >= -1e-10 and b2_min >= -1e-10 and eq_worst <= 1e-11 and unit_eq <= 1e-11
    record(5, ok, f"identity residual/scale {id_worst:.1e}; min margins/scale {b1_min:.1e}, {b2_min:.1e}; "
                  f"x=-y equality/scale {eq_worst:.1e} (|y|<=1 absolute {unit_eq:.1e})")
    assert ok


def test_criterion_06_poincare():
    worst_ratio = -math.inf
    extremal = 0.0
    for p in GRID_P:
        for th in GRID_THETA:
            prm = PLapParams(p, th)
            for Q in GRID_Q:
                for name in PRESETS:
                    rep = hn.poincare_gap(prm, Q, hn.make_preset(name, prm, ODE_TOL), tol=QUAD_TOL, ode_tol=ODE_TOL)
                    if name == "extremal":
                        extremal = max(extremal, abs(rep.gap))
                    else:
                        worst_ratio = max(worst_ratio, -rep.gap / (10 * rep.quad_err))
    ex = hn.poincare_gap(PLapParams(2.0, 2.0), 2.0, tf.one_minus_r2(), tol=QUAD_TOL, ode_tol=ODE_TOL)
    lhs_err, rhs_err = abs(ex.lhs - 1.0), abs(ex.rhs_total - Z0**2 / 6)
    ok = worst_ratio <= 1.0 and extremal <= 1e-7 and lhs_err <= 1e-9 and rhs_err <= 1e-9
    record(6, ok, f"min gap/(10 quad_err) = {-worst_ratio:.3g}; max |extremal gap| = {extremal:.1e}; "
                  f"1-r^2 lhs err {lhs_err:.1e}, rhs err {rhs_err:.1e}")
    assert ok


def test_criterion_07_identity_residual():
    worst = 0.0
    for p in GRID_P:
        for th in GRID_THETA:
            prm = PLapParams(p, th)
            for Q in GRID_Q:
                for name in PRESETS:
                    f = hn.make_preset(name, prm, ODE_TOL)
                    rep = hn.radial_identity_residual(prm, Q, f, tol=QUAD_TOL, ode_tol=ODE_TOL)
                    worst = max(worst, rep.gap)
    ok = worst <= 1e-7
    record(7, ok, f"max identity residual {worst:.1e} over {len(GRID_P) * len(GRID_THETA) * len(GRID_Q)} cells "
                  f"x {len(PRESETS)} profiles")
    assert ok


def test_criterion_08_hardy():
    prm = PLapParams(2.0, 1.0)
    rep = hn.hardy1_gap(prm, 3.0, tf.poly_r_1mr(), tol=QUAD_TOL, ode_tol=ODE_TOL)
    t = dict(rep.rhs_terms)
    errs = (abs(rep.lhs - 2 / 15), abs(t["hardy_term"] - 1 / 120), abs(t["remainder"] - Z0**2 / 105))
    coincide = 0.0
    for th in (1.0, 1.5, 2.0, 3.0):
        for Q in (3.0, 4.0, 5.0, 7.0):
            for f in (tf.interior_bump(1.0), tf.interior_bump(1.0, 0.1, 0.9)):
                a = hn.hardy1_gap(PLapParams(2.0, th), Q, f)
                b = hn.hardy2_gap(PLapParams(2.0, th), Q, f)
                for (_, va), (_, vb) in zip(((None, a.lhs),) + a.rhs_terms, ((None, b.lhs),) + b.rhs_terms):
                    if va != vb:
                        coincide = max(coincide, abs(va - vb) / max(abs(va), abs(vb)))
    ok = max(errs) <= 1e-9 and coincide <= 1e-12
    record(8, ok, f"worked example errors {', '.join(f'{e:.1e}' for e in errs)}; "
                  f"max relative Type I/II term mismatch at p=2: {coincide:.1e}")
    assert ok


def test_criterion_09_geometry():
    specs = [geo.euclidean(2), geo.euclidean(3), geo.heisenberg(1), geo.grushin(1, 1, 1.0), geo.greiner(1, 2.0)]
    z = {}
    orders = []
    for spec in specs:
        fit = geo.fit_scaling_exponent(spec, 0.0, 1.0, 2.0, 1_000_000, seed=2024)
        z[spec.label()] = (fit.Q_fit, fit.z_score)
        for x in (np.linspace(0.4, 0.9, spec.dims), np.linspace(0.9, 0.35, spec.dims)):
            for p in (2.0, 3.0):
                res = [geo.verify_gauge_lemma(spec, p, x, h) for h in (1e-2, 5e-3, 2.5e-3)]
                for vals in ([r.r1 for r in res], [r.r2 for r in res]):
                    if vals[-1] < 1e-11:
                        continue  # identically satisfied up to rounding
                    orders.append(min(geo.convergence_orders(vals)))
    ok = all(v[1] <= 3.0 for v in z.values()) and min(orders) >= 1.8
    record(9, ok, "Q fits " + ", ".join(f"{k}: {q:.3f} (z={s:.2f})" for k, (q, s) in z.items())
           + f"; min FD order {min(orders):.2f}")
    assert ok


def _cli(args, tmp_path, tag):
    out = tmp_path / f"{tag}.out"
    res = subprocess.run([sys.executable, "-m", "hardy_poincare", *args, "--out", str(out)],
                         capture_output=True)
    return res.returncode, res.stdout, out.read_bytes() if out.exists() else b""


def test_criterion_10_cli_determinism(tmp_path):
    runs = [
        ["geometry-check", "--geometry", "heisenberg:1", "--n-samples", "200000", "--seed", "7", "--workers", "3"],
        ["sweep", "--p-grid", "2,3", "--theta-grid", "1,2", "--Q-list", "3,4", "--workers", "2",
         "--inequalities", "poincare,identity,hardy1,hardy2", "--fns", "interior_bump"],
        ["sweep", "--p-grid", "2,3,4", "--theta-grid", "1,2,3", "--Q", "3", "--workers", "3",
         "--inequalities", "poincare,identity", "--fns", "extremal,boundary_bump", "--format", "json"],
        ["nu", "--p", "3", "--theta", "2.5", "--k", "3"],
        ["lambda", "--p-grid", "2:8:0.25"],
        ["trace", "--p", "4", "--theta", "3", "--r-max", "6"],
    ]
    same = []
    for i, args in enumerate(runs):
        a = _cli(args, tmp_path, f"a{i}")
        b = _cli(args, tmp_path, f"b{i}")
        same.append(a[0] == 0 and a == b and len(a[2]) > 0)
    ok = all(same)
    record(10, ok, f"{sum(same)}/{len(same)} commands byte-identical across repeated runs")
    assert ok
