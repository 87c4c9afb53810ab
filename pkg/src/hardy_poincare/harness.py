"""Radial verification of the weighted Poincare inequality, the radial square
identity and the two Hardy improvements.

For u = f(d(x)) on a gauge ball of radius R every integral in these
inequalities has the form  c * int_0^R g(r) r^(Q-1) dr  with the same
geometric constant c = Q lambda_{alpha+p} on both sides, so each check
reduces to one-dimensional integrals in r.  With that factor dropped:

  Poincare:  int |f'|^p r^(theta-1)  >=  (nu1(p,theta)/R)^p int |f|^p r^(theta-1)
  Hardy I:   int |f'|^p r^(Q-1-p(theta-1))  >=  |(Q-p theta)/p|^p int |f|^p r^(Q-1-p theta)
                 + lambda_p (nu1(p,p)/R)^p int |f|^p r^(Q-1-p(theta-1))
  Hardy II:  same left side and first term, second term
                 (2/p) |(Q-p theta)/p|^(p-2) (z0/R)^2 int |f|^p r^(Q-1-p theta+2)
"""

from __future__ import annotations

import csv
import io
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass
from functools import lru_cache
from typing import Callable

import numpy as np

from . import testfunctions as tf
from .constants import lambda_p, weight_w2_array
from .errors import DivergentIntegral, DomainError, SingularQuotient
from .phi_ode import DEFAULT_TOL, PLapParams, find_zeros, nu1_closed_form, solve_p
from .serialize import dumps
from .quadrature import QuadResult, integrate

DEFAULT_QUAD_TOL = 1e-11
INEQUALITIES = ("poincare", "identity", "hardy1", "hardy2")
SWEEP_COLUMNS = ("inequality", "p", "theta", "Q", "R", "function_id", "lhs", "rhs_total", "gap", "quad_err")


# ---------------------------------------------------------------------------
# first zeros and extremal traces (memoized; all inputs are immutable floats)


@lru_cache(maxsize=128)
def nu1(p: float, theta: float, tol: float = DEFAULT_TOL) -> float:
    """First zero: closed form when theta = 1 or p = 2, else from the ODE."""
    cf = nu1_closed_form(p, theta)
    if cf is not None:
        return cf
    trace = solve_p((p, theta), 4.0 * (1.0 + theta), tol)
    return find_zeros(trace, 1).zeros[0]


def z0() -> float:
    """First zero of J_0."""
    return nu1_closed_form(2.0, 2.0)


@lru_cache(maxsize=64)
def _unit_trace(p: float, theta: float, tol: float):
    """Trace on [0, nu1 (1 + 1e-9)], slightly past the first zero."""
    return solve_p((p, theta), nu1(p, theta, tol) * (1.0 + 1e-9), tol)


def extremal_function(params: PLapParams, tol: float = DEFAULT_TOL) -> tf.RadialTestFunction:
    """f(r) = phi(nu1 r / R), the equality case of the Poincare inequality."""
    prm = params.require_poincare()
    nu = nu1(prm.p, prm.theta, tol)
    trace = _unit_trace(prm.p, prm.theta, tol).rescaled(nu / prm.radius)
    return tf.from_trace(trace, prm.radius, "extremal")


def make_preset(name: str, params: PLapParams, tol: float = DEFAULT_TOL) -> tf.RadialTestFunction:
    """Preset by name; ``boundary_bump:m`` and ``interior_bump:a,b`` take
    parameters (a, b as fractions of R)."""
    R = params.radius
    base, _, arg = name.partition(":")
    vals = []
    if arg:
        try:
            vals = [float(v) for v in arg.split(",")]
        except ValueError as exc:
            raise DomainError(f"cannot parse parameters of preset {name!r}") from exc
    if base == "boundary_bump":
        return tf.boundary_bump(R, vals[0] if vals else 2.0, "boundary_bump" if not vals else None)
    if base == "one_minus_r2":
        return tf.one_minus_r2(R)
    if base == "interior_bump":
        if vals and len(vals) != 2:
            raise DomainError("interior_bump takes two parameters a,b")
        return tf.interior_bump(R, *(v * R for v in vals)) if vals else tf.interior_bump(R)
    if base == "poly_r_1mr":
        return tf.poly_r_1mr(R)
    if base == "extremal":
        return extremal_function(params, tol)
    if base == "zero":
        return tf.zero_function(R)
    raise DomainError(f"unknown test function {name!r}; presets are {', '.join(tf.PRESETS)}")


# ---------------------------------------------------------------------------
# reports


@dataclass(frozen=True)
class GapReport:
    inequality: str
    params: PLapParams
    Q: float
    lhs: float
    rhs_terms: tuple
    gap: float
    quad_err: float
    function_id: str = ""

    @property
    def rhs_total(self) -> float:
        return float(sum(v for _, v in self.rhs_terms))

    def holds(self, slack: float = 10.0) -> bool:
        return self.gap >= -slack * self.quad_err

    def to_dict(self) -> dict:
        return {
            "inequality": self.inequality,
            "p": self.params.p,
            "theta": self.params.theta,
            "alpha": self.params.alpha,
            "R": self.params.radius,
            "Q": self.Q,
            "function_id": self.function_id,
            "lhs": self.lhs,
            "rhs_terms": [[k, v] for k, v in self.rhs_terms],
            "rhs_total": self.rhs_total,
            "gap": self.gap,
            "quad_err": self.quad_err,
        }

    def to_json(self) -> str:
        return dumps(self.to_dict(), indent=2)

    def csv_row(self) -> list:
        return [self.inequality, self.params.p, self.params.theta, self.Q, self.params.radius,
                self.function_id, self.lhs, self.rhs_total, self.gap, self.quad_err]


@dataclass(frozen=True)
class RadialIntegral:
    value: float
    error: float
    panels: np.ndarray
    integrand: Callable


# ---------------------------------------------------------------------------
# radial integrals


def _admissible(exponent: float, order: float, p: float, f: tf.RadialTestFunction) -> bool:
    if f.vanishes_at_origin_neighborhood and f.support[0] > 0.0:
        return True
    return p * order + exponent > -1.0


def reduce_radial(weight_exponent: float, g: Callable, R: float, *, support=None, order_at_origin: float = 0.0,
                  vanishes_near_origin: bool = False, tol: float = DEFAULT_QUAD_TOL) -> RadialIntegral:
    """int_a^b g(r) r^weight_exponent dr over ``support`` (default [0, R]).

    ``g`` ~ r^order_at_origin at 0; the integral is refused with
    DivergentIntegral unless order_at_origin + weight_exponent > -1 or the
    integrand vanishes on a neighbourhood of 0.
    """
    a, b = (0.0, R) if support is None else support
    if not (0.0 <= a <= b <= R * (1.0 + 1e-14)):
        raise DomainError(f"support [{a}, {b}] not inside [0, {R}]")
    if not (vanishes_near_origin and a > 0.0) and order_at_origin + weight_exponent <= -1.0:
        raise DivergentIntegral(
            f"integrand ~ r^{order_at_origin + weight_exponent:g} at the origin is not integrable"
        )
    beta = float(weight_exponent)

    def integrand(r):
        r = np.asarray(r, dtype=float)
        return np.asarray(g(r), dtype=float) * r**beta

    res: QuadResult = integrate(integrand, a, b, tol=tol, rel=tol)
    return RadialIntegral(res.value, res.error, res.panels, integrand)


def _power_integral(f: tf.RadialTestFunction, p: float, exponent: float, derivative: bool, tol: float,
                    label: str) -> RadialIntegral:
    fn = f.deriv if derivative else f.eval
    order = f.deriv_origin_order if derivative else f.origin_order
    if not _admissible(exponent, order, p, f):
        raise DivergentIntegral(
            f"{label}: |{'f' + chr(39) if derivative else 'f'}|^p r^{exponent:g} is not integrable at 0 "
            f"for profile {f.id} (order {order:g})"
        )
    return reduce_radial(exponent, lambda r: np.abs(fn(r)) ** p, f.radius, support=f.support,
                         order_at_origin=p * order, vanishes_near_origin=f.vanishes_at_origin_neighborhood,
                         tol=tol)


def _check_radius(params: PLapParams, f: tf.RadialTestFunction) -> None:
    if abs(f.radius - params.radius) > 1e-12 * params.radius:
        raise DomainError(f"profile {f.id} lives on [0, {f.radius}] but R = {params.radius}")


def _check_Q(Q: float) -> float:
    if not (math.isfinite(Q) and Q > 0.0):
        raise DomainError(f"Q must be a positive real, got {Q}")
    return float(Q)


def poincare_gap(params: PLapParams, Q: float, f: tf.RadialTestFunction, *, tol: float = DEFAULT_QUAD_TOL,
                 ode_tol: float = DEFAULT_TOL) -> GapReport:
    prm = params.require_poincare()
    Q = _check_Q(Q)
    _check_radius(prm, f)
    if not f.vanishes_at_boundary:
        raise DomainError(f"profile {f.id} must vanish at r = R for the Poincare inequality")
    p, th = prm.p, prm.theta
    lhs = _power_integral(f, p, th - 1.0, True, tol, "poincare lhs")
    mass = _power_integral(f, p, th - 1.0, False, tol, "poincare rhs")
    c = (nu1(p, th, ode_tol) / prm.radius) ** p
    rhs = c * mass.value
    return GapReport("poincare", prm, Q, lhs.value, (("nu1_term", rhs),), lhs.value - rhs,
                     float(lhs.error + c * mass.error), f.id)


def identity_integrand(params: PLapParams, f: tf.RadialTestFunction, ode_tol: float = DEFAULT_TOL):
    """r -> w2(p, f'(r), g(r)) (f'(r) - g(r))^2 r^(theta-1) with
    g = (nu1/R) (phi'/phi)(nu1 r / R) f(r)."""
    prm = params.require_poincare()
    p, th, R = prm.p, prm.theta, prm.radius
    nu = nu1(p, th, ode_tol)
    trace = _unit_trace(p, th, ode_tol)

    def integrand(r):
        r = np.asarray(r, dtype=float)
        s = np.clip(nu * r / R, 0.0, trace.r_max)
        ph, dph = trace.evaluate(s)
        fv = f.eval(r)
        with np.errstate(divide="ignore", invalid="ignore"):
            g = np.where(fv == 0.0, 0.0, (nu / R) * dph * fv / ph)
        if not np.all(np.isfinite(g)):
            raise SingularQuotient(f"profile {f.id} does not vanish where phi(nu1 r/R) = 0")
        x = f.deriv(r)
        return weight_w2_array(p, x, g) * (x - g) ** 2 * r ** (th - 1.0)

    return integrand


def radial_identity_residual(params: PLapParams, Q: float, f: tf.RadialTestFunction, *,
                             tol: float = DEFAULT_QUAD_TOL, ode_tol: float = DEFAULT_TOL) -> GapReport:
    """Poincare gap versus the integral of the exact square it equals.

    The report's ``gap`` is the absolute residual; ``lhs`` the Poincare gap
    and the single right-hand term the square integral.
    """
    prm = params.require_poincare()
    Q = _check_Q(Q)
    _check_radius(prm, f)
    if not f.vanishes_at_boundary:
        raise SingularQuotient(f"profile {f.id} must vanish at r = R, where phi(nu1 r/R) = 0")
    R = prm.radius
    edge = abs(float(f.eval(np.array([R]))[0]))
    if edge > 1e-8 * max(1.0, float(np.max(np.abs(f.eval(np.linspace(0, R, 65)))))):
        raise SingularQuotient(f"profile {f.id} is {edge:.3g} at r = R, where phi(nu1 r/R) = 0")
    pg = poincare_gap(prm, Q, f, tol=tol, ode_tol=ode_tol)
    a, b = f.support
    res = integrate(identity_integrand(prm, f, ode_tol), a, b, tol=tol, rel=tol)
    resid = abs(pg.gap - res.value)
    return GapReport("identity", prm, Q, pg.gap, (("square_integral", res.value),), resid,
                     float(pg.quad_err + res.error), f.id)


def _hardy_common(params: PLapParams, Q: float, f: tf.RadialTestFunction, tol: float):
    Q = _check_Q(Q)
    _check_radius(params, f)
    p, th = params.p, params.theta
    lhs = _power_integral(f, p, Q - 1.0 - p * (th - 1.0), True, tol, "hardy lhs")
    c1 = abs((Q - p * th) / p) ** p
    if c1 == 0.0:
        first = (0.0, 0.0)
    else:
        m1 = _power_integral(f, p, Q - 1.0 - p * th, False, tol, "hardy first term")
        first = (c1 * m1.value, c1 * m1.error)
    return Q, lhs, first


def hardy1_gap(params: PLapParams, Q: float, f: tf.RadialTestFunction, *, tol: float = DEFAULT_QUAD_TOL,
               ode_tol: float = DEFAULT_TOL) -> GapReport:
    Q, lhs, first = _hardy_common(params, Q, f, tol)
    p, th = params.p, params.theta
    c2 = lambda_p(p).value * (nu1(p, p, ode_tol) / params.radius) ** p
    m2 = _power_integral(f, p, Q - 1.0 - p * (th - 1.0), False, tol, "hardy1 remainder")
    terms = (("hardy_term", first[0]), ("remainder", c2 * m2.value))
    rhs = first[0] + c2 * m2.value
    return GapReport("hardy1", params, Q, lhs.value, terms, lhs.value - rhs,
                     float(lhs.error + first[1] + c2 * m2.error), f.id)


def hardy2_gap(params: PLapParams, Q: float, f: tf.RadialTestFunction, *, tol: float = DEFAULT_QUAD_TOL,
               ode_tol: float = DEFAULT_TOL) -> GapReport:
    Q, lhs, first = _hardy_common(params, Q, f, tol)
    p, th = params.p, params.theta
    c2 = (2.0 / p) * abs((Q - p * th) / p) ** (p - 2.0) * (z0() / params.radius) ** 2
    if c2 == 0.0:
        m2v, m2e = 0.0, 0.0
    else:
        m2 = _power_integral(f, p, Q - 1.0 - p * th + 2.0, False, tol, "hardy2 remainder")
        m2v, m2e = m2.value, m2.error
    terms = (("hardy_term", first[0]), ("remainder", c2 * m2v))
    rhs = first[0] + c2 * m2v
    return GapReport("hardy2", params, Q, lhs.value, terms, lhs.value - rhs,
                     float(lhs.error + first[1] + c2 * m2e), f.id)


def sharpness_ratios(params: PLapParams, family, *, tol: float = DEFAULT_QUAD_TOL,
                     ode_tol: float = DEFAULT_TOL) -> list[float]:
    """(nu1/R)^p int |f|^p r^(theta-1) / int |f'|^p r^(theta-1) for each profile."""
    prm = params.require_poincare()
    out = []
    for f in family:
        rep = poincare_gap(prm, 1.0, f, tol=tol, ode_tol=ode_tol)
        if rep.lhs == 0.0:
            raise DomainError(f"profile {f.id} has zero energy")
        out.append(rep.rhs_total / rep.lhs)
    return out


def sharpness_sweep(params: PLapParams, Q: float, family, *, tol: float = DEFAULT_QUAD_TOL,
                    ode_tol: float = DEFAULT_TOL) -> float:
    """Largest normalized Rayleigh quotient over ``family``; at most 1, with
    equality at the extremal profile."""
    _check_Q(Q)
    family = list(family)
    if not family:
        raise DomainError("sharpness sweep needs a non-empty family")
    return max(sharpness_ratios(params, family, tol=tol, ode_tol=ode_tol))


_CHECKS = {
    "poincare": poincare_gap,
    "identity": radial_identity_residual,
    "hardy1": hardy1_gap,
    "hardy2": hardy2_gap,
}


def run_check(inequality: str, params: PLapParams, Q: float, f: tf.RadialTestFunction, **kw) -> GapReport:
    if inequality not in _CHECKS:
        raise DomainError(f"unknown inequality {inequality!r}; choose from {', '.join(INEQUALITIES)}")
    return _CHECKS[inequality](params, Q, f, **kw)


@dataclass(frozen=True)
class SweepCell:
    inequality: str
    p: float
    theta: float
    Q: float
    R: float
    function_id: str


def _run_cell(cell: SweepCell, tol: float, ode_tol: float) -> GapReport:
    prm = PLapParams(cell.p, cell.theta, 0.0, cell.R)
    f = make_preset(cell.function_id, prm, ode_tol)
    return run_check(cell.inequality, prm, cell.Q, f, tol=tol, ode_tol=ode_tol)


def sweep(cells, *, workers: int = 1, tol: float = DEFAULT_QUAD_TOL, ode_tol: float = DEFAULT_TOL) -> list[GapReport]:
    """Evaluate every cell; results come back in input order for any worker count."""
    cells = list(cells)
    if int(workers) != workers or workers < 1:
        raise DomainError(f"workers must be a positive integer, got {workers}")
    if workers == 1:
        return [_run_cell(c, tol, ode_tol) for c in cells]
    with ThreadPoolExecutor(max_workers=int(workers)) as pool:
        return list(pool.map(lambda c: _run_cell(c, tol, ode_tol), cells))


def grid_cells(inequalities, ps, thetas, Qs, Rs, functions) -> list[SweepCell]:
    return [SweepCell(i, float(p), float(t), float(q), float(r), fn)
            for i in inequalities for p in ps for t in thetas for q in Qs for r in Rs for fn in functions]


def sweep_csv(reports) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(SWEEP_COLUMNS)
    for rep in reports:
        w.writerow([f"{v:.17g}" if isinstance(v, float) else v for v in rep.csv_row()])
    return buf.getvalue()
