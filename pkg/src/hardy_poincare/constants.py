"""Remainder constant lambda_p and the pointwise weight of the L^p square identity.

For real x, y and p >= 2 the weight

    w2(p, x, y) = p (p-1) int_0^1 s |s y + (1-s) x|^(p-2) ds

turns the three-term expression |x|^p + (p-1)|y|^p - p phi_p(y) x into the
exact square w2 (x - y)^2.  The remainder constant is

    lambda_p = min_{a in [1/2, 1]} h(a),  h(a) = a^p + (1-a)^(p-1) (a + p - 1),

the sharp lower bound of w2 / |x - y|^(p-2).
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import lru_cache

import numpy as np

from .errors import DomainError

LAMBDA_GRID = 4096
_GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0
_EPS = np.finfo(float).eps
# |y - x| below this fraction of max(|x|, |y|) (same sign) switches to quadrature
_CANCEL_RATIO = 0.5
_GL_X, _GL_W = np.polynomial.legendre.leggauss(24)
_GL_S = 0.5 * (_GL_X + 1.0)
_GL_WS = 0.5 * _GL_W * _GL_S


def _check_p(p: float) -> float:
    p = float(p)
    if not (math.isfinite(p) and p >= 2.0):
        raise DomainError(f"p must be a finite real >= 2, got {p}")
    return p


def _phi_p(y: float, p: float) -> float:
    return math.copysign(abs(y) ** (p - 1.0), y) if y != 0.0 else 0.0


def margin_scale(p: float, x: float, y: float) -> float:
    """(1 + |x| + |y|)^(p-2), the natural size of w2 at (x, y)."""
    return (1.0 + abs(x) + abs(y)) ** (p - 2.0)


def three_term(p: float, x: float, y: float) -> float:
    """|x|^p + (p-1)|y|^p - p phi_p(y) x."""
    return abs(x) ** p + (p - 1.0) * abs(y) ** p - p * _phi_p(y, p) * x


def h_closed_form(a: float, p: float) -> float:
    """h(a) = a^p + (1-a)^(p-1) (a + p - 1) for a in [0, 1]."""
    p = _check_p(p)
    if not 0.0 <= a <= 1.0:
        raise DomainError(f"a must lie in [0, 1], got {a}")
    return a**p + (1.0 - a) ** (p - 1.0) * (a + p - 1.0)


def _h_vec(a: np.ndarray, p: float) -> np.ndarray:
    return a**p + (1.0 - a) ** (p - 1.0) * (a + p - 1.0)


@dataclass(frozen=True)
class WeightEval:
    p: float
    x: float
    y: float
    w2: float
    quad_err: float


@dataclass(frozen=True)
class LambdaP:
    p: float
    value: float
    argmin: float
    tol: float


def weight_w2(p: float, x: float, y: float) -> WeightEval:
    """Evaluate w2(p, x, y) with a rounding-error bound.

    The antiderivative of s |c + m s|^(p-2) is continuously differentiable
    through u = c + m s = 0, so the closed form

        w2 = (|x|^p + (p-1)|y|^p - p phi_p(y) x) / (x - y)^2

    holds for all x != y.  It loses digits when x and y are close and of the
    same sign; there the integrand is analytic on a neighbourhood of [0, 1]
    and a 24-point Gauss-Legendre rule is exact to rounding.
    """
    p = _check_p(p)
    x = float(x)
    y = float(y)
    if p == 2.0:
        return WeightEval(p, x, y, 1.0, 0.0)
    m = y - x
    big = max(abs(x), abs(y))
    if m == 0.0:
        w2 = 0.5 * p * (p - 1.0) * abs(x) ** (p - 2.0)
        return WeightEval(p, x, y, w2, float(4.0 * _EPS * w2))
    if x * y > 0.0 and abs(m) < _CANCEL_RATIO * big:
        u = np.abs(x + m * _GL_S) ** (p - 2.0)
        w2 = p * (p - 1.0) * float(u @ _GL_WS)
        return WeightEval(p, x, y, w2, float(32.0 * _EPS * w2))
    # w2 is homogeneous of degree p-2: normalise to avoid under/overflow in (x-y)^2
    xs, ys, ms = x / big, y / big, m / big
    terms = abs(xs) ** p + (p - 1.0) * abs(ys) ** p + p * abs(ys) ** (p - 1.0) * abs(xs)
    unit = big ** (p - 2.0)
    w2 = unit * max(three_term(p, xs, ys) / (ms * ms), 0.0)
    return WeightEval(p, x, y, w2, float(unit * 16.0 * _EPS * terms / (ms * ms)))


def weight_w2_array(p: float, x, y) -> np.ndarray:
    """Vectorized w2 (values only), same branch logic as :func:`weight_w2`."""
    p = _check_p(p)
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    x, y = np.broadcast_arrays(x, y)
    if p == 2.0:
        return np.ones(x.shape)
    m = y - x
    big = np.maximum(np.abs(x), np.abs(y))
    out = np.empty(x.shape)
    same = m == 0.0
    near = (~same) & (x * y > 0.0) & (np.abs(m) < _CANCEL_RATIO * big)
    far = ~(same | near)
    out[same] = 0.5 * p * (p - 1.0) * np.abs(x[same]) ** (p - 2.0)
    if np.any(near):
        xs, ms = x[near], m[near]
        u = np.abs(xs[:, None] + ms[:, None] * _GL_S[None, :]) ** (p - 2.0)
        out[near] = p * (p - 1.0) * (u @ _GL_WS)
    if np.any(far):
        bf = big[far]
        xf, yf, mf = x[far] / bf, y[far] / bf, m[far] / bf
        num = np.abs(xf) ** p + (p - 1.0) * np.abs(yf) ** p - p * np.sign(yf) * np.abs(yf) ** (p - 1.0) * xf
        out[far] = bf ** (p - 2.0) * np.maximum(num / (mf * mf), 0.0)
    return out


def check_identity(p: float, x: float, y: float) -> float:
    """|w2 (x-y)^2 - (|x|^p + (p-1)|y|^p - p phi_p(y) x)|."""
    ev = weight_w2(p, x, y)
    return abs(ev.w2 * (x - y) ** 2 - three_term(ev.p, x, y))


def check_bound_type1(p: float, x: float, y: float) -> float:
    """w2 - lambda_p |x - y|^(p-2); non-negative up to rounding."""
    ev = weight_w2(p, x, y)
    return ev.w2 - lambda_p(ev.p).value * abs(x - y) ** (ev.p - 2.0)


def check_bound_type2(p: float, x: float, y: float) -> float:
    """w2 - (p/2) |y|^(p-2); non-negative, zero at x = -y."""
    ev = weight_w2(p, x, y)
    return ev.w2 - 0.5 * ev.p * abs(y) ** (ev.p - 2.0)


def h_derivative(a: float, p: float) -> float:
    """h'(a) = p a^(p-1) + p ((1-a)^(p-1) - (p-1)(1-a)^(p-2))."""
    return p * a ** (p - 1.0) + p * ((1.0 - a) ** (p - 1.0) - (p - 1.0) * (1.0 - a) ** (p - 2.0))


def _golden(fn, a: float, b: float, tol: float) -> float:
    c = b - _GOLDEN * (b - a)
    d = a + _GOLDEN * (b - a)
    fc, fd = fn(c), fn(d)
    while b - a > tol:
        if fc <= fd:
            b, d, fd = d, c, fc
            c = b - _GOLDEN * (b - a)
            fc = fn(c)
        else:
            a, c, fc = c, d, fd
            d = a + _GOLDEN * (b - a)
            fd = fn(d)
    return 0.5 * (a + b)


def _refine(p: float, a: float, b: float, tol: float) -> float:
    """Root of h' in [a, b] by bisection when bracketed, else golden section."""
    da, db = h_derivative(a, p), h_derivative(b, p)
    if not (da < 0.0 < db):
        return _golden(lambda t: h_closed_form(t, p), a, b, tol)
    while b - a > tol:
        m = 0.5 * (a + b)
        if m in (a, b):
            break
        if h_derivative(m, p) < 0.0:
            a = m
        else:
            b = m
    return 0.5 * (a + b)


@lru_cache(maxsize=256)
def _lambda_cached(p: float, tol: float, lo: float) -> LambdaP:
    grid = np.linspace(lo, 1.0, LAMBDA_GRID + 1)
    vals = _h_vec(grid, p)
    i = int(np.argmin(vals))
    if vals.max() - vals[i] <= 8.0 * _EPS * vals[i]:
        # h is constant (p = 2)
        return LambdaP(p, float(vals[0]), float(lo), tol)
    a = grid[max(i - 1, 0)]
    b = grid[min(i + 1, grid.size - 1)]
    arg = _refine(p, a, b, tol)
    val = h_closed_form(arg, p)
    if val > vals[i]:
        # refinement did not beat the grid (endpoint minimum)
        arg, val = float(grid[i]), float(vals[i])
    return LambdaP(p, float(val), float(arg), tol)


def lambda_p(p: float, tol: float = 1e-12) -> LambdaP:
    """Minimum of h on [1/2, 1]: grid of 4097 points, then bisection on h'."""
    p = _check_p(p)
    if not tol > 0.0:
        raise DomainError(f"tol must be > 0, got {tol}")
    return _lambda_cached(p, float(tol), 0.5)


def h_min_on(p: float, lo: float, tol: float = 1e-12) -> LambdaP:
    """Minimum of h on [lo, 1] by the same grid-and-refine procedure."""
    p = _check_p(p)
    return _lambda_cached(p, float(tol), float(lo))


def lambda_table_csv(ps) -> str:
    lines = ["p,lambda_p,argmin"]
    for p in ps:
        lp = lambda_p(p)
        lines.append(f"{lp.p:.17g},{lp.value:.17g},{lp.argmin:.17g}")
    return "\n".join(lines) + "\n"
