"""Radial profiles f(r) on [0, R] used to probe the inequalities.

Every profile carries the bookkeeping needed to decide whether an integral
of |f|^p r^beta (or |f'|^p r^beta) converges at the origin: the orders m
with f ~ r^m and f' ~ r^m' as r -> 0, or a flag saying f vanishes
identically near 0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DomainError

PRESETS = ("boundary_bump", "one_minus_r2", "interior_bump", "poly_r_1mr", "extremal")


@dataclass(frozen=True)
class RadialTestFunction:
    id: str
    eval: Callable = field(repr=False)
    deriv: Callable = field(repr=False)
    support: tuple
    vanishes_at_origin_neighborhood: bool
    vanishes_at_boundary: bool
    origin_order: float = 0.0
    deriv_origin_order: float = 0.0
    radius: float = 1.0

    def __call__(self, r):
        return self.eval(r)

    def rescaled(self, factor: float) -> "RadialTestFunction":
        """r -> f(r / factor) on [0, factor * R]."""
        ev, dv = self.eval, self.deriv
        a, b = self.support
        return RadialTestFunction(
            f"{self.id}@x{factor:g}",
            lambda r: ev(np.asarray(r) / factor),
            lambda r: dv(np.asarray(r) / factor) / factor,
            (a * factor, b * factor),
            self.vanishes_at_origin_neighborhood,
            self.vanishes_at_boundary,
            self.origin_order,
            self.deriv_origin_order,
            self.radius * factor,
        )


def zero_function(R: float = 1.0) -> RadialTestFunction:
    return RadialTestFunction(
        "zero", lambda r: np.zeros(np.shape(r)), lambda r: np.zeros(np.shape(r)),
        (0.0, R), True, True, math.inf, math.inf, R,
    )


def boundary_bump(R: float = 1.0, m: float = 2.0, name: str | None = None) -> RadialTestFunction:
    """(1 - (r/R)^2)^m."""
    if m < 1.0:
        raise DomainError(f"boundary bump exponent must be >= 1, got {m}")

    def f(r):
        s = np.asarray(r, dtype=float) / R
        return (1.0 - s * s) ** m

    def df(r):
        s = np.asarray(r, dtype=float) / R
        return -2.0 * m * s / R * (1.0 - s * s) ** (m - 1.0)

    return RadialTestFunction(name or f"boundary_bump_m{m:g}", f, df, (0.0, R), False, True, 0.0, 1.0, R)


def one_minus_r2(R: float = 1.0) -> RadialTestFunction:
    return boundary_bump(R, 1.0, "one_minus_r2")


def interior_bump(R: float = 1.0, a: float | None = None, b: float | None = None) -> RadialTestFunction:
    """exp(-1/(1-s^2)) with s = (2r - a - b)/(b - a) on [a, b], zero elsewhere."""
    a = 0.2 * R if a is None else a
    b = 0.8 * R if b is None else b
    if not 0.0 <= a < b <= R:
        raise DomainError(f"interior bump needs 0 <= a < b <= R, got a={a}, b={b}, R={R}")
    c, w = a + b, b - a

    def _parts(r):
        r = np.asarray(r, dtype=float)
        s = (2.0 * r - c) / w
        inside = np.abs(s) < 1.0
        q = np.where(inside, 1.0 - s * s, 1.0)
        e = np.where(inside, np.exp(-1.0 / q), 0.0)
        return s, q, e

    def f(r):
        return _parts(r)[2]

    def df(r):
        s, q, e = _parts(r)
        return e * (-2.0 * s / (q * q)) * (2.0 / w)

    return RadialTestFunction(f"interior_bump[{a:g},{b:g}]", f, df, (a, b), a > 0.0, True,
                              0.0, 0.0, R)


def poly_r_1mr(R: float = 1.0) -> RadialTestFunction:
    """(r/R)(1 - r/R)."""

    def f(r):
        s = np.asarray(r, dtype=float) / R
        return s * (1.0 - s)

    def df(r):
        s = np.asarray(r, dtype=float) / R
        return (1.0 - 2.0 * s) / R

    return RadialTestFunction("poly_r_1mr", f, df, (0.0, R), False, True, 1.0, 0.0, R)


def from_trace(trace, R: float, name: str = "extremal") -> RadialTestFunction:
    """Profile backed by a (rescaled) ODE trace on [0, R]."""
    p = trace.params.p

    def f(r):
        return trace.evaluate(np.clip(np.asarray(r, dtype=float), 0.0, trace.r_max))[0]

    def df(r):
        return trace.evaluate(np.clip(np.asarray(r, dtype=float), 0.0, trace.r_max))[1]

    # phi - 1 ~ r^p' and phi' ~ r^(p'-1) = r^(1/(p-1)) at the origin
    return RadialTestFunction(name, f, df, (0.0, R), False, True, 0.0, 1.0 / (p - 1.0), R)


def derivative_check(f: RadialTestFunction, n: int = 32, seed: int = 0, h: float = 1e-6) -> float:
    """Largest relative mismatch between f' and a central difference of f."""
    a, b = f.support
    rng = np.random.default_rng(seed)
    r = a + (b - a) * (0.02 + 0.96 * rng.random(n))
    step = h * max(1.0, b)
    fd = (f.eval(r + step) - f.eval(r - step)) / (2.0 * step)
    d = f.deriv(r)
    scale = np.maximum(np.abs(d), np.max(np.abs(d)) * 1e-3 + 1e-300)
    return float(np.max(np.abs(fd - d) / scale))


def random_family(n: int, R: float = 1.0, seed: int = 0) -> list[RadialTestFunction]:
    """Boundary-vanishing profiles: polynomial multiples of (1 - r/R), boundary
    bumps with random exponents and interior bumps on random intervals."""
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        kind = i % 3
        if kind == 0:
            coef = rng.normal(size=int(rng.integers(1, 5)))

            def f(r, c=coef):
                s = np.asarray(r, dtype=float) / R
                return (1.0 - s) * np.polynomial.polynomial.polyval(s, c)

            def df(r, c=coef):
                s = np.asarray(r, dtype=float) / R
                poly = np.polynomial.polynomial.polyval(s, c)
                dpoly = np.polynomial.polynomial.polyval(s, np.polynomial.polynomial.polyder(c))
                return (-poly + (1.0 - s) * dpoly) / R

            out.append(RadialTestFunction(f"rand_poly_{i}", f, df, (0.0, R), False, True, 0.0, 0.0, R))
        elif kind == 1:
            out.append(boundary_bump(R, float(rng.uniform(1.0, 4.0)), f"rand_bbump_{i}"))
        else:
            a, b = np.sort(rng.uniform(0.05, 0.95, 2)) * R
            if b - a < 0.05 * R:
                b = min(R, a + 0.05 * R)
            g = interior_bump(R, float(a), float(b))
            out.append(RadialTestFunction(f"rand_ibump_{i}", g.eval, g.deriv, g.support, True, True, 0.0, 0.0, R))
    return out
