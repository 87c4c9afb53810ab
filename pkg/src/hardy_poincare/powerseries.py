"""Finite generalized power series  sum_k c_k x**e_k  with real exponents.

Used to represent the solution of the flux equation near a point where the
flux vanishes.  There the profile is not analytic: it carries powers
x**(j * p') with p' = p/(p-1), together with the integer powers produced by
expanding the weight about a point r0 > 0.

Every series is attached to a radius ``rho``; terms whose sup-norm on
[0, rho] (|c| * rho**e) falls below ``PRUNE`` are dropped after each
operation.  Only non-negative exponents are pruned.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

PRUNE = 1e-19
_EXP_DIGITS = 10


@dataclass(frozen=True)
class GSeries:
    exps: np.ndarray
    coefs: np.ndarray
    rho: float

    @classmethod
    def constant(cls, c: float, rho: float) -> "GSeries":
        return cls(np.array([0.0]), np.array([float(c)]), rho)

    @classmethod
    def monomial(cls, c: float, e: float, rho: float) -> "GSeries":
        return cls(np.array([float(e)]), np.array([float(c)]), rho)

    @classmethod
    def _build(cls, exps, coefs, rho: float) -> "GSeries":
        exps = np.round(np.asarray(exps, dtype=float), _EXP_DIGITS)
        coefs = np.asarray(coefs, dtype=float)
        if exps.size == 0:
            return cls(np.array([0.0]), np.array([0.0]), rho)
        uniq, inv = np.unique(exps, return_inverse=True)
        summed = np.bincount(inv, weights=coefs, minlength=uniq.size)
        with np.errstate(over="ignore", under="ignore"):
            size = np.abs(summed) * rho**uniq
        keep = (summed != 0.0) & ((uniq < 0.0) | (size > PRUNE))
        if not np.any(keep):
            return cls(np.array([0.0]), np.array([0.0]), rho)
        return cls(uniq[keep], summed[keep], rho)

    def sup(self) -> float:
        """Upper bound for max |s(x)| on [0, rho]."""
        return float(np.sum(np.abs(self.coefs) * self.rho**self.exps))

    def __add__(self, other: "GSeries | float") -> "GSeries":
        if not isinstance(other, GSeries):
            other = GSeries.constant(other, self.rho)
        return GSeries._build(
            np.concatenate([self.exps, other.exps]),
            np.concatenate([self.coefs, other.coefs]),
            self.rho,
        )

    def __neg__(self) -> "GSeries":
        return GSeries(self.exps, -self.coefs, self.rho)

    def __sub__(self, other: "GSeries | float") -> "GSeries":
        if not isinstance(other, GSeries):
            other = GSeries.constant(other, self.rho)
        return self + (-other)

    def scale(self, c: float) -> "GSeries":
        return GSeries._build(self.exps, self.coefs * c, self.rho)

    def shift(self, e: float) -> "GSeries":
        """Multiply by x**e."""
        return GSeries._build(self.exps + e, self.coefs, self.rho)

    def __mul__(self, other: "GSeries | float") -> "GSeries":
        if not isinstance(other, GSeries):
            return self.scale(float(other))
        exps = (self.exps[:, None] + other.exps[None, :]).ravel()
        coefs = (self.coefs[:, None] * other.coefs[None, :]).ravel()
        return GSeries._build(exps, coefs, self.rho)

    def integrate(self) -> "GSeries":
        """Antiderivative vanishing at x = 0 (all exponents must exceed -1)."""
        if np.any(self.exps <= -1.0):
            raise ValueError("non-integrable term at the origin")
        e = self.exps + 1.0
        return GSeries._build(e, self.coefs / e, self.rho)

    def leading(self) -> tuple[float, float]:
        """(coefficient, exponent) of the lowest-order nonzero term."""
        i = int(np.argmin(self.exps))
        return float(self.coefs[i]), float(self.exps[i])

    def __call__(self, x):
        x = np.asarray(x, dtype=float)
        with np.errstate(divide="ignore", invalid="ignore"):
            powers = x[..., None] ** self.exps
        powers = np.where(self.exps == 0.0, 1.0, powers)
        return powers @ self.coefs

    def derivative_at(self, x):
        x = np.asarray(x, dtype=float)
        nz = self.exps != 0.0
        e = self.exps[nz]
        with np.errstate(divide="ignore", invalid="ignore"):
            powers = x[..., None] ** (e - 1.0)
        powers = np.where(e == 1.0, 1.0, powers)
        return powers @ (self.coefs[nz] * e)


def binomial_power(u: GSeries, a: float, max_terms: int = 400) -> GSeries:
    """(1 + u)**a by the binomial series; ``u`` must have positive exponents
    and sup-norm below one on [0, rho]."""
    if np.any(u.exps <= 0.0) and u.sup() > 0.0:
        raise ValueError("binomial expansion needs a series vanishing at 0")
    norm = u.sup()
    if norm >= 1.0:
        raise ValueError(f"binomial expansion outside its disc (|u| <= {norm:.3g})")
    result = GSeries.constant(1.0, u.rho)
    if norm == 0.0:
        return result
    power = GSeries.constant(1.0, u.rho)
    coef = 1.0
    for k in range(1, max_terms):
        coef *= (a - k + 1) / k
        power = power * u
        if coef == 0.0:
            break
        result = result + power.scale(coef)
        if abs(coef) * norm**k < PRUNE:
            break
    return result


def signed_power(s: GSeries, q: float) -> GSeries:
    """sign(s) |s|**q for x in (0, rho], assuming the leading term fixes the sign."""
    c0, e0 = s.leading()
    if c0 == 0.0:
        return GSeries.constant(0.0, s.rho)
    rest = s.shift(-e0).scale(1.0 / c0) - 1.0
    body = binomial_power(rest, q)
    return body.shift(e0 * q).scale(np.sign(c0) * abs(c0) ** q)
