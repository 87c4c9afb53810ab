"""Radial p-Laplacian profile: the solution of

    (r^(theta-1) phi_p(phi'))' + r^(theta-1) phi_p(phi) = 0,  phi(0) = 1, phi'(0) = 0,

its zeros nu_k(p, theta), and the Dirichlet eigenpairs of the weighted radial
operator on [0, R].

The equation is integrated as the first-order system

    phi' = phi_p'(F r^(1-theta)),   F' = -r^(theta-1) phi_p(phi),

with F = r^(theta-1) phi_p(phi') the flux.  The right-hand side is singular
at r = 0 (theta > 1) and non-smooth wherever F vanishes (p > 2); near both
kinds of point the solution is represented by a generalized power series in
x and x^p' obtained by fixed-point iteration of the integrated equation.
Between those points an embedded Dormand-Prince 5(4) stepper is used.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import DomainError, InsufficientRange, NonConvergence
from .serialize import dumps
from .powerseries import GSeries, binomial_power, signed_power
from .special import bessel_j, bessel_j_first_zero, gamma

DEFAULT_TOL = 1e-10
ZERO_WIDTH = 1e-13
VALIDATED_P = (2.0, 8.0)
VALIDATED_THETA = (1.0, 10.0)

_MAX_STEPS = 2_000_000
_MAX_SEED_ITER = 60
_SERIES_NODES = 8


def phi_p(x, p: float):
    """|x|^(p-2) x."""
    if np.ndim(x) == 0:
        x = float(x)
        return math.copysign(abs(x) ** (p - 1.0), x) if x != 0.0 else 0.0
    x = np.asarray(x, dtype=float)
    return np.sign(x) * np.abs(x) ** (p - 1.0)


def phi_p_inverse(y, p: float):
    """Inverse of :func:`phi_p`, i.e. |y|^(p'-2) y with 1/p + 1/p' = 1."""
    q = 1.0 / (p - 1.0)
    if np.ndim(y) == 0:
        y = float(y)
        return math.copysign(abs(y) ** q, y) if y != 0.0 else 0.0
    y = np.asarray(y, dtype=float)
    return np.sign(y) * np.abs(y) ** q


@dataclass(frozen=True)
class PLapParams:
    """Exponents (p, theta, alpha) and ball radius R."""

    p: float
    theta: float
    alpha: float = 0.0
    radius: float = 1.0

    def __post_init__(self):
        for name in ("p", "theta", "alpha", "radius"):
            v = getattr(self, name)
            if not isinstance(v, (int, float)) or not math.isfinite(v):
                raise DomainError(f"{name} must be a finite real number, got {v!r}")
        if self.p < 2.0:
            raise DomainError(f"p must be >= 2, got {self.p}")
        if self.alpha < 0.0:
            raise DomainError(f"alpha must be >= 0, got {self.alpha}")
        if self.radius <= 0.0:
            raise DomainError(f"radius must be > 0, got {self.radius}")

    def require_poincare(self) -> "PLapParams":
        if self.theta < 1.0:
            raise DomainError(f"theta must be >= 1 for the radial eigenproblem, got {self.theta}")
        return self


def _as_params(params) -> PLapParams:
    if isinstance(params, PLapParams):
        return params
    p, theta = params
    return PLapParams(float(p), float(theta))


# ---------------------------------------------------------------------------
# local series near a point where the flux vanishes


@dataclass(frozen=True)
class _LocalSeries:
    """Solution through (r0, h0) with F(r0) = 0, normalised to h0 = 1.

    With x = direction * (r - r0) >= 0 the profile is h0 * phi(x), the flux
    phi_p(h0) * flux(x) and the derivative h0 * dphi(x).
    """

    r0: float
    direction: int
    phi: GSeries
    flux: GSeries
    dphi: GSeries


def _local_series(p: float, theta: float, r0: float, direction: int, rho: float, tol: float) -> _LocalSeries:
    q = 1.0 / (p - 1.0)
    if r0 == 0.0:
        w = GSeries.monomial(1.0, theta - 1.0, rho)
        winv = GSeries.monomial(1.0, 1.0 - theta, rho)
    else:
        u = GSeries.monomial(direction / r0, 1.0, rho)
        w = binomial_power(u, theta - 1.0).scale(r0 ** (theta - 1.0))
        winv = binomial_power(u, 1.0 - theta).scale(r0 ** (1.0 - theta))
    threshold = max(1e-3 * tol, 1e-15)
    phi = GSeries.constant(1.0, rho)
    for _ in range(_MAX_SEED_ITER):
        flux = (w * binomial_power(phi - 1.0, p - 1.0)).integrate().scale(-direction)
        dphi = signed_power(flux * winv, q)
        new = dphi.integrate().scale(direction) + 1.0
        change = (new - phi).sup()
        phi = new
        if change <= threshold:
            break
    else:
        raise NonConvergence(f"series seed at r={r0} did not settle (last change {change:.3g})")
    flux = (w * binomial_power(phi - 1.0, p - 1.0)).integrate().scale(-direction)
    dphi = signed_power(flux * winv, q)
    return _LocalSeries(r0, direction, phi, flux, dphi)


@dataclass(frozen=True)
class _Segment:
    lo: float
    hi: float
    h0: float
    series: _LocalSeries


# ---------------------------------------------------------------------------
# Dormand-Prince 5(4)

_C = (0.0, 1 / 5, 3 / 10, 4 / 5, 8 / 9, 1.0, 1.0)
_A = (
    (),
    (1 / 5,),
    (3 / 40, 9 / 40),
    (44 / 45, -56 / 15, 32 / 9),
    (19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729),
    (9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656),
    (35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84),
)
_B = _A[6]
_E = (71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40)


class _System:
    def __init__(self, p: float, theta: float):
        self.p = p
        self.theta = theta
        self.q = 1.0 / (p - 1.0)
        self.pm1 = p - 1.0
        self.tm1 = theta - 1.0

    def rhs(self, r: float, phi: float, flux: float) -> tuple[float, float]:
        w = r**self.tm1
        a = flux / w
        dphi = math.copysign(abs(a) ** self.q, a) if a != 0.0 else 0.0
        dflux = -w * math.copysign(abs(phi) ** self.pm1, phi) if phi != 0.0 else 0.0
        return dphi, dflux

    def rhs_vec(self, r, phi, flux):
        w = r**self.tm1
        a = flux / w
        return np.sign(a) * np.abs(a) ** self.q, -w * np.sign(phi) * np.abs(phi) ** self.pm1

    def step(self, r, y0, y1, h, k1):
        """One trial step; returns (y0_new, y1_new, err0, err1, k7)."""
        ks = [k1]
        for i in range(1, 7):
            a = _A[i]
            s0 = y0 + h * sum(a[j] * ks[j][0] for j in range(i))
            s1 = y1 + h * sum(a[j] * ks[j][1] for j in range(i))
            if i == 6:
                break
            ks.append(self.rhs(r + _C[i] * h, s0, s1))
        k7 = self.rhs(r + h, s0, s1)
        ks.append(k7)
        e0 = h * sum(_E[j] * ks[j][0] for j in range(7))
        e1 = h * sum(_E[j] * ks[j][1] for j in range(7))
        return s0, s1, e0, e1, k7

    def step_vec(self, r, y0, y1, h):
        ks = [self.rhs_vec(r, y0, y1)]
        for i in range(1, 7):
            a = _A[i]
            s0 = y0 + h * sum(a[j] * ks[j][0] for j in range(i))
            s1 = y1 + h * sum(a[j] * ks[j][1] for j in range(i))
            if i == 6:
                return s0, s1
            ks.append(self.rhs_vec(r + _C[i] * h, s0, s1))


# ---------------------------------------------------------------------------
# trace


@dataclass(frozen=True, eq=False)
class SolutionTrace:
    """Sampled solution (r, phi(r), phi'(r)) on [0, r_max].

    ``scale`` != 1 marks a rescaled profile r -> phi(scale * r); node radii,
    derivatives and ``r_max`` are then reported in the rescaled variable.
    """

    params: PLapParams
    nodes: np.ndarray
    r_max: float
    seed_cutoff: float
    tol: float
    scale: float = 1.0
    metadata: dict = field(default_factory=dict)
    _flux: np.ndarray = field(default=None, repr=False)
    _steps: np.ndarray = field(default=None, repr=False)
    _segments: tuple = field(default=(), repr=False)

    @property
    def p(self) -> float:
        return self.params.p

    @property
    def theta(self) -> float:
        return self.params.theta

    @property
    def r(self) -> np.ndarray:
        return self.nodes[:, 0]

    @property
    def phi(self) -> np.ndarray:
        return self.nodes[:, 1]

    @property
    def dphi(self) -> np.ndarray:
        return self.nodes[:, 2]

    @property
    def flux(self) -> np.ndarray:
        """r^(theta-1) phi_p(phi') at the nodes, in the unscaled variable."""
        return self._flux

    def rescaled(self, scale: float, r_max: float | None = None) -> "SolutionTrace":
        """Profile r -> phi(scale * r) (composes with an existing scale)."""
        total = self.scale * scale
        raw_r_max = self.r_max * self.scale
        new_max = raw_r_max / total if r_max is None else r_max
        raw = self._raw_nodes()
        nodes = np.column_stack([raw[:, 0] / total, raw[:, 1], raw[:, 2] * total])
        return SolutionTrace(
            self.params, nodes, new_max, self.seed_cutoff / total, self.tol, total,
            dict(self.metadata), self._flux, self._steps, self._segments,
        )

    def _raw_nodes(self) -> np.ndarray:
        s = self.scale
        return np.column_stack([self.nodes[:, 0] * s, self.nodes[:, 1], self.nodes[:, 2] / s])

    def evaluate(self, r) -> tuple[np.ndarray, np.ndarray]:
        """(phi, phi') at arbitrary radii in [0, r_max].

        Points inside a series segment use the series; elsewhere a single
        Dormand-Prince step is taken from the last accepted step start.
        """
        scalar = np.ndim(r) == 0
        rr = np.atleast_1d(np.asarray(r, dtype=float)) * self.scale
        if np.any(rr < 0.0) or np.any(rr > self.r_max * self.scale * (1 + 1e-12) + 1e-300):
            raise DomainError("evaluation radius outside [0, r_max]")
        phi = np.empty_like(rr)
        dphi = np.empty_like(rr)
        done = np.zeros(rr.shape, dtype=bool)
        for seg in self._segments:
            m = (~done) & (rr >= seg.lo) & (rr <= seg.hi)
            if not np.any(m):
                continue
            s = seg.series
            x = np.abs(rr[m] - s.r0)
            phi[m] = seg.h0 * s.phi(x)
            dphi[m] = seg.h0 * s.dphi(x)
            done |= m
        rest = ~done
        if np.any(rest):
            st = self._steps
            idx = np.searchsorted(st[:, 0], rr[rest], side="right") - 1
            idx = np.clip(idx, 0, len(st) - 1)
            sys_ = _System(self.p, self.theta)
            r0 = st[idx, 0]
            y0, y1 = sys_.step_vec(r0, st[idx, 1], st[idx, 2], rr[rest] - r0)
            phi[rest] = y0
            dphi[rest] = phi_p_inverse(y1 / rr[rest] ** (self.theta - 1.0), self.p)
        dphi = dphi * self.scale
        if scalar:
            return float(phi[0]), float(dphi[0])
        return phi, dphi

    def __call__(self, r):
        return self.evaluate(r)[0]

    def to_csv(self) -> str:
        lines = ["r,phi,dphi"]
        for r, f, d in self.nodes:
            lines.append(f"{r:.17g},{f:.17g},{d:.17g}")
        return "\n".join(lines) + "\n"


def default_seed_cutoff(tol: float) -> float:
    return min(0.1, 0.1 * tol**0.25)


def _in_validated_box(p: float, theta: float) -> bool:
    return VALIDATED_P[0] <= p <= VALIDATED_P[1] and VALIDATED_THETA[0] <= theta <= VALIDATED_THETA[1]


class _Integrator:
    def __init__(self, p: float, theta: float, tol: float):
        self.sys = _System(p, theta)
        self.p = p
        self.theta = theta
        self.tol = tol
        self.loc = 1e-3 * tol
        self.delta = default_seed_cutoff(tol)
        self.rho = 2.0 * self.delta
        self.r: list[float] = []
        self.phi: list[float] = []
        self.flux: list[float] = []
        self.dphi: list[float] = []
        self.steps: list[tuple[float, float, float]] = []
        self.segments: list[_Segment] = []
        self.n_rejected = 0
        self.n_turning = 0

    def _push(self, r, phi, flux, dphi):
        self.r.append(r)
        self.phi.append(phi)
        self.flux.append(flux)
        self.dphi.append(dphi)

    def _emit_series(self, seg: _Segment, lo: float, hi: float, include_lo: bool):
        s = seg.series
        n = _SERIES_NODES
        pts = [lo + (hi - lo) * i / n for i in range(0 if include_lo else 1, n + 1)]
        for r in pts:
            x = abs(r - s.r0)
            self._push(r, seg.h0 * float(s.phi(x)), phi_p(seg.h0, self.p) * float(s.flux(x)),
                       seg.h0 * float(s.dphi(x)))

    def _dphi_from_flux(self, r, flux):
        return phi_p_inverse(flux / r ** (self.theta - 1.0), self.p)

    def _transit(self, ra: float, phia: float, fluxa: float, dest: float):
        """Cross a turning point ahead of (ra, phia, fluxa) using local series."""
        p = self.p
        target = fluxa / phi_p(phia, p)
        r_star = ra + dest
        for _ in range(30):
            left = _local_series(p, self.theta, r_star, -1, self.rho, self.tol)

            def ratio(y):
                return float(left.flux(y)) / phi_p(float(left.phi(y)), p)

            lo, hi = 0.0, self.rho
            if ratio(hi) < target:
                raise NonConvergence(f"turning point near r={ra} not bracketed by the local series")
            for _ in range(200):
                mid = 0.5 * (lo + hi)
                if mid in (lo, hi):
                    break
                if ratio(mid) < target:
                    lo = mid
                else:
                    hi = mid
            y = 0.5 * (lo + hi)
            new = ra + y
            moved = abs(new - r_star)
            r_star = new
            if self.theta == 1.0 or moved <= 4e-16 * r_star:
                break
        else:
            raise NonConvergence(f"turning point location near r={ra} did not settle")
        left = _local_series(p, self.theta, r_star, -1, self.rho, self.tol)
        h0 = phia / float(left.phi(r_star - ra))
        right = _local_series(p, self.theta, r_star, +1, self.rho, self.tol)
        seg_l = _Segment(ra, r_star, h0, left)
        seg_r = _Segment(r_star, r_star + self.delta, h0, right)
        self.segments.extend([seg_l, seg_r])
        self.n_turning += 1
        return seg_l, seg_r

    def run(self, r_max: float) -> None:
        p, delta = self.p, self.delta
        origin = _Segment(0.0, delta, 1.0, _local_series(p, self.theta, 0.0, +1, self.rho, self.tol))
        self.segments.append(origin)
        self._push(0.0, 1.0, 0.0, 0.0)
        if r_max <= delta:
            origin = _Segment(0.0, r_max, 1.0, origin.series)
            self.segments[0] = origin
            self._emit_series(origin, 0.0, r_max, include_lo=False)
            return
        self._emit_series(origin, 0.0, delta, include_lo=False)
        r, y0, y1 = self.r[-1], self.phi[-1], self.flux[-1]
        k1 = self.sys.rhs(r, y0, y1)
        h = 0.5 * delta
        tm1 = self.theta - 1.0
        n = 0
        while r < r_max:
            n += 1
            if n > _MAX_STEPS:
                raise NonConvergence(f"step budget exhausted at r={r}")
            approaching = p > 2.0 and y1 * y0 > 0.0
            if approaching:
                dest = abs(y1) / (r**tm1 * abs(y0) ** (p - 1.0))
                if dest <= delta:
                    seg_l, seg_r = self._transit(r, y0, y1, dest)
                    r_star = seg_l.hi
                    if r_star >= r_max:
                        self._emit_series(seg_l, r, r_max, include_lo=False)
                        return
                    self._emit_series(seg_l, r, r_star, include_lo=False)
                    end = min(seg_r.hi, r_max)
                    self._emit_series(seg_r, r_star, end, include_lo=False)
                    if end >= r_max:
                        return
                    r, y0, y1 = self.r[-1], self.phi[-1], self.flux[-1]
                    k1 = self.sys.rhs(r, y0, y1)
                    continue
                h = min(h, dest - 0.5 * delta)
            last = False
            if r + h >= r_max:
                h = r_max - r
                last = True
            n0, n1, e0, e1, k7 = self.sys.step(r, y0, y1, h, k1)
            w = (r + h) ** tm1
            sc0 = self.loc * (1.0 + max(abs(y0), abs(n0)))
            sc1 = self.loc * (w + max(abs(y1), abs(n1)))
            err = max(abs(e0) / sc0, abs(e1) / sc1)
            crossed = approaching and (n1 * y1 <= 0.0)
            if err > 1.0 or crossed or not (math.isfinite(n0) and math.isfinite(n1)):
                self.n_rejected += 1
                factor = 0.5 if crossed or not math.isfinite(err) else max(0.2, 0.9 * err**-0.2)
                h *= factor
                if h < 1e-15 * max(1.0, r):
                    raise NonConvergence(f"step size underflow at r={r}")
                continue
            self.steps.append((r, y0, y1))
            r = r_max if last else r + h
            y0, y1, k1 = n0, n1, k7
            self._push(r, y0, y1, self._dphi_from_flux(r, y1))
            h *= min(5.0, max(0.2, 0.9 * err**-0.2)) if err > 0.0 else 5.0


def solve_p(params, r_max: float, tol: float = DEFAULT_TOL) -> SolutionTrace:
    """Integrate the radial profile equation from r = 0 to ``r_max``."""
    prm = _as_params(params).require_poincare()
    if not (math.isfinite(r_max) and r_max > 0.0):
        raise DomainError(f"r_max must be > 0, got {r_max}")
    if not (math.isfinite(tol) and 0.0 < tol < 1.0):
        raise DomainError(f"tol must lie in (0, 1), got {tol}")
    integ = _Integrator(prm.p, prm.theta, tol)
    integ.run(float(r_max))
    nodes = np.column_stack([integ.r, integ.phi, integ.dphi])
    steps = np.array(integ.steps, dtype=float).reshape(-1, 3)
    meta = {
        "n_steps": len(integ.steps),
        "n_rejected": integ.n_rejected,
        "n_turning_points": integ.n_turning,
        "outside_validated_box": not _in_validated_box(prm.p, prm.theta),
    }
    return SolutionTrace(
        PLapParams(prm.p, prm.theta), nodes, float(r_max), integ.delta, tol, 1.0, meta,
        np.asarray(integ.flux, dtype=float), steps, tuple(integ.segments),
    )


# ---------------------------------------------------------------------------
# zeros and eigenpairs


@dataclass(frozen=True)
class ZeroTable:
    p: float
    theta: float
    zeros: tuple
    refinement_tol: float
    slopes: tuple = ()

    def to_json(self) -> str:
        return dumps({"p": self.p, "theta": self.theta, "zeros": list(self.zeros), "tol": self.refinement_tol})


def _refine_zero(trace: SolutionTrace, a: float, b: float, fa: float) -> float:
    width = ZERO_WIDTH * max(1.0, b)
    while b - a > width:
        m = 0.5 * (a + b)
        if m in (a, b):
            break
        fm = trace.evaluate(m)[0]
        if fm == 0.0:
            return m
        if (fm > 0.0) == (fa > 0.0):
            a, fa = m, fm
        else:
            b = m
    return 0.5 * (a + b)


def _sign_changes(trace: SolutionTrace) -> list[tuple[float, float, float]]:
    r, f = trace.r, trace.phi
    out = []
    for i in range(len(r) - 1):
        if f[i] == 0.0 and i > 0:
            out.append((r[i], r[i], f[i]))
        elif f[i] * f[i + 1] < 0.0:
            out.append((r[i], r[i + 1], f[i]))
    return out


def find_zeros(trace: SolutionTrace, k: int) -> ZeroTable:
    """First ``k`` zeros of the profile, extending the trace when needed."""
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    k = int(k)
    brackets = _sign_changes(trace)
    if len(brackets) < k:
        scale = trace.scale
        if brackets:
            est = brackets[0][1] * scale
        else:
            est = nu1_closed_form(trace.p, trace.theta) or trace.r_max * scale
        cap = 64.0 * (1.0 + est)
        r_max = trace.r_max * scale
        while len(brackets) < k:
            if r_max >= cap:
                raise InsufficientRange(f"only {len(brackets)} of {k} zeros found below r={cap:.6g}")
            r_max = min(2.0 * r_max, cap)
            trace = solve_p(trace.params, r_max, trace.tol)
            if scale != 1.0:
                trace = trace.rescaled(scale)
            brackets = _sign_changes(trace)
    zeros, slopes = [], []
    for a, b, fa in brackets[:k]:
        z = a if a == b else _refine_zero(trace, a, b, fa)
        zeros.append(z)
        slopes.append(trace.evaluate(z)[1])
    floor = math.sqrt(ZERO_WIDTH)
    for z, s in zip(zeros, slopes):
        if abs(s) <= floor:
            raise NonConvergence(f"zero at r={z} is not numerically simple (phi'={s:.3g})")
    return ZeroTable(trace.p, trace.theta, tuple(zeros), ZERO_WIDTH, tuple(slopes))


def nu1_closed_form(p: float, theta: float) -> float | None:
    """First zero in the two solvable cases, else ``None``.

    theta = 1: (p-1)^(1/p) pi / (p sin(pi/p)).  p = 2: the first positive zero
    of J_{(theta-2)/2}.
    """
    if theta == 1.0:
        return (p - 1.0) ** (1.0 / p) * math.pi / (p * math.sin(math.pi / p))
    if p == 2.0 and theta >= 1.0:
        return bessel_j_first_zero((theta - 2.0) / 2.0)
    return None


def bessel_profile(theta: float, r):
    """The p = 2 profile Gamma(theta/2) (2/r)^((theta-2)/2) J_{(theta-2)/2}(r)."""
    nu = (theta - 2.0) / 2.0
    g = gamma(theta / 2.0)

    def one(x: float) -> float:
        if x == 0.0:
            return 1.0
        return g * (2.0 / x) ** nu * bessel_j(nu, x)

    if np.ndim(r) == 0:
        return one(float(r))
    return np.array([one(float(x)) for x in np.ravel(r)]).reshape(np.shape(r))


def _initial_range(p: float, theta: float, k: int) -> float:
    est = nu1_closed_form(p, theta) or nu1_closed_form(2.0, theta)
    return (k + 1) * (1.0 + est)


def eigenpair(params: PLapParams, k: int = 1, tol: float = DEFAULT_TOL) -> tuple[float, SolutionTrace]:
    """k-th Dirichlet eigenvalue on [0, R] and the profile r -> phi(nu_k r / R)."""
    prm = params.require_poincare()
    if int(k) != k or k < 1:
        raise DomainError(f"k must be a positive integer, got {k}")
    trace = solve_p(prm, _initial_range(prm.p, prm.theta, int(k)), tol)
    nu_k = find_zeros(trace, int(k)).zeros[-1]
    lam = (nu_k / prm.radius) ** prm.p
    profile = solve_p(prm, nu_k, tol).rescaled(nu_k / prm.radius, r_max=prm.radius)
    return lam, profile
