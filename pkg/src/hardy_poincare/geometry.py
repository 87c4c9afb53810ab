"""Gauge geometries: Euclidean, Heisenberg (Koranyi gauge), Baouendi-Grushin
and Heisenberg-Greiner, plus a hook for user-supplied gauges.

Each geometry is a gauge d on R^N, homogeneous of degree one for an
anisotropic dilation x_j -> lam^beta_j x_j, together with the matrix sigma
whose rows are the horizontal vector fields.  Points are arrays with the
coordinate index last: Heisenberg-type points are ordered (x_1..x_n, y_1..y_n, t),
Grushin points (x_1..x_n, y_1..y_k).
"""

from __future__ import annotations

import json
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

from .errors import DegeneratePoint, DomainError
from .serialize import dumps

_SPHERE_SAMPLES = 8192
_BOX_SAFETY = 1.25
_CHUNK = 1 << 16


@dataclass(frozen=True)
class GeometrySpec:
    kind: str
    dims: int
    Q: float
    dilation_exponents: tuple
    n: int = 0
    k: int = 0
    gamma: float = 0.0
    custom_gauge: Callable | None = field(default=None, compare=False, repr=False)
    custom_grad_norm: Callable | None = field(default=None, compare=False, repr=False)
    custom_sigma: Callable | None = field(default=None, compare=False, repr=False)

    @property
    def advisory(self) -> bool:
        """Identity checks on user-supplied gauges are advisory only."""
        return self.kind == "custom"

    def label(self) -> str:
        if self.kind == "euclidean":
            return f"euclidean(N={self.dims})"
        if self.kind == "heisenberg":
            return f"heisenberg(n={self.n})"
        if self.kind == "grushin":
            return f"grushin(n={self.n},k={self.k},gamma={self.gamma:g})"
        if self.kind == "greiner":
            return f"greiner(n={self.n},gamma={self.gamma:g})"
        return "custom"

    def to_dict(self) -> dict:
        if self.kind == "euclidean":
            return {"kind": "euclidean", "N": self.dims}
        if self.kind == "heisenberg":
            return {"kind": "heisenberg", "n": self.n}
        if self.kind == "grushin":
            return {"kind": "grushin", "n": self.n, "k": self.k, "gamma": self.gamma}
        if self.kind == "greiner":
            return {"kind": "greiner", "n": self.n, "gamma": self.gamma}
        return {"kind": "custom", "N": self.dims, "Q": self.Q}


def _positive_int(name: str, v) -> int:
    if isinstance(v, bool) or int(v) != v or v < 1:
        raise DomainError(f"{name} must be a positive integer, got {v!r}")
    return int(v)


def euclidean(N: int) -> GeometrySpec:
    N = _positive_int("N", N)
    return GeometrySpec("euclidean", N, float(N), (1.0,) * N)


def heisenberg(n: int = 1) -> GeometrySpec:
    n = _positive_int("n", n)
    return GeometrySpec("heisenberg", 2 * n + 1, float(2 * n + 2), (1.0,) * (2 * n) + (2.0,), n=n)


def grushin(n: int = 1, k: int = 1, gamma: float = 1.0) -> GeometrySpec:
    n = _positive_int("n", n)
    k = _positive_int("k", k)
    if not (math.isfinite(gamma) and gamma >= 0.0):
        raise DomainError(f"grushin gamma must be >= 0, got {gamma}")
    g = float(gamma)
    return GeometrySpec("grushin", n + k, n + (1.0 + g) * k, (1.0,) * n + (1.0 + g,) * k, n=n, k=k, gamma=g)


def greiner(n: int = 1, gamma: float = 1.0) -> GeometrySpec:
    n = _positive_int("n", n)
    if not (math.isfinite(gamma) and gamma >= 1.0):
        raise DomainError(f"greiner gamma must be >= 1, got {gamma}")
    g = float(gamma)
    return GeometrySpec("greiner", 2 * n + 1, 2.0 * n + 2.0 * g, (1.0,) * (2 * n) + (2.0 * g,), n=n, gamma=g)


def custom(dims: int, Q: float, gauge_fn, grad_norm_fn, dilation_exponents=None, sigma_fn=None) -> GeometrySpec:
    """User-supplied gauge.  ``gauge_fn`` and ``grad_norm_fn`` act on arrays of
    shape (..., dims); ``sigma_fn`` (optional, default identity) returns the
    (..., h, dims) matrix of horizontal fields."""
    dims = _positive_int("dims", dims)
    betas = tuple(float(b) for b in (dilation_exponents or (1.0,) * dims))
    if len(betas) != dims:
        raise DomainError("dilation_exponents must have one entry per coordinate")
    return GeometrySpec("custom", dims, float(Q), betas, custom_gauge=gauge_fn,
                        custom_grad_norm=grad_norm_fn, custom_sigma=sigma_fn)


def from_config(cfg: dict) -> GeometrySpec:
    """Build a spec from ``{"kind": "heisenberg", "n": 1}`` style mappings."""
    if not isinstance(cfg, dict) or "kind" not in cfg:
        raise DomainError("geometry config needs a 'kind' entry")
    kind = str(cfg["kind"]).lower()
    try:
        if kind == "euclidean":
            return euclidean(cfg.get("N", cfg.get("n", 3)))
        if kind == "heisenberg":
            return heisenberg(cfg.get("n", 1))
        if kind == "grushin":
            return grushin(cfg.get("n", 1), cfg.get("k", 1), float(cfg.get("gamma", 1.0)))
        if kind == "greiner":
            return greiner(cfg.get("n", 1), float(cfg.get("gamma", 1.0)))
    except (TypeError, ValueError) as exc:
        if isinstance(exc, DomainError):
            raise
        raise DomainError(f"bad geometry parameters in {cfg}: {exc}") from exc
    raise DomainError(f"unknown geometry kind {cfg['kind']!r}")


def parse_geometry(text: str) -> GeometrySpec:
    """Parse ``name[:a,b,c]`` (e.g. ``heisenberg:1``, ``grushin:1,1,2``) or a JSON object."""
    text = text.strip()
    if text.startswith("{"):
        try:
            return from_config(json.loads(text))
        except json.JSONDecodeError as exc:
            raise DomainError(f"geometry JSON is malformed: {exc}") from exc
    name, _, rest = text.partition(":")
    args = [a for a in rest.split(",") if a.strip()] if rest else []
    keys = {"euclidean": ["N"], "heisenberg": ["n"], "grushin": ["n", "k", "gamma"], "greiner": ["n", "gamma"]}
    name = name.lower()
    if name not in keys:
        raise DomainError(f"unknown geometry {name!r}; expected one of {sorted(keys)}")
    if len(args) > len(keys[name]):
        raise DomainError(f"too many parameters for {name}")
    cfg = {"kind": name}
    for key, val in zip(keys[name], args):
        try:
            cfg[key] = float(val) if key == "gamma" else int(val)
        except ValueError as exc:
            raise DomainError(f"cannot parse {key}={val!r} for {name}") from exc
    return from_config(cfg)


# ---------------------------------------------------------------------------
# pointwise geometry


def _points(spec: GeometrySpec, x) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    if x.shape[-1:] != (spec.dims,):
        raise DomainError(f"points must have last dimension {spec.dims}, got shape {x.shape}")
    return x


def _split_z_t(spec, x):
    return x[..., : 2 * spec.n], x[..., -1]


def gauge(spec: GeometrySpec, x):
    """The gauge d(x) (vectorized over leading axes)."""
    x = _points(spec, x)
    if spec.kind == "euclidean":
        return np.linalg.norm(x, axis=-1)
    if spec.kind == "heisenberg":
        z, t = _split_z_t(spec, x)
        z2 = np.sum(z * z, axis=-1)
        return (z2 * z2 + t * t) ** 0.25
    if spec.kind == "grushin":
        m = 2.0 * (1.0 + spec.gamma)
        xa = np.linalg.norm(x[..., : spec.n], axis=-1)
        y2 = np.sum(x[..., spec.n:] ** 2, axis=-1)
        return (xa**m + y2) ** (1.0 / m)
    if spec.kind == "greiner":
        z, t = _split_z_t(spec, x)
        za = np.linalg.norm(z, axis=-1)
        return (za ** (4.0 * spec.gamma) + t * t) ** (1.0 / (4.0 * spec.gamma))
    return np.asarray(spec.custom_gauge(x), dtype=float)


def dilate(spec: GeometrySpec, x, lam: float):
    x = _points(spec, x)
    return x * lam ** np.asarray(spec.dilation_exponents)


def horizontal_gradient_norm(spec: GeometrySpec, x):
    """|grad_L d|(x) from the closed forms; raises DomainError at x = 0."""
    x = _points(spec, x)
    if np.any(np.all(x == 0.0, axis=-1)):
        raise DomainError("the horizontal gradient of the gauge is undefined at the origin")
    if spec.kind == "euclidean":
        return np.ones(x.shape[:-1]) if x.ndim > 1 else 1.0
    d = gauge(spec, x)
    if spec.kind == "heisenberg":
        z, _ = _split_z_t(spec, x)
        return np.linalg.norm(z, axis=-1) / d
    if spec.kind == "grushin":
        xa = np.linalg.norm(x[..., : spec.n], axis=-1)
        return (xa / d) ** spec.gamma
    if spec.kind == "greiner":
        z, _ = _split_z_t(spec, x)
        return (np.linalg.norm(z, axis=-1) / d) ** (2.0 * spec.gamma - 1.0)
    return np.asarray(spec.custom_grad_norm(x), dtype=float)


def gauge_gradient(spec: GeometrySpec, x):
    """Euclidean gradient of the gauge, differentiated by hand (x != 0)."""
    x = _points(spec, x)
    d = gauge(spec, x)[..., None]
    if spec.kind == "euclidean":
        return x / d
    out = np.empty_like(x)
    if spec.kind == "heisenberg":
        z, t = _split_z_t(spec, x)
        z2 = np.sum(z * z, axis=-1)[..., None]
        out[..., :-1] = z2 * z / d**3
        out[..., -1] = t / (2.0 * d[..., 0] ** 3)
        return out
    if spec.kind == "grushin":
        m = 2.0 * (1.0 + spec.gamma)
        xs = x[..., : spec.n]
        xa = np.linalg.norm(xs, axis=-1)[..., None]
        out[..., : spec.n] = xa ** (m - 2.0) * xs / d ** (m - 1.0)
        out[..., spec.n:] = x[..., spec.n:] / ((1.0 + spec.gamma) * d ** (m - 1.0))
        return out
    if spec.kind == "greiner":
        g = spec.gamma
        z, t = _split_z_t(spec, x)
        za = np.linalg.norm(z, axis=-1)[..., None]
        out[..., :-1] = za ** (4.0 * g - 2.0) * z / d ** (4.0 * g - 1.0)
        out[..., -1] = t / (2.0 * g * d[..., 0] ** (4.0 * g - 1.0))
        return out
    return _fd_gradient(lambda y: gauge(spec, y), x, 1e-6)


def sigma(spec: GeometrySpec, x):
    """Matrix of horizontal vector fields, shape (..., h, N)."""
    x = _points(spec, x)
    lead = x.shape[:-1]
    N = spec.dims
    if spec.kind == "euclidean":
        return np.broadcast_to(np.eye(N), lead + (N, N)).copy()
    if spec.kind in ("heisenberg", "greiner"):
        n = spec.n
        s = np.zeros(lead + (2 * n, N))
        z, _ = _split_z_t(spec, x)
        if spec.kind == "heisenberg":
            coef = 2.0 * np.ones(lead)
        else:
            za = np.linalg.norm(z, axis=-1)
            coef = 2.0 * spec.gamma * za ** (2.0 * spec.gamma - 2.0)
        for i in range(n):
            s[..., i, i] = 1.0
            s[..., i, -1] = coef * z[..., n + i]
            s[..., n + i, n + i] = 1.0
            s[..., n + i, -1] = -coef * z[..., i]
        return s
    if spec.kind == "grushin":
        n, k = spec.n, spec.k
        s = np.zeros(lead + (n + k, N))
        xa = np.linalg.norm(x[..., :n], axis=-1)
        for i in range(n):
            s[..., i, i] = 1.0
        for j in range(k):
            s[..., n + j, n + j] = (1.0 + spec.gamma) * xa**spec.gamma
        return s
    if spec.custom_sigma is None:
        return np.broadcast_to(np.eye(N), lead + (N, N)).copy()
    return np.asarray(spec.custom_sigma(x), dtype=float)


def horizontal_gradient(spec: GeometrySpec, x):
    """sigma(x) grad d(x)."""
    x = _points(spec, x)
    return np.einsum("...ij,...j->...i", sigma(spec, x), gauge_gradient(spec, x))


def degenerate_distance(spec: GeometrySpec, x) -> float:
    """Distance from x to the set where the horizontal structure degenerates
    (the origin; plus z = 0 for Heisenberg-type and x = 0 for Grushin)."""
    x = _points(spec, x)
    if spec.kind in ("heisenberg", "greiner"):
        return float(np.linalg.norm(x[..., : 2 * spec.n]))
    if spec.kind == "grushin":
        return float(np.linalg.norm(x[..., : spec.n]))
    return float(np.linalg.norm(x))


# ---------------------------------------------------------------------------
# finite-difference check of L_p d = (Q-1)|grad_L d|^p / d


def _fd_gradient(fn, x: np.ndarray, h: float) -> np.ndarray:
    """Central-difference gradient of a scalar function at points x (..., N)."""
    N = x.shape[-1]
    out = np.empty_like(x)
    for j in range(N):
        e = np.zeros(N)
        e[j] = h
        out[..., j] = (fn(x + e) - fn(x - e)) / (2.0 * h)
    return out


@dataclass(frozen=True)
class GaugeResiduals:
    r1: float
    r2: float
    h_fd: float
    advisory: bool = False

    def __iter__(self):
        return iter((self.r1, self.r2))


def verify_gauge_lemma(spec: GeometrySpec, p: float, sample, h_fd: float = 1e-3) -> GaugeResiduals:
    """Finite-difference residuals of the two gauge identities at ``sample``.

    r1 compares div(sigma^T |grad_L d|^(p-2) grad_L d), computed as nested
    central differences with inner gradients also by differences, against
    (Q-1)|grad_L d|^p / d.  r2 is |grad_L |grad_L d| . grad_L d| with the outer
    gradient taken by differences of the closed-form norm.  Both are O(h_fd^2).
    """
    if not (math.isfinite(p) and p >= 2.0):
        raise DomainError(f"p must be >= 2, got {p}")
    if not h_fd > 0.0:
        raise DomainError(f"h_fd must be > 0, got {h_fd}")
    x = _points(spec, sample).astype(float)
    if x.ndim != 1:
        raise DomainError("verify_gauge_lemma takes a single sample point")
    # the nested stencil reaches 2 h_fd from the sample
    if degenerate_distance(spec, x) <= 2.0 * h_fd:
        raise DegeneratePoint(f"sample {x.tolist()} is within the finite-difference stencil of the degenerate set")

    def gfun(y):
        return gauge(spec, y)

    def flux(y):
        grad = _fd_gradient(gfun, y, h_fd)
        s = sigma(spec, y)
        hg = np.einsum("...ij,...j->...i", s, grad)
        norm = np.linalg.norm(hg, axis=-1)
        scaled = hg * (norm ** (p - 2.0))[..., None]
        return np.einsum("...ij,...i->...j", s, scaled)

    N = spec.dims
    div = 0.0
    for j in range(N):
        e = np.zeros(N)
        e[j] = h_fd
        div += (flux(x + e)[j] - flux(x - e)[j]) / (2.0 * h_fd)
    nrm = float(horizontal_gradient_norm(spec, x))
    d = float(gauge(spec, x))
    r1 = abs(div - (spec.Q - 1.0) * nrm**p / d)

    grad_norm = _fd_gradient(lambda y: np.asarray(horizontal_gradient_norm(spec, y), dtype=float), x, h_fd)
    s = sigma(spec, x)
    hgn = s @ grad_norm
    hgd = horizontal_gradient(spec, x)
    r2 = abs(float(hgn @ hgd))
    return GaugeResiduals(float(r1), r2, h_fd, spec.advisory)


def convergence_orders(values) -> list[float]:
    """Observed orders log2(r(h) / r(h/2)) for residuals at successively halved h.

    A pair whose finer residual is exactly zero (rounding floor) reports inf.
    """
    out = []
    for a, b in zip(values[:-1], values[1:]):
        if b == 0.0:
            out.append(math.inf)
        elif a == 0.0:
            out.append(-math.inf)
        else:
            out.append(math.log2(a / b))
    return out


# ---------------------------------------------------------------------------
# Monte Carlo measure of gauge balls


def _rng(seed: int, stream: int, worker: int) -> np.random.Generator:
    ss = np.random.SeedSequence(seed, spawn_key=(stream, worker))
    return np.random.Generator(np.random.Philox(ss))


def gauge_equivalence_constant(spec: GeometrySpec) -> float:
    """Estimate c with c^-1 N(x) <= d(x) <= c N(x), where
    N(x) = (sum_j |x_j|^(2/beta_j))^(1/2), by sampling the N-unit sphere."""
    rng = _rng(0, 9, 0)
    u = rng.standard_normal((_SPHERE_SAMPLES, spec.dims))
    u = np.vstack([u, np.eye(spec.dims), -np.eye(spec.dims)])
    u /= np.linalg.norm(u, axis=1, keepdims=True)
    betas = np.asarray(spec.dilation_exponents)
    pts = np.sign(u) * np.abs(u) ** betas
    d = gauge(spec, pts)
    return float(max(d.max(), 1.0 / d.min()))


def enclosing_box(spec: GeometrySpec, R: float) -> np.ndarray:
    """Half-widths of a box containing {d <= R}."""
    c = _BOX_SAFETY * gauge_equivalence_constant(spec)
    return (c * R) ** np.asarray(spec.dilation_exponents)


@dataclass(frozen=True)
class MCEstimate:
    estimate: float
    stderr: float
    n: int
    seed: int

    def __iter__(self):
        return iter((self.estimate, self.stderr))

    def to_json(self) -> str:
        return dumps({"estimate": self.estimate, "stderr": self.stderr, "n": self.n, "seed": self.seed})


def _mc_worker(spec, alpha, R, half, n, seed, stream, worker):
    rng = _rng(seed, stream, worker)
    s1 = 0.0
    s2 = 0.0
    left = n
    while left > 0:
        m = min(left, _CHUNK)
        pts = (2.0 * rng.random((m, spec.dims)) - 1.0) * half
        inside = gauge(spec, pts) <= R
        vals = np.zeros(m)
        if np.any(inside):
            if alpha == 0.0:
                vals[inside] = 1.0
            else:
                inner = pts[inside]
                nz = ~np.all(inner == 0.0, axis=1)
                v = np.ones(inner.shape[0])
                v[nz] = np.asarray(horizontal_gradient_norm(spec, inner[nz]), dtype=float) ** alpha
                vals[inside] = v
        s1 += float(vals.sum())
        s2 += float((vals * vals).sum())
        left -= m
    return s1, s2


def _mc(spec, alpha, R, n_samples, seed, workers, stream) -> MCEstimate:
    half = enclosing_box(spec, R)
    volume = float(np.prod(2.0 * half))
    counts = [n_samples // workers + (1 if w < n_samples % workers else 0) for w in range(workers)]
    if workers == 1:
        parts = [_mc_worker(spec, alpha, R, half, counts[0], seed, stream, 0)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            futs = [pool.submit(_mc_worker, spec, alpha, R, half, counts[w], seed, stream, w) for w in range(workers)]
            parts = [f.result() for f in futs]
    s1 = sum(p[0] for p in parts)
    s2 = sum(p[1] for p in parts)
    mean = s1 / n_samples
    var = max(s2 / n_samples - mean * mean, 0.0) * n_samples / (n_samples - 1)
    return MCEstimate(volume * mean, volume * math.sqrt(var / n_samples), n_samples, seed)


def ball_measure_mc(spec: GeometrySpec, alpha: float, R: float, n_samples: int, seed: int,
                    workers: int = 1, stream: int = 0) -> MCEstimate:
    """Monte Carlo estimate of the integral of |grad_L d|^alpha over {d <= R}.

    Uniform samples in an enclosing box; each worker draws from its own
    Philox stream keyed by (seed, stream, worker index), so the result is
    reproducible for a fixed worker count.
    """
    if not (math.isfinite(alpha) and alpha >= 0.0):
        raise DomainError(f"alpha must be >= 0, got {alpha}")
    if not (math.isfinite(R) and R > 0.0):
        raise DomainError(f"R must be > 0, got {R}")
    if int(n_samples) != n_samples or n_samples < 10_000:
        raise DomainError(f"n_samples must be an integer >= 10000, got {n_samples}")
    if int(workers) != workers or workers < 1:
        raise DomainError(f"workers must be a positive integer, got {workers}")
    return _mc(spec, float(alpha), float(R), int(n_samples), int(seed), int(workers), int(stream))


@dataclass(frozen=True)
class ScalingFit:
    Q_fit: float
    sigma: float
    Q: float
    small: MCEstimate
    large: MCEstimate
    ratio: float

    @property
    def z_score(self) -> float:
        return abs(self.Q_fit - self.Q) / self.sigma if self.sigma > 0 else math.inf


def fit_scaling_exponent(spec: GeometrySpec, alpha: float = 0.0, R: float = 1.0, factor: float = 2.0,
                         n_samples: int = 1_000_000, seed: int = 0, workers: int = 1) -> ScalingFit:
    """Fit Q from estimates at R and factor*R drawn from independent streams."""
    if not factor > 1.0:
        raise DomainError(f"factor must exceed 1, got {factor}")
    a = ball_measure_mc(spec, alpha, R, n_samples, seed, workers, stream=0)
    b = ball_measure_mc(spec, alpha, factor * R, n_samples, seed, workers, stream=1)
    lf = math.log(factor)
    q = math.log(b.estimate / a.estimate) / lf
    sig = math.hypot(a.stderr / a.estimate, b.stderr / b.estimate) / lf
    return ScalingFit(q, sig, spec.Q, a, b, b.estimate / a.estimate)
