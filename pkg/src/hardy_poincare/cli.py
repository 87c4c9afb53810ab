"""Command-line front end.

Every subcommand accepts the shared flags below; values come from the flag,
else from the ``--config`` JSON file, else from the built-in default.  The
artifact goes to ``--out`` (or stdout) and a one-line summary to stdout (or
stderr when the artifact itself is on stdout).

Exit status: 0 on success, 2 on invalid input, 3 on numerical failure.
"""

from __future__ import annotations

import argparse
import contextlib
import json
import math
import os
import sys

import numpy as np

from . import __version__
from .constants import lambda_p, lambda_table_csv
from .errors import NumericalFailure, ValidationError
from .geometry import (
    GeometrySpec,
    convergence_orders,
    fit_scaling_exponent,
    from_config,
    parse_geometry,
    verify_gauge_lemma,
)
from .harness import (
    INEQUALITIES,
    grid_cells,
    make_preset,
    nu1,
    run_check,
    sweep,
    sweep_csv,
)
from .serialize import dumps
from .phi_ode import DEFAULT_TOL, PLapParams, eigenpair, find_zeros, solve_p

EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3

DEFAULTS = {
    "p": 2.0,
    "theta": 1.0,
    "alpha": 0.0,
    "R": 1.0,
    "Q": None,
    "geometry": None,
    "fn": "boundary_bump",
    "k": 1,
    "tol": DEFAULT_TOL,
    "quad_tol": 1e-11,
    "seed": 0,
    "workers": 1,
    "out": None,
    "format": None,
    "r_max": 10.0,
    "p_grid": "2:8:0.5",
    "theta_grid": "1:3:1",
    "n_samples": 1_000_000,
    "h_fd": 1e-3,
    "inequalities": "poincare,hardy1,hardy2",
    "fns": "boundary_bump,one_minus_r2,interior_bump,poly_r_1mr",
    "Q_list": None,
    "R_list": None,
}


class UsageError(ValidationError):
    pass


def _g(x: float) -> str:
    return f"{x:.17g}"


def _json(obj) -> str:
    return dumps(obj, indent=2) + "\n"


def _parse_grid(text: str, name: str) -> list[float]:
    """``a:b:step`` (inclusive) or a comma list."""
    text = str(text).strip()
    try:
        if ":" in text:
            parts = [float(v) for v in text.split(":")]
            if len(parts) != 3 or parts[2] <= 0 or parts[1] < parts[0]:
                raise UsageError(f"{name} must be a:b:step with step > 0 and b >= a, got {text!r}")
            a, b, step = parts
            n = int(math.floor((b - a) / step + 1e-9))
            return [a + i * step for i in range(n + 1)]
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError as exc:
        raise UsageError(f"cannot parse {name} {text!r}") from exc


def _add_common(p: argparse.ArgumentParser) -> None:
    g = p.add_argument_group("shared options")
    g.add_argument("--config", help="JSON file with option values (flags take precedence)")
    g.add_argument("--p", type=float)
    g.add_argument("--theta", type=float)
    g.add_argument("--alpha", type=float)
    g.add_argument("--R", type=float, dest="R")
    g.add_argument("--Q", type=float, dest="Q")
    g.add_argument("--geometry", help="geometry name (e.g. heisenberg:1, grushin:1,1,1) or JSON file")
    g.add_argument("--fn", help="test-function preset")
    g.add_argument("--k", type=int)
    g.add_argument("--tol", type=float, help="ODE accuracy target")
    g.add_argument("--quad-tol", type=float, dest="quad_tol")
    g.add_argument("--seed", type=int)
    g.add_argument("--workers", type=int)
    g.add_argument("--out", help="output path (default: stdout)")
    g.add_argument("--format", choices=("csv", "json"))


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hardy-poincare", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=__version__)
    sub = parser.add_subparsers(dest="command", required=True)

    sp = sub.add_parser("nu", help="zeros nu_k(p, theta) of the radial profile")
    _add_common(sp)

    sp = sub.add_parser("lambda", help="table of the remainder constant lambda_p")
    _add_common(sp)
    sp.add_argument("--p-grid", dest="p_grid")

    sp = sub.add_parser("trace", help="sampled solution (r, phi, phi')")
    _add_common(sp)
    sp.add_argument("--r-max", type=float, dest="r_max")

    sp = sub.add_parser("eigen", help="k-th eigenvalue and profile on [0, R]")
    _add_common(sp)

    sp = sub.add_parser("geometry-check", help="gauge lemma residuals and ball-measure scaling")
    _add_common(sp)
    sp.add_argument("--n-samples", type=int, dest="n_samples")
    sp.add_argument("--h-fd", type=float, dest="h_fd")

    sp = sub.add_parser("verify", help="one inequality check")
    _add_common(sp)
    sp.add_argument("inequality", choices=INEQUALITIES)

    sp = sub.add_parser("sweep", help="grid of inequality checks (CSV)")
    _add_common(sp)
    sp.add_argument("--inequalities")
    sp.add_argument("--p-grid", dest="p_grid")
    sp.add_argument("--theta-grid", dest="theta_grid")
    sp.add_argument("--Q-list", dest="Q_list")
    sp.add_argument("--R-list", dest="R_list")
    sp.add_argument("--fns")

    sp = sub.add_parser("table", help="nu_1(p, theta) over a grid")
    _add_common(sp)
    sp.add_argument("--p-grid", dest="p_grid")
    sp.add_argument("--theta-grid", dest="theta_grid")
    return parser


def _load_config(path: str | None) -> dict:
    if not path:
        return {}
    try:
        with open(path, encoding="utf-8") as fh:
            cfg = json.load(fh)
    except OSError as exc:
        raise UsageError(f"cannot read config file {path!r}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"config file {path!r} is not valid JSON: {exc}") from exc
    if not isinstance(cfg, dict):
        raise UsageError("config file must hold a JSON object")
    unknown = set(cfg) - set(DEFAULTS) - {"command", "inequality", "params"}
    if unknown:
        raise UsageError(f"unknown config keys: {', '.join(sorted(unknown))}")
    flat = dict(cfg)
    params = flat.pop("params", None)
    if isinstance(params, dict):
        for key, val in params.items():
            flat.setdefault("R" if key == "radius" else key, val)
    return flat


class _Options:
    def __init__(self, args: argparse.Namespace):
        self._args = args
        self._cfg = _load_config(getattr(args, "config", None))

    def __getattr__(self, key):
        val = getattr(self._args, key, None)
        if val is None:
            val = self._cfg.get(key)
        if val is None:
            val = DEFAULTS.get(key)
        return val


def _geometry(opts: _Options) -> GeometrySpec | None:
    g = opts.geometry
    if g is None:
        return None
    if isinstance(g, dict):
        return from_config(g)
    if os.path.isfile(g):
        try:
            with open(g, encoding="utf-8") as fh:
                return from_config(json.load(fh))
        except json.JSONDecodeError as exc:
            raise UsageError(f"geometry file {g!r} is not valid JSON: {exc}") from exc
    return parse_geometry(g)


def _Q(opts: _Options, required: bool = True) -> float | None:
    if opts.Q is not None:
        return float(opts.Q)
    spec = _geometry(opts)
    if spec is not None:
        return spec.Q
    if required:
        raise UsageError("this command needs --Q or --geometry")
    return None


def _params(opts: _Options) -> PLapParams:
    return PLapParams(float(opts.p), float(opts.theta), float(opts.alpha), float(opts.R))


def _check_positive(name: str, val, integer: bool = False):
    if integer and (int(val) != val):
        raise UsageError(f"--{name} must be an integer")
    if not val > 0:
        raise UsageError(f"--{name} must be positive, got {val}")
    return val


def _grid(opts: _Options, key: str, grid_key: str) -> list[float]:
    """A scalar ``--p``/``--theta`` (flag or config) overrides the grid option."""
    single = getattr(opts._args, key, None)
    if single is None:
        single = opts._cfg.get(key)
    if single is not None:
        return [float(single)]
    return _parse_grid(getattr(opts, grid_key), "--" + grid_key.replace("_", "-"))


def _tol(opts: _Options) -> float:
    tol = float(opts.tol)
    if not 0.0 < tol < 1.0:
        raise UsageError(f"--tol must lie in (0, 1), got {tol}")
    return tol


# ---------------------------------------------------------------------------
# commands: each returns (artifact text, summary line)


def cmd_nu(opts):
    prm = _params(opts).require_poincare()
    k = _check_positive("k", opts.k, integer=True)
    tol = _tol(opts)
    zt = find_zeros(solve_p(prm, (k + 1) * (2.0 + prm.theta), tol), k)
    fmt = opts.format or "json"
    if fmt == "json":
        text = zt.to_json() + "\n"
    else:
        text = "k,nu\n" + "".join(f"{i + 1},{_g(z)}\n" for i, z in enumerate(zt.zeros))
    return text, f"nu(p={prm.p:g}, theta={prm.theta:g}): first {k} zeros, nu_1 = {_g(zt.zeros[0])}"


def cmd_lambda(opts):
    ps = _grid(opts, "p", "p_grid")
    rows = [lambda_p(p) for p in ps]
    fmt = opts.format or "csv"
    if fmt == "csv":
        text = lambda_table_csv(ps)
    else:
        text = _json([{"p": r.p, "lambda_p": r.value, "argmin": r.argmin} for r in rows])
    return text, f"lambda_p over {len(rows)} values of p; lambda_{_g(rows[0].p)} = {_g(rows[0].value)}"


def cmd_trace(opts):
    prm = _params(opts).require_poincare()
    r_max = _check_positive("r-max", float(opts.r_max))
    tr = solve_p(prm, r_max, _tol(opts))
    fmt = opts.format or "csv"
    if fmt == "csv":
        text = tr.to_csv()
    else:
        text = _json({"p": prm.p, "theta": prm.theta, "r_max": tr.r_max, "seed_cutoff": tr.seed_cutoff,
                      "tol": tr.tol, "metadata": tr.metadata,
                      "nodes": [[float(a), float(b), float(c)] for a, b, c in tr.nodes]})
    return text, f"trace(p={prm.p:g}, theta={prm.theta:g}) to r={r_max:g}: {len(tr.nodes)} nodes"


def cmd_eigen(opts):
    prm = _params(opts).require_poincare()
    k = _check_positive("k", opts.k, integer=True)
    lam, prof = eigenpair(prm, k, _tol(opts))
    nu = prof.scale * prm.radius
    fmt = opts.format or "json"
    if fmt == "json":
        text = _json({"p": prm.p, "theta": prm.theta, "R": prm.radius, "k": k, "nu_k": nu, "lambda_k": lam,
                      "profile_end_value": float(prof.phi[-1])})
    else:
        text = prof.to_csv()
    return text, f"lambda_{k}(p={prm.p:g}, theta={prm.theta:g}, R={prm.radius:g}) = {_g(lam)}"


def _sample_points(spec: GeometrySpec) -> list[np.ndarray]:
    """Fixed points away from the degenerate set of each built-in gauge."""
    N = spec.dims
    base = np.array([0.7, 0.4, 0.3, 0.5, 0.6, 0.2, 0.45, 0.35][:N] if N <= 8 else np.linspace(0.3, 0.7, N))
    alt = base[::-1].copy()
    return [base, alt]


def cmd_geometry_check(opts):
    spec = _geometry(opts)
    if spec is None:
        raise UsageError("geometry-check needs --geometry")
    p = float(opts.p)
    if p < 2.0:
        raise UsageError(f"--p must be >= 2, got {p}")
    workers = _check_positive("workers", opts.workers, integer=True)
    h0 = _check_positive("h-fd", float(opts.h_fd))
    hs = [h0, h0 / 2.0, h0 / 4.0]
    lemma = []
    for x in _sample_points(spec):
        res = [verify_gauge_lemma(spec, p, x, h) for h in hs]
        r1 = [r.r1 for r in res]
        r2 = [r.r2 for r in res]
        lemma.append({"point": x.tolist(), "h": hs, "r1": r1, "r2": r2,
                      "order_r1": convergence_orders(r1), "order_r2": convergence_orders(r2)})
    fit = fit_scaling_exponent(spec, float(opts.alpha), float(opts.R), 2.0, int(opts.n_samples), int(opts.seed),
                               int(workers))
    doc = {
        "geometry": spec.to_dict(),
        "Q": spec.Q,
        "p": p,
        "advisory": spec.advisory,
        "gauge_lemma": lemma,
        "ball_measure": {
            "alpha": float(opts.alpha),
            "R": {"estimate": fit.small.estimate, "stderr": fit.small.stderr, "n": fit.small.n, "seed": fit.small.seed},
            "2R": {"estimate": fit.large.estimate, "stderr": fit.large.stderr, "n": fit.large.n, "seed": fit.large.seed},
            "Q_fit": fit.Q_fit,
            "Q_sigma": fit.sigma,
        },
    }
    text = _json(doc)
    return text, f"{spec.label()}: Q = {spec.Q:g}, fitted {fit.Q_fit:.4f} +- {fit.sigma:.4f}"


def cmd_verify(opts):
    prm = _params(opts)
    Q = _Q(opts)
    ineq = opts.inequality
    f = make_preset(str(opts.fn), prm, _tol(opts))
    rep = run_check(ineq, prm, Q, f, tol=float(opts.quad_tol), ode_tol=_tol(opts))
    fmt = opts.format or "json"
    if fmt == "json":
        text = rep.to_json() + "\n"
    else:
        text = sweep_csv([rep])
    status = "holds" if rep.holds() else "VIOLATED"
    what = "residual" if ineq == "identity" else "gap"
    return text, f"{ineq} p={prm.p:g} theta={prm.theta:g} Q={Q:g} R={prm.radius:g} fn={f.id}: {what} = {_g(rep.gap)} ({status})"


def cmd_sweep(opts):
    ineqs = [s.strip() for s in str(opts.inequalities).split(",") if s.strip()]
    for s in ineqs:
        if s not in INEQUALITIES:
            raise UsageError(f"unknown inequality {s!r}")
    ps = _grid(opts, "p", "p_grid")
    thetas = _grid(opts, "theta", "theta_grid")
    Qs = _parse_grid(opts.Q_list, "--Q-list") if opts.Q_list else [_Q(opts)]
    Rs = _parse_grid(opts.R_list, "--R-list") if opts.R_list else [float(opts.R)]
    fns = [s.strip() for s in str(opts.fns).split(",") if s.strip()]
    workers = _check_positive("workers", opts.workers, integer=True)
    cells = grid_cells(ineqs, ps, thetas, Qs, Rs, fns)
    reports = sweep(cells, workers=int(workers), tol=float(opts.quad_tol), ode_tol=_tol(opts))
    bad = sum(not r.holds() for r in reports)
    if (opts.format or "csv") == "csv":
        text = sweep_csv(reports)
    else:
        text = _json([r.to_dict() for r in reports])
    return text, f"sweep: {len(reports)} checks, {bad} violations"


def cmd_table(opts):
    ps = _grid(opts, "p", "p_grid")
    thetas = _grid(opts, "theta", "theta_grid")
    tol = _tol(opts)
    rows = []
    for p in ps:
        for t in thetas:
            rows.append((p, t, nu1(float(p), float(t), tol)))
    if (opts.format or "csv") == "csv":
        text = "p,theta,nu1\n" + "".join(f"{_g(p)},{_g(t)},{_g(v)}\n" for p, t, v in rows)
    else:
        text = _json([{"p": p, "theta": t, "nu1": v} for p, t, v in rows])
    return text, f"nu_1 table: {len(rows)} entries"


COMMANDS = {
    "nu": cmd_nu,
    "lambda": cmd_lambda,
    "trace": cmd_trace,
    "eigen": cmd_eigen,
    "geometry-check": cmd_geometry_check,
    "verify": cmd_verify,
    "sweep": cmd_sweep,
    "table": cmd_table,
}


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stderr(stderr), contextlib.redirect_stdout(stdout):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        opts = _Options(args)
        text, summary = COMMANDS[args.command](opts)
        if opts.out:
            try:
                with open(opts.out, "w", encoding="utf-8", newline="\n") as fh:
                    fh.write(text)
            except OSError as exc:
                raise UsageError(f"cannot write {opts.out!r}: {exc.strerror}") from exc
            print(summary, file=stdout)
        else:
            stdout.write(text)
            print(summary, file=stderr)
        return EXIT_OK
    except ValidationError as exc:
        print(f"error: {exc}", file=stderr)
        return EXIT_VALIDATION
    except NumericalFailure as exc:
        print(f"numerical failure: {exc}", file=stderr)
        return EXIT_NUMERICAL


def main() -> None:
    sys.exit(run())


if __name__ == "__main__":
    main()
