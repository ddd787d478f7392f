"""Command-line front end: ``lswe <command> [options]``.

Every option can also come from a JSON config file (``--config``) whose keys
are the option names with dashes replaced by underscores.  Precedence is
built-in defaults < config file < command line.  Reports are JSON documents
tagged ``"schema": "lswe/1"`` that embed the resolved configuration; CSV is
available for path and grid outputs.

Exit codes: 0 success, 2 invalid input, 3 numerical failure.  Errors are
reported as JSON on stderr.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from datetime import datetime, timezone

import numpy as np

from . import elementary, fdsolver, geodesics, geometry, huygens, waves
from .errors import LSWEError, NumericalError, StationaryPoint
from .surface import PotentialSurface, first_order_coefficients, gauge

SCHEMA = "lswe/1"
EXIT_OK = 0
EXIT_VALIDATION = 2
EXIT_NUMERICAL = 3


class UsageError(ValueError):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


# ---------------------------------------------------------------- value coercion


def _floats(value, name: str) -> list[float]:
    if isinstance(value, str):
        parts = [p for p in value.replace(";", ",").split(",") if p.strip()]
        try:
            return [float(p) for p in parts]
        except ValueError:
            raise UsageError(f"{name}: expected comma-separated numbers, got {value!r}") from None
    if isinstance(value, (int, float)) and not isinstance(value, bool):
        return [float(value)]
    if isinstance(value, (list, tuple)) and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return [float(v) for v in value]
    raise UsageError(f"{name}: expected a list of numbers, got {value!r}")


def _point_list(value, name: str) -> list[list[float]]:
    if isinstance(value, (str, int, float)):
        return [_floats(value, name)]
    if isinstance(value, (list, tuple)) and value and all(
            isinstance(v, (int, float)) and not isinstance(v, bool) for v in value):
        return [_floats(value, name)]
    if isinstance(value, (list, tuple)):
        return [_floats(v, name) for v in value]
    raise UsageError(f"{name}: expected points, got {value!r}")


def _vector(value, name: str, length: int) -> np.ndarray:
    v = _floats(value, name)
    if len(v) != length:
        raise UsageError(f"{name}: expected {length} numbers, got {len(v)}")
    return np.array(v)


def _q_part(point: list[float], n: int, name: str) -> np.ndarray:
    """Accept ``q`` or ``(q, nu)``; commands on q alone ignore a trailing nu."""
    if len(point) not in (n, n + 1):
        raise UsageError(f"{name}: expected {n} or {n + 1} coordinates, got {len(point)}")
    return np.array(point[:n])


def _full_point(point: list[float], n: int, name: str) -> np.ndarray:
    if len(point) != n + 1:
        raise UsageError(f"{name}: expected {n + 1} coordinates (q..., nu), got {len(point)}")
    return np.array(point)


def _jsonable(obj):
    if isinstance(obj, dict):
        return {str(k): _jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return _jsonable(obj.tolist())
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    return obj


def _threads() -> int:
    raw = os.environ.get("LSWE_THREADS", "").strip()
    if not raw:
        return 1
    try:
        n = int(raw)
    except ValueError:
        raise UsageError(f"LSWE_THREADS must be a positive integer, got {raw!r}") from None
    if n < 1:
        raise UsageError("LSWE_THREADS must be a positive integer")
    return n


def _map_points(fn, items):
    """Apply ``fn`` to each item; results keep input order whatever the thread count."""
    n = min(_threads(), max(1, len(items)))
    if n == 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))


# ---------------------------------------------------------------- parser


COMMON = {"surface": None, "dim": None, "threshold": 1e-10, "output": None, "format": "json"}
DEFAULTS: dict[str, dict] = {}
CSV_COMMANDS = {"geodesic", "solve", "plot-data"}


def _opt(parser, defaults: dict, flag: str, default, **kw):
    dest = flag.lstrip("-").replace("-", "_")
    defaults[dest] = default
    parser.add_argument(flag, dest=dest, default=argparse.SUPPRESS, **kw)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="lswe", description="Level-set wave equation toolkit")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def command(name, help_text):
        p = sub.add_parser(name, help=help_text)
        d = dict(COMMON)
        p.add_argument("--config", help="JSON file with option values")
        p.add_argument("--dry-run", action="store_true", help="validate input and stop")
        p.add_argument("--surface", default=argparse.SUPPRESS, help="potential V(q1..qN)")
        p.add_argument("--dim", type=int, default=argparse.SUPPRESS, help="number of coordinates N")
        p.add_argument("--threshold", type=float, default=argparse.SUPPRESS,
                       help="stationary threshold on G (default 1e-10)")
        p.add_argument("--output", default=argparse.SUPPRESS, help="write report here")
        p.add_argument("--format", choices=["json", "csv"], default=argparse.SUPPRESS)
        DEFAULTS[name] = d
        return p, d

    def points(p, d, flag="--point", required=True):
        _opt(p, d, flag, None if required else [], action="append",
             help="comma-separated coordinates; repeatable")

    p, d = command("gauge", "pointwise coefficients G, TrH, script H, A")
    points(p, d)
    p, d = command("geometry", "metric, Christoffel symbols and curvature")
    points(p, d)
    p, d = command("huygens", "both necessary Huygens conditions")
    points(p, d)
    _opt(p, d, "--step", huygens.RICHARDSON_STEP, type=float)

    p, d = command("verify-wave", "residual of progressing waves at random points")
    _opt(p, d, "--profile", "poly:0,0,1")
    _opt(p, d, "--sign", -1, type=int)
    _opt(p, d, "--nu0", 0.0, type=float)
    _opt(p, d, "--samples", 1000, type=int)
    _opt(p, d, "--seed", 0, type=int)
    _opt(p, d, "--box", "-2,2")
    _opt(p, d, "--pulse-width", 0.05, type=float)
    _opt(p, d, "--tol", 1e-8, type=float)

    p, d = command("split-check", "block split of the operator")
    points(p, d)
    _opt(p, d, "--partition", "1")
    _opt(p, d, "--profile", "poly:0,0,1")
    _opt(p, d, "--field", None, help="custom field in q1..qN and q(N+1)=nu")
    _opt(p, d, "--sign", -1, type=int)
    _opt(p, d, "--nu0", 0.0, type=float)
    _opt(p, d, "--pulse-width", 0.05, type=float)

    p, d = command("geodesic", "integrate a geodesic")
    _opt(p, d, "--start", None, help="q..., nu")
    _opt(p, d, "--velocity", None, help="qdot..., nudot (general) or qdot... (hyperplane)")
    _opt(p, d, "--kind", "general", choices=["general", "steepest", "hyperplane"])
    _opt(p, d, "--length", 2.0, type=float)
    _opt(p, d, "--step", geodesics.DEFAULT_STEP, type=float)

    for name, text in (("connect", "shoot a geodesic between two points"),
                       ("distance", "geodesic distance and world function"),
                       ("elementary", "singular part U along a connecting geodesic")):
        p, d = command(name, text)
        _opt(p, d, "--start", None)
        _opt(p, d, "--end", None)
        _opt(p, d, "--tol", 1e-8, type=float)
        _opt(p, d, "--max-iters", 50, type=int)
        _opt(p, d, "--step", 1e-2, type=float)

    p, d = command("adjoint-check", "adjoint operator applied to U (N = 1)")
    _opt(p, d, "--base", None)
    points(p, d, "--sample")
    _opt(p, d, "--stencil-step", elementary.DEFAULT_STENCIL_STEP, type=float)
    _opt(p, d, "--path-step", elementary.ADJOINT_PATH_STEP, type=float)
    _opt(p, d, "--tol", elementary.ADJOINT_SHOOT_TOL, type=float)

    for name, text in (("solve", "finite-difference run against the two-profile field"),
                       ("converge", "grid refinement study")):
        p, d = command(name, text)
        _solver_options(p, d)
        if name == "converge":
            _opt(p, d, "--refinements", 2, type=int)

    p, d = command("plot-data", "CSV tables for external plotting")
    _opt(p, d, "--kind", "surface", choices=["surface", "steepest", "solve"])
    _opt(p, d, "--start", None)
    _opt(p, d, "--length", 2.0, type=float)
    _opt(p, d, "--step", geodesics.DEFAULT_STEP, type=float)
    _solver_options(p, d)
    return parser


def _solver_options(p, d):
    _opt(p, d, "--bounds", None, action="append", help="lo,hi; once per coordinate")
    _opt(p, d, "--cells", None, help="cells per coordinate, comma-separated")
    _opt(p, d, "--nu-range", "0,1")
    _opt(p, d, "--dnu", None, type=float)
    _opt(p, d, "--cfl", 0.9, type=float)
    _opt(p, d, "--F", "gauss:0,0.2", help="initial profile")
    _opt(p, d, "--D", "-gauss:0,0.2", help="velocity profile (psi_nu = D'(V))")
    _opt(p, d, "--snapshots", 1, type=int)
    _opt(p, d, "--pulse-width", 0.05, type=float)


META = {"command", "config", "dry_run"}


def resolve_config(ns: argparse.Namespace) -> dict:
    defaults = DEFAULTS[ns.command]
    cfg = dict(defaults)
    if getattr(ns, "config", None):
        try:
            with open(ns.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise UsageError(f"cannot read config {ns.config!r}: {exc.strerror}") from None
        except json.JSONDecodeError as exc:
            raise UsageError(f"config {ns.config!r} is not valid JSON: {exc.msg}") from None
        if not isinstance(data, dict):
            raise UsageError("config file must hold a JSON object")
        unknown = sorted(set(data) - set(defaults))
        if unknown:
            raise UsageError(f"unknown config keys for {ns.command}: {', '.join(unknown)}")
        cfg.update(data)
    cfg.update({k: v for k, v in vars(ns).items() if k not in META})
    missing = [k for k in ("surface", "dim") if cfg.get(k) is None]
    if missing:
        raise UsageError("missing required option(s): " + ", ".join("--" + m for m in missing))
    if cfg["format"] not in ("json", "csv"):
        raise UsageError("format must be json or csv")
    if cfg["format"] == "csv" and ns.command not in CSV_COMMANDS:
        raise UsageError(f"{ns.command} has no CSV output")
    return cfg


# ---------------------------------------------------------------- commands


def _surface(cfg) -> PotentialSurface:
    try:
        dim = int(cfg["dim"])
    except (TypeError, ValueError):
        raise UsageError("dim must be an integer") from None
    if dim < 1:
        raise UsageError("dim must be positive")
    return PotentialSurface.from_source(str(cfg["surface"]), dim,
                                        stationary_threshold=float(cfg["threshold"]))


def _require(cfg, key):
    if cfg.get(key) in (None, []):
        raise UsageError(f"--{key.replace('_', '-')} is required")
    return cfg[key]


def _profile(text, cfg) -> waves.WaveProfile:
    return waves.parse_profile(str(text), pulse_width=float(cfg.get("pulse_width") or 0.05))


def _gauge_entry(surface, q):
    g = gauge(surface, q)
    up, low = first_order_coefficients(g)
    return {"point": q, "value": g.value, "gradient": g.gradient, "hessian": g.hessian,
            "G": g.G, "trace_H": g.trace_H, "script_H": g.script_H, "dG": g.dG,
            "A_upper": up, "A_lower": low}


def _geometry_entry(surface, q):
    g = gauge(surface, q)
    m = geometry.metric(g)
    c = geometry.christoffels(g)
    r = geometry.curvature_from_gauge(g)
    return {"point": q,
            "metric": {"covariant": m.covariant, "contravariant": m.contravariant,
                       "gamma": m.gamma},
            "christoffel": {"nu_nu_up_i": c.nu_nu_up_i, "nu_i_up_nu": c.nu_i_up_nu},
            "riemann_i_nu_nu_l": r.riemann_i_nu_nu_l,
            "riemann_nu_j_k_nu": r.riemann_nu_j_k_nu,
            "ricci_nu_nu": r.ricci_nu_nu, "ricci_jk": r.ricci_jk,
            "scalar_R": r.scalar_R, "scalar_R_closed": r.scalar_R_closed}


def _huygens_entry(surface, q, step):
    one = huygens.condition_one(surface, q)
    two = huygens.condition_two(surface, q, step=step)
    t = one.terms
    return {"point": q, "condition1_residual": one.residual,
            "condition1_terms": {"trace_term": t.trace_term,
                                 "divergence_term": t.divergence_term,
                                 "script_H_term": t.script_H_term},
            "condition1_assembled": one.assembled,
            "condition2_spatial": two.spatial, "condition2_nu": two.nu,
            "verdict": {"condition1_satisfied": one.satisfied,
                        "condition2_satisfied": two.satisfied}}


def _pointwise(cfg, surface, fn, dry):
    n = surface.dimension
    pts = [_q_part(p, n, "point") for p in _point_list(_require(cfg, "point"), "point")]
    if dry:
        return None
    return _map_points(fn, pts)


def cmd_gauge(cfg, surface, dry):
    return _pointwise(cfg, surface, lambda q: _gauge_entry(surface, q), dry)


def cmd_geometry(cfg, surface, dry):
    return _pointwise(cfg, surface, lambda q: _geometry_entry(surface, q), dry)


def cmd_huygens(cfg, surface, dry):
    step = float(cfg["step"])
    if not step > 0:
        raise UsageError("step must be positive")
    return _pointwise(cfg, surface, lambda q: _huygens_entry(surface, q, step), dry)


def cmd_verify_wave(cfg, surface, dry):
    n = surface.dimension
    prof = _profile(cfg["profile"], cfg)
    sign = int(cfg["sign"])
    if sign not in (-1, 1):
        raise UsageError("sign must be +1 or -1")
    field = waves.ProgressingField(prof, sign, float(cfg["nu0"]))
    samples = int(cfg["samples"])
    if samples < 1:
        raise UsageError("samples must be positive")
    box = _floats(cfg["box"], "box")
    if len(box) != 2 or not box[1] > box[0]:
        raise UsageError("box must be lo,hi with lo < hi")
    if dry:
        return None
    rng = np.random.default_rng(int(cfg["seed"]))
    pts = rng.uniform(box[0], box[1], size=(samples, n + 1))
    G = surface.fields(pts[:, :n], order=1, check=False).G
    keep = G >= max(surface.stationary_threshold, 1e-6)
    pts = pts[keep]
    res = waves.apply_operator_batch(surface, field, pts[:, :n], pts[:, n])
    worst = int(np.argmax(np.abs(res))) if res.size else 0
    max_abs = float(np.max(np.abs(res))) if res.size else 0.0
    return {"samples": int(samples), "evaluated": int(pts.shape[0]),
            "skipped_near_stationary": int(samples - pts.shape[0]),
            "max_abs_residual": max_abs,
            "worst_point": pts[worst] if res.size else None,
            "passed": bool(max_abs < float(cfg["tol"]))}


def cmd_split_check(cfg, surface, dry):
    n = surface.dimension
    part = [int(round(x)) for x in _floats(cfg["partition"], "partition")]
    if cfg.get("field"):
        field = waves.CustomField.from_source(str(cfg["field"]), n)
    else:
        field = waves.ProgressingField(_profile(cfg["profile"], cfg), int(cfg["sign"]),
                                       float(cfg["nu0"]))
    pts = [_full_point(p, n, "point") for p in _point_list(_require(cfg, "point"), "point")]
    block = sorted(set(part))
    if not block or len(block) >= n or block[0] < 1 or block[-1] > n:
        raise UsageError(f"partition must be a nonempty proper subset of 1..{n}")
    if dry:
        return None

    def one(p):
        a, b = waves.split_operator(surface, part, field, p)
        parts = waves.operator_parts(surface, field, p[None, :n], [p[n]])[0]
        full = waves.apply_operator(surface, field, p)
        return {"point": p, "L_I": a, "L_II": b, "per_coordinate": parts,
                "L": full, "sum_minus_L": (a + b) - full}
    return _map_points(one, pts)


def _path_report(path: geodesics.GeodesicPath) -> dict:
    out = {"kind": path.kind, "D": path.D, "max_D_drift": path.max_drift(),
           "length": path.length, "samples": int(path.s.size),
           "end": {"q": path.q[-1], "nu": path.nu[-1], "q_dot": path.q_dot[-1],
                   "nu_dot": path.nu_dot[-1]},
           "complete": path.complete,
           "error": None if path.error is None else str(path.error)}
    if path.D >= -geodesics.TIMELIKE_TOLERANCE:
        out["distance"] = geodesics.geodesic_distance(path)
    return out


def cmd_geodesic(cfg, surface, dry):
    n = surface.dimension
    start = _vector(_require(cfg, "start"), "start", n + 1)
    kind = cfg["kind"]
    if kind == "general":
        vel = _vector(_require(cfg, "velocity"), "velocity", n + 1)
    elif kind == "hyperplane":
        vel = _vector(_require(cfg, "velocity"), "velocity", n)
    elif kind != "steepest":
        raise UsageError("kind must be general, steepest or hyperplane")
    length, step = float(cfg["length"]), float(cfg["step"])
    if not (length > 0 and step > 0):
        raise UsageError("length and step must be positive")
    if dry:
        return None
    if kind == "steepest":
        path = geodesics.steepest_ascent(surface, start[:n], start[n], length, step)
    elif kind == "hyperplane":
        path = geodesics.hyperplane_geodesic(surface, start[:n], start[n], vel, length, step)
    else:
        init = geodesics.GeodesicState.make(start[:n], start[n], vel[:n], vel[n])
        path = geodesics.integrate_geodesic(surface, init, length, step)
    return path


def _endpoints(cfg, surface):
    n = surface.dimension
    p0 = _vector(_require(cfg, "start"), "start", n + 1)
    p1 = _vector(_require(cfg, "end"), "end", n + 1)
    if np.array_equal(p0, p1):
        raise UsageError("start and end must differ")
    return p0, p1


def _connect(cfg, surface, p0, p1):
    return geodesics.connect(surface, p0, p1, max_iters=int(cfg["max_iters"]),
                             tol=float(cfg["tol"]), step=float(cfg["step"]))


def cmd_connect(cfg, surface, dry):
    p0, p1 = _endpoints(cfg, surface)
    if dry:
        return None
    path = _connect(cfg, surface, p0, p1)
    rep = _path_report(path)
    rep["iterations"] = path.iterations
    rep["initial_velocity"] = np.append(path.q_dot[0], path.nu_dot[0])
    return rep


def cmd_distance(cfg, surface, dry):
    p0, p1 = _endpoints(cfg, surface)
    if dry:
        return None
    path = _connect(cfg, surface, p0, p1)
    d = geodesics.geodesic_distance(path)
    return {"D": path.D, "distance": d, "world_function": d * d,
            "world_function_local": geodesics.world_function_local(surface, p0, p1),
            "iterations": path.iterations}


def cmd_elementary(cfg, surface, dry):
    p0, p1 = _endpoints(cfg, surface)
    if dry:
        return None
    part = elementary.singular_part(surface, _connect(cfg, surface, p0, p1))
    return {"base": part.base, "endpoint": part.endpoint,
            "discriminant_factor": part.discriminant_factor,
            "path_integral": part.path_integral, "U": part.U}


def cmd_adjoint_check(cfg, surface, dry):
    if surface.dimension != 1:
        raise UsageError("adjoint-check supports dim 1 only")
    base = _vector(_require(cfg, "base"), "base", 2)
    samples = [_full_point(p, 1, "sample") for p in _point_list(_require(cfg, "sample"), "sample")]
    h = float(cfg["stencil_step"])
    if not h > 0:
        raise UsageError("stencil-step must be positive")
    if dry:
        return None

    def one(s):
        r = elementary.adjoint_residual_report(surface, base, s, h,
                                               path_step=float(cfg["path_step"]),
                                               tol=float(cfg["tol"]))
        return {"sample": s, "PU": r.value, "U": r.U, "U_q": r.U_q, "U_nu": r.U_nu,
                "U_qq": r.U_qq, "U_nunu": r.U_nunu}
    return _map_points(one, samples)


def _grid(cfg, surface) -> fdsolver.Grid:
    n = surface.dimension
    bounds = [_floats(b, "bounds") for b in _point_list(_require(cfg, "bounds"), "bounds")]
    if len(bounds) != n or any(len(b) != 2 for b in bounds):
        raise UsageError(f"give --bounds lo,hi once for each of the {n} coordinates")
    cells = [int(round(c)) for c in _floats(_require(cfg, "cells"), "cells")]
    if len(cells) == 1:
        cells = cells * n
    if len(cells) != n:
        raise UsageError("cells must have one entry or one per coordinate")
    nu = _floats(cfg["nu_range"], "nu-range")
    if len(nu) != 2:
        raise UsageError("nu-range must be nu0,nu1")
    return fdsolver.Grid(tuple(tuple(b) for b in bounds), tuple(cells), nu[0], nu[1],
                         None if cfg["dnu"] is None else float(cfg["dnu"]), float(cfg["cfl"]))


def cmd_solve(cfg, surface, dry):
    grid = _grid(cfg, surface)
    F, D = _profile(cfg["F"], cfg), _profile(cfg["D"], cfg)
    if int(cfg["snapshots"]) < 1:
        raise UsageError("snapshots must be positive")
    if dry:
        return None
    return fdsolver.solve_ivp(surface, grid, F, D, snapshots=int(cfg["snapshots"]))


def cmd_converge(cfg, surface, dry):
    grid = _grid(cfg, surface)
    F, D = _profile(cfg["F"], cfg), _profile(cfg["D"], cfg)
    k = int(cfg["refinements"])
    if k < 2:
        raise UsageError("refinements must be at least 2")
    if dry:
        return None
    st = fdsolver.convergence_study(surface, grid, F, D, k)
    return {"cells": st.cells, "spacings": st.spacings, "linf": st.linf,
            "wake_energy": st.wake, "order": st.order, "error_ratios": st.ratios(),
            "wake_ratios": st.wake_ratios()}


def _surface_table(surface, grid) -> str:
    pts = grid.points()
    batch = surface.fields(pts, order=3, check=False)
    n = surface.dimension
    rows = [",".join([*(f"q{i + 1}" for i in range(n)), "V", "G", "trace_H", "condition1"])]
    for p in range(pts.shape[0]):
        if batch.G[p] >= surface.stationary_threshold:
            c1 = huygens.condition_one_from_gauge(batch.gauge(p)).residual
        else:
            c1 = float("nan")
        vals = (*pts[p], batch.value[p], batch.G[p], batch.trace_H[p], c1)
        rows.append(",".join(repr(float(x)) for x in vals))
    return "\n".join(rows) + "\n"


def cmd_plot_data(cfg, surface, dry):
    kind = cfg["kind"]
    n = surface.dimension
    if kind == "steepest":
        start = _vector(_require(cfg, "start"), "start", n + 1)
        if dry:
            return None
        path = geodesics.steepest_ascent(surface, start[:n], start[n], float(cfg["length"]),
                                         float(cfg["step"]))
        return path.to_csv()
    grid = _grid(cfg, surface)
    if kind == "surface":
        return None if dry else _surface_table(surface, grid)
    F, D = _profile(cfg["F"], cfg), _profile(cfg["D"], cfg)
    if dry:
        return None
    res = fdsolver.solve_ivp(surface, grid, F, D)
    return fdsolver.snapshot_to_csv(res.final, grid, res.dnu)


COMMANDS = {
    "gauge": cmd_gauge, "geometry": cmd_geometry, "huygens": cmd_huygens,
    "verify-wave": cmd_verify_wave, "split-check": cmd_split_check,
    "geodesic": cmd_geodesic, "connect": cmd_connect, "distance": cmd_distance,
    "elementary": cmd_elementary, "adjoint-check": cmd_adjoint_check,
    "solve": cmd_solve, "converge": cmd_converge, "plot-data": cmd_plot_data,
}


# ---------------------------------------------------------------- driver


def _render(command: str, cfg: dict, result, dry: bool) -> str:
    fmt = cfg["format"]
    if fmt == "csv" and not dry:
        if isinstance(result, geodesics.GeodesicPath):
            return result.to_csv()
        if isinstance(result, fdsolver.SolveResult):
            return fdsolver.snapshot_to_csv(result.final, result.grid, result.dnu)
        return result
    if isinstance(result, geodesics.GeodesicPath):
        result = _path_report(result)
    elif isinstance(result, fdsolver.SolveResult):
        result = result.manifest()
    elif command == "plot-data" and not dry:
        result = {"csv": result}
    doc = {"schema": SCHEMA, "command": command, "config": cfg,
           "timestamp": datetime.now(timezone.utc).isoformat()}
    if dry:
        doc["dry_run"] = True
    else:
        doc["results"] = result
    return json.dumps(_jsonable(doc), sort_keys=True, indent=2, allow_nan=False) + "\n"


def _error_doc(exc: Exception, code: int) -> str:
    err = {"type": type(exc).__name__, "message": str(exc), "exit_code": code}
    if isinstance(exc, StationaryPoint):
        err.update(point=list(exc.point), G=exc.G, threshold=exc.threshold)
    return json.dumps({"schema": SCHEMA, "error": err}, sort_keys=True)


def run(argv=None, stdout=None, stderr=None) -> int:
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    try:
        ns = build_parser().parse_args(argv)
        cfg = resolve_config(ns)
        surface = _surface(cfg)
        result = COMMANDS[ns.command](cfg, surface, bool(ns.dry_run))
        text = _render(ns.command, cfg, result, bool(ns.dry_run))
    except NumericalError as exc:
        stderr.write(_error_doc(exc, EXIT_NUMERICAL) + "\n")
        return EXIT_NUMERICAL
    except (LSWEError, ValueError, TypeError) as exc:
        stderr.write(_error_doc(exc, EXIT_VALIDATION) + "\n")
        return EXIT_VALIDATION
    if cfg.get("output"):
        try:
            with open(cfg["output"], "w", encoding="utf-8") as fh:
                fh.write(text)
        except OSError as exc:
            stderr.write(_error_doc(UsageError(f"cannot write {cfg['output']!r}: {exc.strerror}"),
                                    EXIT_VALIDATION) + "\n")
            return EXIT_VALIDATION
    else:
        stdout.write(text)
    return EXIT_OK


def main(argv=None) -> int:
    return run(argv)


if __name__ == "__main__":
    sys.exit(main())
