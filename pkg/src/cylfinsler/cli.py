"""Command-line interface.

Exit status: 0 when every selected check passes, 2 when a check fails,
1 on usage or configuration errors.
"""
from __future__ import annotations

import argparse
import csv
import io
import json
import math
import sys
import time

import numpy as np

from . import __version__
from . import expr as ex
from .catalog import UnknownEntryError, catalog_get, catalog_ids, catalog_verify
from .coords import ConfigPoint, TangentVector, sample_full, symmetry_check
from .core import GridSpec, ModelError, PhiModel, validity_scan
from .douglas import (RankDeficientError, douglas_closed, douglas_oracle, fit_coefficients,
                      flatness_residuals, parallel_map, reduced_pde_residual, sample_points)
from .geodesic import DomainExitError, geodesic_integrate
from .spray import divergence_jet_oracle, spray_coefficients, spray_divergence, spray_oracle_pq

EXIT_OK, EXIT_USAGE, EXIT_FAIL = 0, 1, 2

RANDOMIZED = {"spray", "douglas", "flatness", "reduced-pde", "symcheck", "examples", "geodesic"}

DEFAULT_TOL = {
    "validate": 0.0, "spray": 1e-8, "douglas": 1e-7, "flatness": 1e-9, "fit": 1e-9,
    "reduced-pde": 1e-8, "geodesic": 1e-6, "symcheck": 1e-12, "examples": 0.0,
}


class UsageError(Exception):
    pass


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        raise UsageError(message)


# ------------------------------------------------------------------ config

def read_config(path: str) -> dict:
    """key = value lines; '#' starts a comment; repeated ``param`` keys accumulate."""
    out: dict = {"param": []}
    try:
        fh = open(path, encoding="utf-8")
    except OSError as err:
        raise UsageError(f"cannot read config {path}: {err}") from None
    with fh:
        for lineno, raw in enumerate(fh, 1):
            line = raw.split("#", 1)[0].strip()
            if not line or line.startswith("["):
                continue
            if "=" not in line:
                raise UsageError(f"{path}:{lineno}: expected key = value")
            key, value = (t.strip() for t in line.split("=", 1))
            key = key.replace("-", "_")
            if len(value) >= 2 and value[0] == value[-1] and value[0] in "\"'":
                value = value[1:-1]
            if key == "param":
                out["param"].append(value)
            else:
                out[key] = value
    return out


def _common(p: argparse.ArgumentParser):
    src = p.add_mutually_exclusive_group()
    src.add_argument("--phi", help="phi(x0, r, s, z) expression")
    src.add_argument("--catalog", help="catalog id (see `examples --list`)")
    p.add_argument("--param", action="append", default=None, metavar="NAME=VALUE",
                   help="parameter binding; VALUE may be an expression (repeatable)")
    p.add_argument("--n", type=int, default=None, help="transverse dimension (default 3)")
    p.add_argument("--rho", type=float, default=None, help="ball radius (default 1)")
    p.add_argument("--z-max", type=float, default=None, help="sampling bound on |z|")
    p.add_argument("--samples", type=int, default=None, help="random points (default 50)")
    p.add_argument("--seed", type=int, default=None)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--out", default=None, help="write report here instead of stdout")
    p.add_argument("--format", choices=("json", "csv"), default=None)
    p.add_argument("--threads", type=int, default=None)
    p.add_argument("--config", default=None, help="key = value file; flags override it")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="cylfinsler", description="Checks for metrics F = |ybar| phi(x0, r, s, z).")
    parser.add_argument("--version", action="version", version=f"cylfinsler {__version__}")
    sub = parser.add_subparsers(dest="command", parser_class=_Parser)
    helps = {
        "validate": "scan phi > 0, Omega > 0, Lambda > 0 on a grid",
        "spray": "closed-form spray vs P/Q oracle",
        "douglas": "closed-form Douglas tensor vs jet oracle",
        "flatness": "the eight vanishing-Douglas residuals",
        "fit": "fit U, R, T to their polynomial forms at fixed (x0, r)",
        "reduced-pde": "residual of the reduced first-order equation",
        "geodesic": "RK4 geodesic trace and F conservation",
        "symcheck": "O(n) invariance and homogeneity degrees",
        "examples": "verify catalog entries",
    }
    for name, h in helps.items():
        p = sub.add_parser(name, help=h, description=h)
        _common(p)
        if name == "fit":
            p.add_argument("--x0", type=float, default=None)
            p.add_argument("--r", type=float, default=None)
            p.add_argument("--nodes", type=int, default=None)
        elif name == "reduced-pde":
            p.add_argument("--psi", default=None, help="replace sqrt(r^2-s^2)*Omega")
        elif name == "geodesic":
            p.add_argument("--x", default=None, help="start point x0,x1,..,xn")
            p.add_argument("--y", default=None, help="start velocity y0,y1,..,yn")
            p.add_argument("--steps", type=int, default=None)
            p.add_argument("--t-end", type=float, default=None)
        elif name == "douglas":
            p.add_argument("--expect-flat", action="store_true", default=None,
                           help="also require max|D| <= tol")
        elif name == "examples":
            p.add_argument("--list", action="store_true", default=None)
        elif name == "validate":
            p.add_argument("--grid", type=int, default=None, help="points per r, s, z axis")
    return parser


_DEFAULTS = {
    "n": 3, "samples": 50, "format": "json", "threads": 1, "rho": 1.0,
    "x0": 0.0, "r": 0.5, "nodes": 16, "steps": 1000, "t_end": 1.0, "grid": 17,
}

_TYPES = {"n": int, "samples": int, "seed": int, "threads": int, "nodes": int, "steps": int,
          "grid": int, "tol": float, "rho": float, "z_max": float, "x0": float, "r": float,
          "t_end": float}

_FLAGS = {"expect_flat", "list"}


def resolve(args: argparse.Namespace) -> argparse.Namespace:
    """Merge config file and defaults into ``args``; flags win."""
    cfg = read_config(args.config) if args.config else {"param": []}
    known = set(vars(args))
    for key, value in cfg.items():
        if key == "param":
            continue
        if key not in known:
            raise UsageError(f"unknown config key {key!r}")
        if getattr(args, key) is None:
            try:
                if key in _TYPES:
                    value = _TYPES[key](value)
                elif key in _FLAGS:
                    value = value.lower() in ("1", "true", "yes")
            except ValueError:
                raise UsageError(f"bad value for {key}: {value!r}") from None
            setattr(args, key, value)
    params = {}
    for item in cfg["param"] + (args.param or []):
        if "=" not in item:
            raise UsageError(f"--param expects NAME=VALUE, got {item!r}")
        k, v = item.split("=", 1)
        params[k.strip()] = v.strip()
    args.params = params
    for key, value in _DEFAULTS.items():
        if hasattr(args, key) and getattr(args, key) is None:
            setattr(args, key, value)
    if args.tol is None:
        args.tol = DEFAULT_TOL[args.command]
    if args.tol < 0 or (args.tol == 0 and DEFAULT_TOL[args.command] > 0):
        raise UsageError("--tol must be positive")
    if args.samples < 1:
        raise UsageError("--samples must be >= 1")
    if args.threads < 1:
        raise UsageError("--threads must be >= 1")
    if args.command in RANDOMIZED and args.seed is None:
        if not (args.command == "geodesic" and args.x and args.y):
            if not (args.command == "examples" and args.list):
                raise UsageError(f"{args.command} draws random points: --seed is required")
    return args


def build_model(args) -> PhiModel:
    if args.catalog:
        model = catalog_get(args.catalog, args.params, strict=True, n=args.n, rho=args.rho)
        if args.z_max is not None:
            model = model.replace(z_max=args.z_max)
        return model
    if not args.phi:
        raise UsageError("one of --phi or --catalog is required")
    phi = ex.parse(args.phi)
    subs = {}
    for k, v in args.params.items():
        if k in ex.COORDINATES:
            raise UsageError(f"cannot bind coordinate {k}")
        subs[k] = ex.parse(v)
    phi = ex.substitute(phi, subs)
    return PhiModel(phi, n=args.n, rho=args.rho,
                    z_max=args.z_max if args.z_max is not None else 2.0, name="phi")


# ------------------------------------------------------------------ checks

def _num(v):
    if isinstance(v, (float, np.floating)):
        v = float(v)
        return v if math.isfinite(v) else repr(v)
    if isinstance(v, (np.integer,)):
        return int(v)
    if isinstance(v, dict):
        return {str(k): _num(x) for k, x in v.items()}
    if isinstance(v, (list, tuple, np.ndarray)):
        return [_num(x) for x in v]
    return v


def check(name, value, tol, passed, worst=None, **extra) -> dict:
    out = {"name": name, "max_abs": value, "tolerance": tol, "pass": bool(passed),
           "worst_point": worst}
    out.update(extra)
    return out


def _pt(x, y) -> dict:
    return {"x": x.as_array().tolist(), "y": y.as_array().tolist()}


def _worst(values, points):
    k = int(np.argmax(values))
    return float(values[k]), points[k]


def cmd_validate(args, model):
    rep = validity_scan(model, GridSpec(args.grid, args.grid, args.grid, 3))
    ok = rep.valid
    wp = rep.violations[0] if rep.violations else None
    return [check("validity", min(rep.min_phi, rep.min_lambda), 0.0, ok, wp,
                  min_phi=rep.min_phi, min_omega=rep.min_omega, min_lambda=rep.min_lambda,
                  points=rep.points, violation_count=rep.violation_count,
                  errors=rep.errors[:5])], {}


def cmd_spray(args, model):
    pts = sample_full(model.region(), model.n, args.samples, args.seed)

    def one(xy):
        x, y = xy
        a = spray_coefficients(model, x, y).as_array()
        b = spray_oracle_pq(model, x, y).as_array()
        d = abs(spray_divergence(model, x, y) - divergence_jet_oracle(model, x, y))
        scale = max(1.0, float(np.max(np.abs(b))))
        return float(np.max(np.abs(a - b))) / scale, d
    res = np.array(parallel_map(one, pts, args.threads))
    g, wg = _worst(res[:, 0], pts)
    d, wd = _worst(res[:, 1], pts)
    return [check("spray_vs_pq_oracle", g, args.tol, g <= args.tol, _pt(*wg)),
            check("divergence_vs_jet", d, args.tol, d <= args.tol, _pt(*wd))], {}


def cmd_douglas(args, model):
    pts = sample_full(model.region(), model.n, args.samples, args.seed, u_range=(1.0, 1.0))

    def one(xy):
        x, y = xy
        b = douglas_oracle(model, x, y)
        a = douglas_closed(model, x, y)
        excess = float(np.max(np.abs(a.D - b.D) / (args.tol * np.abs(b.D) + 1e-10)))
        return excess, b.max_abs(), b.symmetry_defect()
    res = np.array(parallel_map(one, pts, args.threads))
    e, we = _worst(res[:, 0], pts)
    m, wm = _worst(res[:, 1], pts)
    sdef, ws = _worst(res[:, 2], pts)
    checks = [
        check("closed_vs_oracle", e, 1.0, e <= 1.0, _pt(*we),
              detail=f"max |closed - oracle| / ({args.tol:g} |oracle| + 1e-10)"),
        check("lower_index_symmetry", sdef, 1e-10, sdef <= 1e-10 * max(1.0, m), _pt(*ws)),
    ]
    if args.expect_flat:
        checks.append(check("douglas_vanishing", m, args.tol, m <= args.tol, _pt(*wm)))
    return checks, {"max_abs_D": m, "max_abs_D_point": _pt(*wm)}


def cmd_flatness(args, model):
    res = flatness_residuals(model, sample_points(model, args.samples, args.seed), args.threads)
    return [check(f"residual_{k}", v, args.tol, v <= args.tol, res.worst_point)
            for k, v in res.values().items()], {}


def cmd_fit(args, model):
    pc = fit_coefficients(model, args.x0, args.r, args.nodes)
    wp = {"x0": args.x0, "r": args.r}
    return [check("fit_residual", pc.residual, args.tol, pc.residual <= args.tol, wp)], \
        {"coefficients": pc.as_dict()}


def cmd_reduced_pde(args, model):
    v = reduced_pde_residual(model, sample_points(model, args.samples, args.seed),
                             psi=args.psi, threads=args.threads)
    return [check("reduced_pde", v, args.tol, v <= args.tol)], {}


def _parse_vec(text, what):
    try:
        return np.array([float(t) for t in text.split(",")])
    except ValueError:
        raise UsageError(f"--{what} expects comma-separated numbers") from None


def cmd_geodesic(args, model):
    if args.x and args.y:
        x = ConfigPoint.from_array(_parse_vec(args.x, "x"))
        y = TangentVector.from_array(_parse_vec(args.y, "y"))
        if x.n != model.n or y.n != model.n:
            raise UsageError(f"--x and --y need {model.n + 1} components")
    elif args.x or args.y:
        raise UsageError("give both --x and --y, or neither")
    else:
        x, y = geodesic_start(model, args.seed)
    try:
        trace = geodesic_integrate(model, x, y, args.t_end, args.steps)
    except ValueError as err:
        raise UsageError(str(err)) from None
    except DomainExitError as err:
        return [check("geodesic", math.inf, args.tol, False, _pt(x, y), detail=str(err))], {}
    checks = [check("F_drift", trace.drift, args.tol, trace.drift <= args.tol, _pt(x, y))]
    return checks, {"trace": trace}


def geodesic_start(model: PhiModel, seed: int):
    """A random start well inside the domain: short velocity, r <= rho/2."""
    x, y = sample_full(model.region(), model.n, 1, seed, u_range=(0.3, 0.3))[0]
    return ConfigPoint(0.3 * x.x0, 0.5 * x.xbar), y


def homogeneity_defects(model: PhiModel, count: int, seed: int, lam: float = 2.0) -> dict:
    """max relative |Q(x, lam y) - lam^k Q(x, y)| for F, G, div G and D."""
    pts = sample_full(model.region(), model.n, count, seed)
    out = {"F": 0.0, "G": 0.0, "div": 0.0, "D": 0.0}
    for x, y in pts:
        y2 = y.scaled(lam)
        pairs = {
            "F": (model.finsler(x, y2), lam * model.finsler(x, y)),
            "G": (spray_coefficients(model, x, y2).as_array(),
                  lam ** 2 * spray_coefficients(model, x, y).as_array()),
            "div": (spray_divergence(model, x, y2), lam * spray_divergence(model, x, y)),
            "D": (douglas_oracle(model, x, y2).D, douglas_oracle(model, x, y).D / lam),
        }
        for k, (a, b) in pairs.items():
            a, b = np.asarray(a), np.asarray(b)
            rel = float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))
            out[k] = max(out[k], rel)
    return out


def cmd_symcheck(args, model):
    rep = symmetry_check(model, args.samples, args.seed)
    checks = [check("o_n_invariance", rep.max_relative, args.tol, rep.passed(args.tol), rep.worst_point)]
    hom = homogeneity_defects(model, min(args.samples, 20), args.seed)
    for k, v in hom.items():
        checks.append(check(f"homogeneity_{k}", v, 1e-10, v <= 1e-10))
    return checks, {}


def cmd_examples(args, model):
    if args.list:
        return [], {"catalog": catalog_ids()}
    ids = [args.catalog] if args.catalog else catalog_ids()
    checks, extra = [], {"entries": []}
    for cid in ids:
        params = args.params if args.catalog else {}
        rep = catalog_verify(cid, params, seed=args.seed, n=args.n, samples=min(args.samples, 50),
                             threads=args.threads)
        for c in rep.checks:
            d = c.as_dict()
            d["name"] = f"{cid}:{c.name}"
            checks.append(d)
        extra["entries"].append({"id": cid, "pass": rep.passed, "matched_printed": rep.matched,
                                 "notes": rep.notes})
        for disc in rep.discrepancies:
            extra.setdefault("discrepancies", []).append(dict(disc, id=cid))
    return checks, extra


COMMANDS = {
    "validate": cmd_validate, "spray": cmd_spray, "douglas": cmd_douglas,
    "flatness": cmd_flatness, "fit": cmd_fit, "reduced-pde": cmd_reduced_pde,
    "geodesic": cmd_geodesic, "symcheck": cmd_symcheck, "examples": cmd_examples,
}


# ------------------------------------------------------------------ output

_CONFIG_KEYS = ("phi", "catalog", "params", "n", "rho", "z_max", "samples", "seed", "tol",
                "threads", "x0", "r", "nodes", "psi", "x", "y", "steps", "t_end",
                "expect_flat", "grid")


def make_report(args, model, checks, extra, elapsed) -> dict:
    config = {k: getattr(args, k) for k in _CONFIG_KEYS if getattr(args, k, None) is not None}
    report = {
        "tool": "cylfinsler",
        "version": __version__,
        "command": args.command,
        "config": config,
        "model": model.describe() if model is not None else None,
        "checks": checks,
        "pass": all(c["pass"] for c in checks),
        "timing": {"elapsed_s": round(elapsed, 3)},
    }
    for k, v in extra.items():
        report[k] = v.as_dict() if hasattr(v, "as_dict") else v
    return _num(report)


def render(report: dict, fmt: str, extra: dict) -> str:
    if fmt == "json":
        return json.dumps(report, indent=2, sort_keys=True, ensure_ascii=False) + "\n"
    trace = extra.get("trace")
    if trace is not None:
        return trace.to_csv()
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["name", "max_abs", "tolerance", "pass"])
    for c in report["checks"]:
        w.writerow([c["name"], c["max_abs"], c["tolerance"], c["pass"]])
    return buf.getvalue()


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        if args.command is None:
            parser.print_help(sys.stderr)
            return EXIT_USAGE
        args = resolve(args)
        t0 = time.perf_counter()
        model = None if (args.command == "examples") else build_model(args)
        checks, extra = COMMANDS[args.command](args, model)
        elapsed = time.perf_counter() - t0
    except UsageError as err:
        print(f"cylfinsler: error: {err}", file=sys.stderr)
        return EXIT_USAGE
    except (ModelError, UnknownEntryError, ex.ParseError, ex.UnboundVariableError,
            RankDeficientError) as err:
        msg = err.args[0] if isinstance(err, KeyError) else err
        print(f"cylfinsler: error: {msg}", file=sys.stderr)
        return EXIT_USAGE
    except (ArithmeticError, ValueError) as err:
        print(f"cylfinsler: check aborted: {type(err).__name__}: {err}", file=sys.stderr)
        return EXIT_FAIL
    report = make_report(args, model, checks, extra, elapsed)
    text = render(report, args.format, extra)
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return EXIT_OK if report["pass"] else EXIT_FAIL


if __name__ == "__main__":
    raise SystemExit(main())
