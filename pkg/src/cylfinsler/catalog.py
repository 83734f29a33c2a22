"""Built-in metrics: analytic baselines, the Douglas families with their free
functions h, g, f and constant k, and two deliberately non-Douglas fields.

Each entry keeps the reference expressions for U, R, T (and L, psi) that are
quoted with the family so computed values can be compared against them.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .coords import ReducedPoint, sample_full, symmetry_check
from .core import GridSpec, ModelError, PhiModel, metric_tensor, validity_scan
from .douglas import (douglas_closed, douglas_oracle, fit_coefficients, flatness_residuals,
                      projective_flatness, reduced_pde_residual, rt_fields, sample_points)
from .spray import spray_coefficients, spray_oracle_pq


@dataclass(frozen=True)
class Slot:
    """A parameter: a constant (``var`` None) or a function of one coordinate."""

    name: str
    var: str | None
    default: str
    check: str  # human-readable constraint
    ok: object = field(repr=False, compare=False, default=None)  # ndarray -> bool


@dataclass(frozen=True)
class CatalogEntry:
    id: str
    template: str
    slots: tuple = ()
    printed: dict = field(default_factory=dict)
    psi: str | None = None
    douglas: bool = True
    proj_flat: str = "unknown"  # yes / no / unknown
    z_max: float = 2.0
    note: str = ""


def _pos(v):
    return bool(np.all(v > 0))


def _lt1(v):
    return bool(np.all(np.abs(v) < 1))


_G_SLOT = Slot("g", "r", "1+r^2", "g(r) > 0", _pos)
_H_X0 = Slot("h", "x0", "1/2", "|h(x0)| < 1", _lt1)

_ENTRIES = [
    CatalogEntry("euclidean", "sqrt(1+z^2)", proj_flat="yes"),
    CatalogEntry("minkowski-randers", "sqrt(1+z^2)+0.5*z", proj_flat="yes"),
    CatalogEntry(
        "ex4.1", "sqrt(1+r^2-s^2+exp(x0)*z^2) + s*k/(1+r^2)",
        (Slot("k", None, "1", "|k| < 2", lambda v: bool(np.all(np.abs(v) < 2))),),
        printed={
            "U": "-(r^2-s^2+1)/(1+r^2)",
            "R": "(1/4)*(n*r^2*z-4*n*s+n*z+4*s)*z/((n+2)*(1+r^2))",
            "T": "(1/2)*(r^2*z-6*s+z)/((n+2)*(1+r^2))",
        }),
    CatalogEntry(
        "ex4.2", "sqrt(1+r^2+s^2+exp(x0)*z^2) + s*k/(1+r^2)",
        (Slot("k", None, "1", "|k| < 2", lambda v: bool(np.all(np.abs(v) < 2))),),
        printed={
            "U": "s^2/(1+3*r^2+2*r^4)",
            "T": "(1/2)*(2*r^4*z-8*r^2*s+3*r^2*z-2*s+z)/((n+2)*(1+3*r^2+2*r^4))",
        },
        note="printed R contains the cancelling pair -4s+4s and is not compared"),
    CatalogEntry(
        "ex4.3", "sqrt(h^2*g^2*z^2+1)/g + h*z",
        (Slot("g", "r", "exp(r^2/2)", "g(r) > 0", _pos),
         Slot("h", "x0", "1/2", "h(x0) > 0", _pos)),
        printed={
            "U": "dg/(2*r*g)",
            "R": "n*(g*dh*r*z + 2*h*dg*s)*z/(2*(n+2)*r*g*h)",
            "T": "(g*dh*r*z + 2*h*dg*s)/((n+2)*r*g*h)",
        },
        proj_flat="no"),
    CatalogEntry(
        "ex4.4", "sqrt(g^2*z^2+1)/g + h*z", (_G_SLOT, _H_X0),
        printed={"U": "dg/(2*r*g)", "L": "s*z*dg/(2*r*g)"},
        psi="sqrt(r^2-s^2)/(g*sqrt(g^2*z^2+1))",
        proj_flat="no"),
    CatalogEntry(
        "ex4.5", "h*z + (1/g)*(1 + (2*g^2*z^2+1)/sqrt(g^2*z^2+1))", (_H_X0, _G_SLOT),
        printed={"U": "dg/(2*r*g)", "L": "s*z*dg/(2*r*g)"},
        psi="sqrt(r^2-s^2)/g*(1+1/(g^2*z^2+1)^(3/2))",
        proj_flat="no"),
    CatalogEntry(
        "ex4.6", "h*z + (1/g)*(1 + (2*g^2*z^2+f)/sqrt(g^2*z^2+f))",
        (_G_SLOT, _H_X0, Slot("f", "x0", "2+sin(x0)", "f(x0) > 0", _pos)),
        printed={
            "U": "dg/(2*r*g)",
            "R": "-(1/12)*(4*n*g^2*df*r*z^2 - 12*n*f*g*dg*s*z + (n+2)*f*df*r)/((n+2)*r*g^2*f)",
            "T": "-(2/3)*(g*df*r*z - 3*f*dg*s)/((n+2)*r*g*f)",
        },
        proj_flat="no"),
    CatalogEntry("nondouglas-a", "sqrt(1+z^2)+0.1*s*z^2", douglas=False, proj_flat="no", z_max=1.0),
    CatalogEntry("nondouglas-b", "sqrt(1+r^2-s^2+z^2)+0.1*z^3/(1+s^2)", douglas=False,
                 proj_flat="no", z_max=0.6),
]

CATALOG = {e.id: e for e in _ENTRIES}


class UnknownEntryError(KeyError):
    pass


def catalog_ids() -> list:
    return list(CATALOG)


def _entry(id: str) -> CatalogEntry:
    try:
        return CATALOG[id]
    except KeyError:
        raise UnknownEntryError(f"unknown catalog id {id!r}; known: {', '.join(CATALOG)}") from None


def _slot_exprs(entry: CatalogEntry, params: dict, strict: bool, x0_interval, rho) -> dict:
    unknown = set(params) - {s.name for s in entry.slots}
    if unknown:
        raise ModelError(f"{entry.id} has no parameter(s) {', '.join(sorted(unknown))}")
    out = {}
    for slot in entry.slots:
        raw = params.get(slot.name, slot.default)
        e = ex.parse(str(raw)) if not isinstance(raw, ex.Expr) else raw
        allowed = set() if slot.var is None else {slot.var}
        extra = ex.free_symbols(e) - allowed
        if extra:
            where = "a constant" if slot.var is None else f"a function of {slot.var} only"
            raise ModelError(f"parameter {slot.name} must be {where}; found {', '.join(sorted(extra))}")
        if strict and slot.ok is not None:
            if slot.var == "x0":
                grid = np.linspace(*x0_interval, 41)
            elif slot.var == "r":
                grid = np.linspace(0.0, rho, 41)
            else:
                grid = np.zeros(1)
            vals = np.array([ex.evaluate(e, {slot.var: float(t)} if slot.var else {}) for t in grid])
            if not slot.ok(vals):
                raise ModelError(f"{entry.id}: constraint {slot.check} violated by {slot.name} = {e}")
        out[slot.name] = e
        if slot.var is not None:
            out["d" + slot.name] = ex.differentiate(e, slot.var)
    return out


def _instantiate(template: str, subs: dict, n: int) -> ex.Expr:
    mapping = dict(subs)
    mapping["n"] = ex.num(n)
    return ex.substitute(ex.parse(template), mapping)


def catalog_get(id: str, params: dict | None = None, strict: bool = True, n: int = 3,
                rho: float = 1.0, x0_interval=(-1.0, 1.0)) -> PhiModel:
    entry = _entry(id)
    subs = _slot_exprs(entry, dict(params or {}), strict, x0_interval, rho)
    phi = _instantiate(entry.template, subs, n)
    return PhiModel(phi, n=n, rho=rho, x0_interval=tuple(x0_interval), z_max=entry.z_max, name=id)


def printed_fields(id: str, params: dict | None = None, n: int = 3) -> dict:
    """Reference U/R/T/L expressions of an entry, instantiated."""
    entry = _entry(id)
    subs = _slot_exprs(entry, dict(params or {}), False, (-1.0, 1.0), 1.0)
    return {k: _instantiate(v, subs, n) for k, v in entry.printed.items()}


def printed_psi(id: str, params: dict | None = None, n: int = 3):
    entry = _entry(id)
    if entry.psi is None:
        return None
    subs = _slot_exprs(entry, dict(params or {}), False, (-1.0, 1.0), 1.0)
    return _instantiate(entry.psi, subs, n)


# ------------------------------------------------------------ verification

@dataclass
class Check:
    name: str
    value: float
    tol: float
    passed: bool
    worst_point: dict | None = None
    detail: str = ""

    def as_dict(self) -> dict:
        return {"name": self.name, "max_abs": self.value, "tolerance": self.tol,
                "pass": self.passed, "worst_point": self.worst_point, "detail": self.detail}


@dataclass
class VerificationReport:
    id: str
    model: dict
    checks: list = field(default_factory=list)
    discrepancies: list = field(default_factory=list)
    matched: list = field(default_factory=list)
    notes: list = field(default_factory=list)

    @property
    def passed(self) -> bool:
        return all(c.passed for c in self.checks)

    def check(self, name: str) -> Check:
        for c in self.checks:
            if c.name == name:
                return c
        raise KeyError(name)

    def as_dict(self) -> dict:
        return {"id": self.id, "model": self.model, "pass": self.passed,
                "checks": [c.as_dict() for c in self.checks],
                "matched_printed": list(self.matched), "discrepancies": list(self.discrepancies),
                "notes": list(self.notes)}


def _pt(x, y) -> dict:
    return {"x": x.as_array().tolist(), "y": y.as_array().tolist()}


def _rp(p: ReducedPoint) -> dict:
    return {"x0": p.x0, "r": p.r, "s": p.s, "z": p.z}


def _guard(report: VerificationReport, name: str, tol: float, fn):
    try:
        value, passed, worst, detail = fn()
    except (ArithmeticError, ValueError) as err:
        report.checks.append(Check(name, math.inf, tol, False, None, f"{type(err).__name__}: {err}"))
        return
    report.checks.append(Check(name, float(value), tol, bool(passed), worst, detail))


def compare_printed(model: PhiModel, id: str, params: dict | None, points: list,
                    tol: float = 1e-8) -> tuple:
    """(matched names, discrepancy records) for the entry's printed fields."""
    printed = printed_fields(id, params, model.n)
    matched, disc = [], []
    for name, e in printed.items():
        worst, worst_rec = -1.0, None
        for p in points:
            rt = rt_fields(model, p, 0)
            got = getattr(rt, name).value
            want = ex.evaluate(e, model.bindings(p.x0, p.r, p.s, p.z))
            dev = abs(got - want)
            if dev > worst:
                worst = dev
                worst_rec = {"field": name, "point": _rp(p), "computed": got, "printed": want,
                             "abs_diff": dev, "printed_expr": str(e)}
        if worst <= tol:
            matched.append(name)
        else:
            disc.append(worst_rec)
    return matched, disc


def catalog_verify(id: str, params: dict | None = None, seed: int = 0, n: int = 3,
                   samples: int = 20, threads: int = 1) -> VerificationReport:
    entry = _entry(id)
    model = catalog_get(id, params, strict=True, n=n)
    report = VerificationReport(id, model.describe())
    if entry.note:
        report.notes.append(entry.note)
    full = sample_full(model.region(), n, samples, seed)
    unit = sample_full(model.region(), n, samples, seed, u_range=(1.0, 1.0))
    reduced = sample_points(model, samples, seed)

    def validity():
        rep = validity_scan(model, GridSpec(9, 9, 9, 3))
        return (min(rep.min_phi, rep.min_lambda, rep.min_omega if n >= 3 else math.inf),
                rep.valid, None, f"{rep.points} grid points")
    _guard(report, "validity", 0.0, validity)

    def symmetry():
        rep = symmetry_check(model, samples, seed)
        return rep.max_relative, rep.passed(1e-12), rep.worst_point, ""
    _guard(report, "symmetry", 1e-12, symmetry)

    def det_identity():
        worst, wp = 0.0, None
        for x, y in full:
            t = metric_tensor(model, x, y)
            d = np.linalg.det(t.g)
            rel = abs(d - t.det_closed) / abs(d)
            if rel > worst:
                worst, wp = rel, _pt(x, y)
        return worst, worst < 1e-9, wp, ""
    _guard(report, "det_identity", 1e-9, det_identity)

    def spray():
        worst, wp = 0.0, None
        for x, y in full:
            a = spray_coefficients(model, x, y).as_array()
            b = spray_oracle_pq(model, x, y).as_array()
            rel = float(np.max(np.abs(a - b)) / max(1.0, np.max(np.abs(b))))
            if rel > worst:
                worst, wp = rel, _pt(x, y)
        return worst, worst < 1e-8, wp, ""
    _guard(report, "spray_cross_oracle", 1e-8, spray)

    oracle_max = {}

    def closed_vs_oracle():
        worst, wp = 0.0, None
        big = 0.0
        for x, y in unit:
            b = douglas_oracle(model, x, y).D
            a = douglas_closed(model, x, y).D
            big = max(big, float(np.max(np.abs(b))))
            excess = float(np.max(np.abs(a - b) / (1e-7 * np.abs(b) + 1e-10)))
            if excess > worst:
                worst, wp = excess, _pt(x, y)
        oracle_max["D"] = big
        return worst, worst <= 1.0, wp, "max of |closed-oracle| / (1e-7|oracle| + 1e-10)"
    _guard(report, "douglas_closed_vs_oracle", 1.0, closed_vs_oracle)

    def douglas_flat():
        worst, wp = 0.0, None
        for x, y in unit:
            v = douglas_oracle(model, x, y).max_abs()
            if v > worst:
                worst, wp = v, _pt(x, y)
        ok = worst < 1e-9 if entry.douglas else worst > 1e-6
        return worst, ok, wp, "expected " + ("vanishing" if entry.douglas else "non-vanishing")
    _guard(report, "douglas_vanishing", 1e-9, douglas_flat)

    def residuals():
        res = flatness_residuals(model, reduced, threads=threads)
        m = res.max()
        ok = m < 1e-9 if entry.douglas else m > 1e-4
        return m, ok, res.worst_point, str(res.values())
    _guard(report, "flatness_residuals", 1e-9, residuals)

    if entry.douglas:
        def fit():
            pc = fit_coefficients(model, 0.0, 0.5, 16)
            return pc.residual, pc.residual < 1e-9, {"x0": 0.0, "r": 0.5}, str(pc.as_dict())
        _guard(report, "coefficient_fit", 1e-9, fit)

        def pde():
            v = reduced_pde_residual(model, reduced, threads=threads)
            return v, v < 1e-8, None, ""
        _guard(report, "reduced_pde", 1e-8, pde)

        if entry.psi is not None:
            psi = printed_psi(id, params, n)

            def pde_printed():
                v = reduced_pde_residual(model, reduced, psi=psi, threads=threads)
                return v, v < 1e-8, None, f"psi = {psi}"
            _guard(report, "reduced_pde_printed_psi", 1e-8, pde_printed)

    if entry.proj_flat != "unknown":
        def proj():
            pf = projective_flatness(model, reduced)
            want = entry.proj_flat == "yes"
            m = max(pf.supU, pf.supL, pf.supP1, pf.supP2)
            return m, pf.verdict == want, None, str(pf.as_dict())
        _guard(report, "projective_flatness", 1e-9, proj)

    if entry.printed:
        try:
            matched, disc = compare_printed(model, id, params, reduced)
        except (ArithmeticError, ValueError) as err:
            report.notes.append(f"printed comparison failed: {err}")
        else:
            report.matched.extend(matched)
            report.discrepancies.extend(disc)
    return report
