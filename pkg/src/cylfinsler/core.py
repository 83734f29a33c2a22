"""Metric models F = |ybar| phi(x0, r, s, z): jets of phi, the scalars Omega
and Lambda, the fundamental tensor and validity scans."""
from __future__ import annotations

import dataclasses
import math
import threading
from dataclasses import dataclass, field
from typing import Mapping

import numpy as np

from . import expr as ex
from .coords import ConfigPoint, ReducedPoint, SampleRegion, TangentVector, reduce
from .taylor import Jet

POSITIVITY_FLOOR = 1e-12


class ModelError(ValueError):
    pass


class NonPositivePhiError(ArithmeticError):
    def __init__(self, value, point):
        super().__init__(f"phi = {value!r} is not positive at {point}")
        self.value = value
        self.point = point


@dataclass(frozen=True, eq=False)
class PhiModel:
    """A metric definition: phi, its parameter bindings, n and the domain.

    ``n`` is the fiber dimension of ybar (the manifold has dimension n + 1).
    Reduced points are sampled with r in [0.1, 0.9 rho], |s| <= 0.9 r and
    0.05 <= |z| <= z_max.
    """

    phi: ex.Expr
    params: Mapping[str, float] = field(default_factory=dict)
    n: int = 3
    rho: float = 1.0
    x0_interval: tuple = (-1.0, 1.0)
    z_max: float = 2.0
    name: str = "phi"
    _cache: dict = field(default_factory=dict, repr=False, compare=False)
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False, compare=False)

    def __post_init__(self):
        phi = self.phi
        if isinstance(phi, str):
            phi = ex.parse(phi)
            object.__setattr__(self, "phi", phi)
        params = {str(k): float(v) for k, v in dict(self.params).items()}
        object.__setattr__(self, "params", params)
        missing = ex.parameters(phi) - set(params)
        if missing:
            raise ModelError("unbound parameter(s) in phi: " + ", ".join(sorted(missing)))
        if int(self.n) != self.n or self.n < 2:
            raise ModelError(f"n must be an integer >= 2, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))
        if not self.rho > 0:
            raise ModelError("rho must be positive")
        lo, hi = self.x0_interval
        if not lo < hi:
            raise ModelError("x0_interval must satisfy lo < hi")
        object.__setattr__(self, "x0_interval", (float(lo), float(hi)))

    def replace(self, **changes) -> "PhiModel":
        changes.setdefault("_cache", {})
        changes.setdefault("_lock", threading.Lock())
        return dataclasses.replace(self, **changes)

    def region(self) -> SampleRegion:
        lo, hi = self.x0_interval
        return SampleRegion(r_lo=min(0.1, 0.5 * self.rho), r_hi=0.9 * self.rho, s_frac=0.9,
                            z_lo=0.05, z_hi=self.z_max, x0_lo=lo, x0_hi=hi)

    def bindings(self, x0, r, s, z) -> dict:
        b = dict(self.params)
        b.update(x0=x0, r=r, s=s, z=z)
        return b

    def evaluator(self, indices) -> tuple:
        """(indices, compiled evaluator) for a set of phi partials, cached."""
        key = tuple(sorted(set(tuple(i) for i in indices)))
        hit = self._cache.get(key)
        if hit is None:
            with self._lock:
                hit = self._cache.get(key)
                if hit is None:
                    exprs = [ex.partial(self.phi, i) for i in key]
                    hit = (key, ex.CompiledExprs(exprs))
                    self._cache[key] = hit
        return hit

    def phi_value(self, x0, r, s, z) -> float:
        return ex.evaluate(self.phi, self.bindings(x0, r, s, z))

    def finsler(self, x: ConfigPoint, y: TangentVector) -> float:
        p = reduce(x, y)
        return p.u * self.phi_value(p.x0, p.r, p.s, p.z)

    __call__ = finsler

    def describe(self) -> dict:
        return {
            "name": self.name, "phi": str(self.phi), "params": dict(self.params),
            "n": self.n, "rho": self.rho, "x0_interval": list(self.x0_interval),
            "z_max": self.z_max,
        }


# ----------------------------------------------------------------------- jets

def jet_indices(order: int, axial: int = 1) -> list:
    """Multi-indices (a, b, c, d) with a + b <= axial and total <= order,
    plus every index of total order <= 2."""
    top = max(order, 2)
    out = []
    for a in range(top + 1):
        for b in range(top + 1 - a):
            for c in range(top + 1 - a - b):
                for d in range(top + 1 - a - b - c):
                    tot = a + b + c + d
                    if (a + b <= axial and tot <= order) or tot <= 2:
                        out.append((a, b, c, d))
    return out


class PhiJet:
    """Exact partials of phi at a reduced point, keyed by (a, b, c, d).

    Missing entries are derived symbolically on first access.
    """

    def __init__(self, model: PhiModel, point: ReducedPoint, table: dict):
        self.model = model
        self.point = point
        self.table = table

    def __getitem__(self, index) -> float:
        index = tuple(index)
        v = self.table.get(index)
        if v is None:
            p = self.point
            v = float(ex.evaluate(ex.partial(self.model.phi, index),
                                  self.model.bindings(p.x0, p.r, p.s, p.z)))
            self.table[index] = v
        return v

    def __contains__(self, index) -> bool:
        return tuple(index) in self.table

    @property
    def value(self) -> float:
        return self[(0, 0, 0, 0)]

    def sz(self, a: int, b: int, order: int) -> Jet:
        """Taylor jet in (s, z) of d^a/dx0^a d^b/dr^b phi."""
        p = self.point
        return Jet.from_partials(2, order, lambda m: self[(a, b) + tuple(m)],
                                 base=(p.x0, p.r, p.s, p.z))

    def full(self, order: int) -> Jet:
        """Taylor jet of phi in all four reduced variables (x0, r, s, z)."""
        return Jet.from_partials(4, order, lambda m: self[m])


def phi_jet(model: PhiModel, p: ReducedPoint, order: int = 2, axial: int = 1,
            require_positive: bool = True) -> PhiJet:
    keys, fn = model.evaluator(jet_indices(order, axial))
    vals = fn(model.bindings(p.x0, p.r, p.s, p.z))
    table = dict(zip(keys, vals))
    if require_positive and not table[(0, 0, 0, 0)] > 0:
        raise NonPositivePhiError(table[(0, 0, 0, 0)], p)
    return PhiJet(model, p, table)


@dataclass(frozen=True)
class FundamentalScalars:
    F_over_u: float
    Omega: float
    Lambda: float


def fundamental_scalars(jet: PhiJet) -> FundamentalScalars:
    p = jet.point
    phi = jet[(0, 0, 0, 0)]
    ps, pz = jet[(0, 0, 1, 0)], jet[(0, 0, 0, 1)]
    pss, psz, pzz = jet[(0, 0, 2, 0)], jet[(0, 0, 1, 1)], jet[(0, 0, 0, 2)]
    omega = phi - p.s * ps - p.z * pz
    lam = omega * pzz + (p.r ** 2 - p.s ** 2) * (pss * pzz - psz ** 2)
    return FundamentalScalars(phi, omega, lam)


# ------------------------------------------------------------ fundamental tensor

@dataclass
class FundamentalTensor:
    g: np.ndarray
    det_closed: float
    point: ReducedPoint

    @property
    def g00(self) -> float:
        return float(self.g[0, 0])

    @property
    def g0j(self) -> np.ndarray:
        return self.g[0, 1:]

    @property
    def gij(self) -> np.ndarray:
        return self.g[1:, 1:]

    @property
    def det(self) -> float:
        return float(np.linalg.det(self.g))


def metric_tensor(model: PhiModel, x: ConfigPoint, y: TangentVector) -> FundamentalTensor:
    """g_AB = (1/2) [F^2]_{y^A y^B} from the block formulas."""
    p = reduce(x, y)
    jet = phi_jet(model, p, order=2)
    sc = fundamental_scalars(jet)
    phi, om = sc.F_over_u, sc.Omega
    ps, pz = jet[(0, 0, 1, 0)], jet[(0, 0, 0, 1)]
    pss, psz, pzz = jet[(0, 0, 2, 0)], jet[(0, 0, 1, 1)], jet[(0, 0, 0, 2)]
    s, z = p.s, p.z
    om_s = -s * pss - z * psz
    om_z = -s * psz - z * pzz
    pom_s = ps * om + phi * om_s
    pom_z = pz * om + phi * om_z
    n = x.n
    ui = y.ybar / p.u
    xi = x.xbar
    g = np.empty((n + 1, n + 1))
    g[0, 0] = pz ** 2 + phi * pzz
    g0 = pom_z * ui + (ps * pz + phi * psz) * xi
    g[0, 1:] = g0
    g[1:, 0] = g0
    m_uu = -(s * pom_s + z * pom_z)
    m_ux = pom_s
    m_xx = ps ** 2 + phi * pss
    X = (m_uu * np.outer(ui, ui) + m_ux * (np.outer(ui, xi) + np.outer(xi, ui))
         + m_xx * np.outer(xi, xi))
    g[1:, 1:] = phi * om * np.eye(n) + X
    det_closed = phi ** (n + 2) * om ** (n - 2) * sc.Lambda
    return FundamentalTensor(g, det_closed, p)


def fd_fiber_hessian(model: PhiModel, x: ConfigPoint, y: TangentVector,
                     h: float = 1e-4) -> np.ndarray:
    """Central-difference Hessian of F^2/2 in y; an oracle for metric_tensor."""
    y0 = y.as_array()
    m = y0.size

    def e(v):
        return 0.5 * model.finsler(x, TangentVector.from_array(v)) ** 2

    H = np.empty((m, m))
    for a in range(m):
        for b in range(a, m):
            da = np.zeros(m)
            db = np.zeros(m)
            da[a] = h
            db[b] = h
            val = (e(y0 + da + db) - e(y0 + da - db) - e(y0 - da + db) + e(y0 - da - db)) / (4 * h * h)
            H[a, b] = H[b, a] = val
    return H


# ------------------------------------------------------------------- validity

@dataclass(frozen=True)
class GridSpec:
    r_count: int = 17
    s_count: int = 17
    z_count: int = 17
    x0_count: int = 3
    r_lo: float = 0.1
    r_hi: float | None = None   # default 0.9 * rho
    s_frac: float = 0.9
    z_lo: float | None = None   # default -z_max
    z_hi: float | None = None   # default +z_max
    x0_lo: float | None = None
    x0_hi: float | None = None

    def axes(self, model: PhiModel) -> dict:
        r_hi = 0.9 * model.rho if self.r_hi is None else self.r_hi
        z_lo = -model.z_max if self.z_lo is None else self.z_lo
        z_hi = model.z_max if self.z_hi is None else self.z_hi
        x_lo = model.x0_interval[0] if self.x0_lo is None else self.x0_lo
        x_hi = model.x0_interval[1] if self.x0_hi is None else self.x0_hi
        if self.r_lo <= 0 or r_hi > model.rho or self.r_lo > r_hi:
            raise ModelError("grid r-range must lie in (0, rho]")
        return {
            "r": np.linspace(self.r_lo, r_hi, self.r_count),
            "s_frac": np.linspace(-self.s_frac, self.s_frac, self.s_count),
            "z": np.linspace(z_lo, z_hi, self.z_count),
            "x0": np.linspace(x_lo, x_hi, self.x0_count) if self.x0_count > 1 else np.array([0.5 * (x_lo + x_hi)]),
        }


@dataclass
class ValidityReport:
    valid: bool
    min_phi: float
    min_omega: float
    min_lambda: float
    points: int
    violations: list
    errors: list
    n: int
    violation_count: int = 0

    def as_dict(self) -> dict:
        return dataclasses.asdict(self)


def validity_scan(model: PhiModel, grid: GridSpec | None = None,
                  max_listed: int = 20) -> ValidityReport:
    """Minimum phi, Omega and Lambda over a grid.

    Valid iff phi > 0 and Lambda > 0 everywhere, and additionally Omega > 0
    when n >= 3; each with the floor POSITIVITY_FLOOR.
    """
    grid = GridSpec() if grid is None else grid
    ax = grid.axes(model)
    idx = [(0, 0, c, d) for c in range(3) for d in range(3 - c)]
    keys, fn = model.evaluator(idx)
    pos = {k: i for i, k in enumerate(keys)}
    min_phi = min_om = min_lam = math.inf
    violations, errors = [], []
    count = 0
    for x0 in ax["x0"]:
        for r in ax["r"]:
            for sf in ax["s_frac"]:
                s = sf * r
                for z in ax["z"]:
                    count += 1
                    pt = {"x0": float(x0), "r": float(r), "s": float(s), "z": float(z)}
                    try:
                        v = fn(model.bindings(float(x0), float(r), float(s), float(z)))
                    except (ArithmeticError, ValueError) as err:
                        errors.append({**pt, "error": str(err)})
                        continue
                    phi = v[pos[(0, 0, 0, 0)]]
                    ps, pz = v[pos[(0, 0, 1, 0)]], v[pos[(0, 0, 0, 1)]]
                    pss, psz, pzz = v[pos[(0, 0, 2, 0)]], v[pos[(0, 0, 1, 1)]], v[pos[(0, 0, 0, 2)]]
                    om = phi - s * ps - z * pz
                    lam = om * pzz + (r * r - s * s) * (pss * pzz - psz * psz)
                    min_phi = min(min_phi, phi)
                    min_om = min(min_om, om)
                    min_lam = min(min_lam, lam)
                    bad = phi <= POSITIVITY_FLOOR or lam <= POSITIVITY_FLOOR or (
                        model.n >= 3 and om <= POSITIVITY_FLOOR)
                    if bad and len(violations) < max_listed:
                        violations.append({**pt, "phi": phi, "Omega": om, "Lambda": lam})
                    elif bad:
                        violations.append(None)
    n_viol = len(violations)
    violations = [v for v in violations if v is not None]
    valid = n_viol == 0 and not errors
    return ValidityReport(valid, min_phi, min_om, min_lam, count, violations, errors,
                          model.n, n_viol)
