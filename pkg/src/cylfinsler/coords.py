"""Tangent-bundle coordinates, the reduced invariants (r, s, z, u), sampling
of test points, and the O(n) invariance check."""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Callable

import numpy as np

S_SLACK = 1e-12


class ZeroFiberError(ValueError):
    """The fiber part of the tangent vector vanishes (u = |ybar| = 0)."""


@dataclass(frozen=True)
class ConfigPoint:
    x0: float
    xbar: np.ndarray = field(repr=False)

    def __post_init__(self):
        xb = np.asarray(self.xbar, dtype=float).reshape(-1)
        if xb.size < 2:
            raise ValueError("need n >= 2 transverse coordinates")
        object.__setattr__(self, "xbar", xb)
        object.__setattr__(self, "x0", float(self.x0))

    @property
    def n(self) -> int:
        return self.xbar.size

    def as_array(self) -> np.ndarray:
        return np.concatenate(([self.x0], self.xbar))

    @classmethod
    def from_array(cls, a) -> "ConfigPoint":
        a = np.asarray(a, dtype=float)
        return cls(a[0], a[1:])

    def __repr__(self):
        return f"ConfigPoint(x0={self.x0!r}, xbar={self.xbar.tolist()!r})"


@dataclass(frozen=True)
class TangentVector:
    y0: float
    ybar: np.ndarray = field(repr=False)

    def __post_init__(self):
        yb = np.asarray(self.ybar, dtype=float).reshape(-1)
        if yb.size < 2:
            raise ValueError("need n >= 2 transverse components")
        object.__setattr__(self, "ybar", yb)
        object.__setattr__(self, "y0", float(self.y0))

    @property
    def n(self) -> int:
        return self.ybar.size

    def as_array(self) -> np.ndarray:
        return np.concatenate(([self.y0], self.ybar))

    @classmethod
    def from_array(cls, a) -> "TangentVector":
        a = np.asarray(a, dtype=float)
        return cls(a[0], a[1:])

    def scaled(self, lam: float) -> "TangentVector":
        return TangentVector(lam * self.y0, lam * self.ybar)

    def __repr__(self):
        return f"TangentVector(y0={self.y0!r}, ybar={self.ybar.tolist()!r})"


@dataclass(frozen=True)
class ReducedPoint:
    x0: float
    r: float
    s: float
    z: float
    u: float = 1.0

    def as_tuple(self) -> tuple:
        return (self.x0, self.r, self.s, self.z)


def reduce(x: ConfigPoint, y: TangentVector) -> ReducedPoint:
    if x.n != y.n:
        raise ValueError(f"dimension mismatch: xbar has {x.n} entries, ybar has {y.n}")
    u = float(np.linalg.norm(y.ybar))
    if u == 0.0:
        raise ZeroFiberError("zero fiber vector: |ybar| = 0")
    r = float(np.linalg.norm(x.xbar))
    s = float(np.dot(x.xbar, y.ybar)) / u
    z = y.y0 / u
    if abs(s) > r * (1 + S_SLACK) + S_SLACK:
        raise ArithmeticError(f"|s| = {abs(s)!r} exceeds r = {r!r}")
    return ReducedPoint(x.x0, r, s, z, u)


def random_orthogonal(seed: int, n: int) -> np.ndarray:
    """Seeded orthogonal matrix from QR of a Gaussian matrix; det may be -1."""
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = np.random.default_rng(seed)
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    signs = np.sign(np.diag(r))
    signs[signs == 0] = 1.0
    return q * signs


def rotate(O: np.ndarray, x: ConfigPoint, y: TangentVector):
    return ConfigPoint(x.x0, O @ x.xbar), TangentVector(y.y0, O @ y.ybar)


# ------------------------------------------------------------------- sampling

@dataclass(frozen=True)
class SampleRegion:
    """Reduced-point sampling window.

    Stays off r = 0, the boundary |s| = r and the plane z = 0, where the
    closed-form expressions carry removable singularities.
    """

    r_lo: float = 0.1
    r_hi: float = 0.9
    s_frac: float = 0.9
    z_lo: float = 0.05
    z_hi: float = 2.0
    x0_lo: float = -1.0
    x0_hi: float = 1.0


def sample_reduced(region: SampleRegion, count: int, seed: int) -> list:
    rng = np.random.default_rng(seed)
    out = []
    for _ in range(count):
        x0 = rng.uniform(region.x0_lo, region.x0_hi)
        r = rng.uniform(region.r_lo, region.r_hi)
        s = rng.uniform(-region.s_frac, region.s_frac) * r
        z = rng.uniform(region.z_lo, region.z_hi) * rng.choice((-1.0, 1.0))
        out.append(ReducedPoint(float(x0), float(r), float(s), float(z), 1.0))
    return out


def lift(p: ReducedPoint, n: int, rng: np.random.Generator, u: float | None = None):
    """A full-coordinate (x, y) whose invariants are ``p``, in random orientation."""
    u = p.u if u is None else u
    O = random_orthogonal(int(rng.integers(2**31)), n)
    e1, e2 = O[:, 0], O[:, 1]
    xbar = p.r * e1
    c = p.s / p.r if p.r > 0 else 0.0
    c = max(-1.0, min(1.0, c))
    ydir = c * e1 + math.sqrt(max(0.0, 1.0 - c * c)) * e2
    ybar = u * ydir
    return ConfigPoint(p.x0, xbar), TangentVector(p.z * u, ybar)


def sample_full(region: SampleRegion, n: int, count: int, seed: int,
                u_range: tuple = (0.5, 1.5)) -> list:
    """Random (x, y) pairs realising reduced points drawn from ``region``."""
    pts = sample_reduced(region, count, seed)
    rng = np.random.default_rng([seed, 1])
    out = []
    for p in pts:
        u = float(rng.uniform(*u_range))
        out.append(lift(p, n, rng, u))
    return out


# ------------------------------------------------------------------- symmetry

@dataclass
class SymmetryReport:
    max_deviation: float
    max_relative: float
    samples: int
    worst_point: dict | None

    def passed(self, tol: float = 1e-12) -> bool:
        return self.max_relative <= tol


def symmetry_check(F, samples: int, seed: int, n: int | None = None,
                   region: SampleRegion | None = None) -> SymmetryReport:
    """max |F(x0, O xbar, y0, O ybar) - F(x, y)| with a fresh O per sample.

    ``F`` is a :class:`~cylfinsler.core.PhiModel` or any callable
    ``F(x: ConfigPoint, y: TangentVector) -> float``.
    """
    if samples < 1:
        raise ValueError("samples must be >= 1")
    if hasattr(F, "finsler"):
        model = F
        n = model.n if n is None else n
        region = model.region() if region is None else region
        func: Callable = model.finsler
    else:
        func = F
        n = 3 if n is None else n
        region = SampleRegion() if region is None else region
    pts = sample_full(region, n, samples, seed)
    worst, worst_rel, worst_pt = 0.0, -1.0, None
    for k, (x, y) in enumerate(pts):
        O = random_orthogonal(seed * 100003 + k, n)
        xr, yr = rotate(O, x, y)
        f0 = func(x, y)
        dev = abs(func(xr, yr) - f0)
        worst = max(worst, dev)
        rel = dev / max(1.0, abs(f0))
        if rel > worst_rel:
            worst_rel = rel
            worst_pt = {"x": x.as_array().tolist(), "y": y.as_array().tolist(), "F": f0}
    return SymmetryReport(worst, worst_rel, samples, worst_pt)


def invariant_jacobians(x: ConfigPoint, y: TangentVector) -> dict:
    """Fiber derivatives of u, s, z with respect to y^i (i >= 1)."""
    p = reduce(x, y)
    u = p.u
    ui = y.ybar / u
    return {
        "u_i": ui,
        "u_ij": (np.eye(x.n) - np.outer(ui, ui)) / u,
        "s_i": (x.xbar - p.s * ui) / u,
        "z_i": -p.z * ui / u,
    }

