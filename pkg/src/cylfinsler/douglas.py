"""Douglas curvature of F = u phi: the Psi calculus on (s, z)-jets, the R/T
reduction of the projected spray, the closed-form tensor, a y-jet oracle,
the vanishing conditions, polynomial coefficient fits, the reduced PDE and
projective flatness."""
from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import expr as ex
from .coords import ConfigPoint, ReducedPoint, TangentVector, reduce, sample_reduced
from .core import PhiModel, phi_jet
from .spray import S, Z, field_jets, fiber_invariants, spray_jet
from .taylor import Jet, compose, sym_tensor_from_jet

Z_FLOOR = 1e-3
S_MARGIN = 1e-9
FLAT_TOL = 1e-9
MAX_RT_ORDER = 4

RESIDUAL_NAMES = ("U_s", "U_z", "U_zzz", "R_s", "R_z", "R_zzz", "T", "T_zz")


class ClosedFormDomainError(ArithmeticError):
    """The closed Douglas formulas divide by z; |z| is below the floor."""


class RankDeficientError(ValueError):
    pass


# ------------------------------------------------------------------ Psi

def _sz_vars(jet: Jet) -> tuple:
    base = jet.base
    if base is None:
        raise ValueError("SZ jet carries no base point")
    s0, z0 = base[-2], base[-1]
    return (Jet.variable(2, jet.order, S, s0, base), Jet.variable(2, jet.order, Z, z0, base))


def psi_apply(j: Jet) -> Jet:
    """Psi(Theta) = -s Theta_s - z Theta_z; one order is consumed."""
    if j.order < 1:
        raise ValueError("psi_apply needs a jet of order >= 1")
    s, z = _sz_vars(j)
    return -(s * j.d(S)) - z * j.d(Z)


def psi_s(j: Jet) -> Jet:
    return psi_apply(j).d(S)


def psi_z(j: Jet) -> Jet:
    return psi_apply(j).d(Z)


def sz_jet_from_poly(coeffs: dict, s0: float, z0: float, order: int) -> Jet:
    """Jet of the polynomial sum c * s^a z^b at (s0, z0); handy for tests."""
    base = (s0, z0)
    s = Jet.variable(2, order, S, s0, base)
    z = Jet.variable(2, order, Z, z0, base)
    out = Jet.constant(2, order, 0.0, base)
    for (a, b), c in coeffs.items():
        out = out + c * (s ** a) * (z ** b)
    return out


# ------------------------------------------------------------------ R and T

@dataclass(frozen=True)
class RTFields:
    R: Jet
    T: Jet
    U: Jet
    L: Jet
    point: ReducedPoint
    n: int


def rt_fields(model: PhiModel, p: ReducedPoint, order: int = 3, fields: dict | None = None) -> RTFields:
    if order > MAX_RT_ORDER:
        raise ValueError(f"rt_fields supports order <= {MAX_RT_ORDER}")
    if fields is None:
        fields = field_jets(model, p, order + 1)
    U, L = fields["U"], fields["L"]
    n = model.n
    s, z = _sz_vars(U)
    ww = p.r * p.r - s * s
    Us, Lz = U.d(S), L.d(Z)
    T = (3.0 * s * U + Lz + ww * Us) / (n + 2)
    R = L - (z / (n + 2)) * (Lz - (n - 1) * s * U + ww * Us)
    return RTFields(R.truncate(order), T.truncate(order), U.truncate(order), L.truncate(order), p, n)


# ------------------------------------------------------------- tensor type

@dataclass(frozen=True)
class DouglasTensor:
    """Components ``D[B, A, C, D]`` = D_B^A_CD, indices 0..n."""

    D: np.ndarray
    x: ConfigPoint
    y: TangentVector

    @property
    def n(self) -> int:
        return self.D.shape[0] - 1

    @property
    def u(self) -> float:
        return float(np.linalg.norm(self.y.ybar))

    def max_abs(self) -> float:
        return float(np.max(np.abs(self.D)))

    def symmetry_defect(self) -> float:
        D = self.D
        perms = [(0, 1, 3, 2), (2, 1, 0, 3), (3, 1, 2, 0)]
        return max(float(np.max(np.abs(D - D.transpose(p)))) for p in perms)


def _cyc3(T: np.ndarray) -> np.ndarray:
    return T + T.transpose(1, 2, 0) + T.transpose(2, 0, 1)


def _cyc4(T: np.ndarray) -> np.ndarray:
    # cyclic sum over the last three axes, axis 0 fixed
    return T + T.transpose(0, 3, 1, 2) + T.transpose(0, 2, 3, 1)


def douglas_closed(model: PhiModel, x: ConfigPoint, y: TangentVector,
                   rt: RTFields | None = None) -> DouglasTensor:
    p = reduce(x, y)
    if abs(p.z) < Z_FLOOR:
        raise ClosedFormDomainError(f"|z| = {abs(p.z):.3g} below closed-form floor {Z_FLOOR}")
    if rt is None:
        rt = rt_fields(model, p, 3)
    R, T, U = rt.R, rt.T, rt.U
    s, z = _sz_vars(R)
    P = psi_apply
    n = x.n
    u = p.u
    X = x.xbar
    w = y.ybar / u
    I = np.eye(n)
    ein = np.einsum

    def pd(j, a, b):
        return j.partial((a, b))

    def val(j):
        return j.value

    z2 = z * z
    D = np.zeros((n + 1,) * 4)

    # D_0^0_00, D_0^0_0l
    D[0, 0, 0, 0] = pd(R, 0, 3) / u
    d00l = (pd(R, 1, 2) * X + val(P(R.d(Z, 2))) * w) / u
    D[0, 0, 0, 1:] = d00l
    D[0, 0, 1:, 0] = d00l
    D[1:, 0, 0, 0] = d00l

    # D_0^0_kl
    Rz_z = R.d(Z) / z
    a = val(z * P(Rz_z))
    b = val(P(z2 * P(Rz_z)) / z)
    c = val(P(R.d(S).d(Z)))
    d0kl = (pd(R, 2, 1) * np.outer(X, X) + c * (np.outer(X, w) + np.outer(w, X))
            + a * I + b * np.outer(w, w)) / u
    D[0, 0, 1:, 1:] = d0kl
    D[1:, 0, 0, 1:] = d0kl
    D[1:, 0, 1:, 0] = d0kl

    # D_j^0_kl
    Rs = R.d(S)
    q = z2 * P(R / z2)
    t = (pd(R, 3, 0) / 3.0 * ein("j,k,l->jkl", X, X, X)
         + val(P(R.d(S, 2))) * ein("j,k,l->jkl", X, X, w)
         + val(z * P(Rs / z)) * ein("j,kl->jkl", X, I)
         + val(P(q)) * ein("j,kl->jkl", w, I)
         + val(P(z2 * P(Rs / z)) / z) * ein("j,k,l->jkl", X, w, w)
         + val(P(z2 * P(q)) / (3.0 * z2)) * ein("j,k,l->jkl", w, w, w))
    D[1:, 0, 1:, 1:] = _cyc3(t) / u

    # D_0^i_00
    D[0, 1:, 0, 0] = (pd(U, 0, 3) * X - pd(T, 0, 3) * w) / u

    # D_0^i_0l  (axes i, l)
    Tz = T.d(Z)
    di0l = (pd(U, 1, 2) * np.outer(X, X) + val(P(U.d(Z, 2))) * np.outer(X, w)
            - pd(T, 0, 2) * I - pd(T, 1, 2) * np.outer(w, X) - val(psi_z(Tz)) * np.outer(w, w)) / u
    D[0, 1:, 0, 1:] = di0l
    D[0, 1:, 1:, 0] = di0l
    D[1:, 1:, 0, 0] = di0l.T  # D_l^i_00: axes (l, i)

    # D_0^i_kl  (axes i, k, l)
    Uz_z = U.d(Z) / z
    Tsz = T.d(S).d(Z)
    base = (pd(U, 2, 1) * ein("k,l,i->ikl", X, X, X)
            + val(z * P(Uz_z)) * ein("kl,i->ikl", I, X)
            + val(P(z2 * P(Uz_z)) / z) * ein("k,l,i->ikl", w, w, X)
            - pd(T, 2, 1) * ein("k,l,i->ikl", X, X, w)
            - val(P(z2 * P(Tz)) / z2) * ein("k,l,i->ikl", w, w, w))
    pair = (val(P(U.d(S).d(Z))) * ein("k,l,i->ikl", w, X, X)
            - pd(T, 1, 1) * ein("k,li->ikl", X, I)
            - val(P(z * Tsz) / z) * ein("l,k,i->ikl", X, w, w))
    pair = pair + pair.transpose(0, 2, 1)
    trip = val(P(Tz)) * (ein("il,k->ikl", I, w) + ein("ik,l->ikl", I, w) + ein("kl,i->ikl", I, w))
    di0kl = (base + pair - trip) / u
    D[0, 1:, 1:, 1:] = di0kl
    D[1:, 1:, 0, 1:] = di0kl.transpose(1, 0, 2)
    D[1:, 1:, 1:, 0] = di0kl.transpose(1, 0, 2)

    # D_j^i_kl  (axes i, j, k, l)
    Us = U.d(S)
    qu = z2 * P(U / z2)
    Ts = T.d(S)
    qt = z2 * P(T / z)
    inner = (val(P(U.d(S, 2))) * ein("j,k,l->jkl", w, X, X)
             + val(z * P(Us / z)) * ein("jk,l->jkl", I, X)
             + val(psi_s(qu)) * ein("j,k,l->jkl", w, w, X)
             + val(P(qu)) * ein("jk,l->jkl", I, w))
    upart = (pd(U, 3, 0) * ein("j,k,l->jkl", X, X, X)
             + val(P(z2 * P(qu)) / z2) * ein("j,k,l->jkl", w, w, w)
             + _cyc3(inner))
    tin = (pd(T, 2, 0) * ein("ij,k,l->ijkl", I, X, X)
           + val(psi_s(Ts)) * ein("i,j,k,l->ijkl", w, w, X, X)
           + val(P(z2 * P(Ts)) / z2) * ein("j,k,l,i->ijkl", X, w, w, w))
    dd = ein("ij,kl->ijkl", I, I)
    tpart = (_cyc4(tin)
             + val(z * P(T / z)) * (dd + dd.transpose(0, 2, 1, 3) + dd.transpose(0, 2, 3, 1))
             + val(P(Ts)) * (ein("j,i,kl->ijkl", X, w, I) + ein("j,k,li->ijkl", X, w, I)
                             + ein("j,l,ik->ijkl", X, w, I)
                             + ein("k,j,il->ijkl", X, w, I) + ein("k,i,lj->ijkl", X, w, I)
                             + ein("k,l,ji->ijkl", X, w, I)
                             + ein("l,i,jk->ijkl", X, w, I) + ein("l,j,ki->ijkl", X, w, I)
                             + ein("l,k,ij->ijkl", X, w, I))
             + val(P(qt) / z) * (ein("ij,k,l->ijkl", I, w, w) + ein("ik,j,l->ijkl", I, w, w)
                                  + ein("il,j,k->ijkl", I, w, w) + ein("i,jk,l->ijkl", w, I, w)
                                  + ein("i,jl,k->ijkl", w, I, w) + ein("i,kl,j->ijkl", w, I, w))
             + pd(T, 3, 0) * ein("j,k,l,i->ijkl", X, X, X, w)
             + val(P(z2 * P(qt)) / (z2 * z)) * ein("j,k,l,i->ijkl", w, w, w, w))
    dijkl = (ein("jkl,i->ijkl", upart, X) - tpart) / u
    D[1:, 1:, 1:, 1:] = dijkl.transpose(1, 0, 2, 3)
    return DouglasTensor(D, x, y)


# ------------------------------------------------------------------ oracle

def douglas_oracle(model: PhiModel, x: ConfigPoint, y: TangentVector,
                   projective_shift: float = 0.0) -> DouglasTensor:
    """Third fiber derivatives of the trace-projected spray, by exact y-jets.

    ``projective_shift`` c replaces G^A with G^A + c F y^A before projecting.
    """
    p = reduce(x, y)
    m = x.n + 1
    fields = field_jets(model, p, 4)
    G = spray_jet(model, x, y, 4, fields=fields)
    Y, u, s, z = fiber_invariants(x, y, 4)
    if projective_shift:
        F = u * compose(fields["phi"].truncate(4), [s, z])
        G = [g + projective_shift * F * Y[A] for A, g in enumerate(G)]
    div = sum((G[A].d(A) for A in range(m)), Jet.constant(m, 3, 0.0))
    D = np.empty((m,) * 4)
    for A in range(m):
        H = G[A].truncate(3) - Y[A].truncate(3) * div / (m + 1)
        D[:, A, :, :] = sym_tensor_from_jet(H, 3)
    return DouglasTensor(D, x, y)


# -------------------------------------------------------- vanishing tests

@dataclass(frozen=True)
class FlatnessResiduals:
    U_s: float
    U_z: float
    U_zzz: float
    R_s: float
    R_z: float
    R_zzz: float
    T: float
    T_zz: float
    samples: int = 0
    worst_point: dict | None = field(default=None, compare=False)

    def values(self) -> dict:
        return {k: getattr(self, k) for k in RESIDUAL_NAMES}

    def max(self) -> float:
        return max(self.values().values())


def residuals_at(rt: RTFields) -> np.ndarray:
    """The eight vanishing conditions at one point, as absolute values."""
    U, R, T = rt.U, rt.R, rt.T
    s, z = _sz_vars(U)
    P = psi_apply

    def zpsi_over(j):
        return (z * P(j / z)).value

    return np.abs(np.array([
        zpsi_over(U.d(S)), zpsi_over(U.d(Z)), U.partial((0, 3)),
        zpsi_over(R.d(S)), zpsi_over(R.d(Z)), R.partial((0, 3)),
        zpsi_over(T), T.partial((0, 2)),
    ]))


def sample_points(model: PhiModel, count: int, seed: int) -> list:
    return sample_reduced(model.region(), count, seed)


def parallel_map(fn, items, threads: int = 1) -> list:
    """Ordered map, optionally over a thread pool."""
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(fn, items))
    return [fn(it) for it in items]


def flatness_residuals(model: PhiModel, samples, threads: int = 1) -> FlatnessResiduals:
    if model.n < 3:
        raise ValueError("Douglas operations need n >= 3")
    samples = list(samples)
    rows = parallel_map(lambda p: residuals_at(rt_fields(model, p, 3)), samples, threads)
    arr = np.array(rows)
    worst = int(np.argmax(arr.max(axis=1)))
    wp = samples[worst]
    return FlatnessResiduals(*arr.max(axis=0).tolist(), samples=len(samples),
                             worst_point={"x0": wp.x0, "r": wp.r, "s": wp.s, "z": wp.z})


# -------------------------------------------------------- coefficient fit

@dataclass(frozen=True)
class PolyCoefficients:
    f: tuple
    g: tuple
    h: tuple
    residual: float
    x0: float
    r: float
    L_residual: float = 0.0

    def as_dict(self) -> dict:
        out = {f"f{i+1}": v for i, v in enumerate(self.f)}
        out.update({f"g{i+1}": v for i, v in enumerate(self.g)})
        out.update({f"h{i+1}": v for i, v in enumerate(self.h)})
        out["residual"] = self.residual
        out["L_residual"] = self.L_residual
        return out


def stencil(r: float, z_center: float, count: int, z_half: float) -> list:
    """Two concentric rings in the (s, z) plane; ``count`` nodes in total."""
    inner = count // 2
    outer = count - inner
    out = []
    for ring, k in ((0.5, inner), (1.0, outer)):
        phase = 0.5 if ring < 1 else 0.0
        for j in range(k):
            t = 2 * math.pi * (j + phase) / k
            out.append((ring * 0.6 * r * math.cos(t), z_center + ring * z_half * math.sin(t)))
    return out


def fit_coefficients(model: PhiModel, x0: float, r: float, sz_samples: int = 16) -> PolyCoefficients:
    """Least-squares fit of U, R, T at fixed (x0, r) to the quadratic and
    linear forms a Douglas metric forces."""
    if sz_samples < 12:
        raise ValueError("need at least 12 (s, z) nodes")
    zc = 0.5 * min(model.z_max, 1.0)
    nodes = stencil(r, zc, sz_samples, 0.4 * min(model.z_max, 1.0))
    Uv, Rv, Tv, Lv = [], [], [], []
    for s, z in nodes:
        rt = rt_fields(model, ReducedPoint(x0, r, s, z), 0)
        Uv.append(rt.U.value)
        Rv.append(rt.R.value)
        Tv.append(rt.T.value)
        Lv.append(rt.L.value)
    S_ = np.array([n[0] for n in nodes])
    Z_ = np.array([n[1] for n in nodes])
    quad = np.column_stack([S_ ** 2 / 2, S_ * Z_, Z_ ** 2 / 2, np.ones_like(S_)])
    lin = np.column_stack([S_, Z_])
    for A in (quad, lin):
        if np.linalg.matrix_rank(A) < A.shape[1]:
            raise RankDeficientError("degenerate (s, z) stencil")
    f, *_ = np.linalg.lstsq(quad, np.array(Uv), rcond=None)
    g, *_ = np.linalg.lstsq(quad, np.array(Rv), rcond=None)
    h, *_ = np.linalg.lstsq(lin, np.array(Tv), rcond=None)
    res = max(np.max(np.abs(quad @ f - Uv)), np.max(np.abs(quad @ g - Rv)),
              np.max(np.abs(lin @ h - Tv)))
    Lfit = quad @ g + Z_ * (lin @ h) - S_ * Z_ * (quad @ f)
    return PolyCoefficients(tuple(f.tolist()), tuple(g.tolist()), tuple(h.tolist()),
                            float(res), x0, r, float(np.max(np.abs(Lfit - Lv))))


# ------------------------------------------------------------- reduced PDE

def _psi_partials(model: PhiModel, p: ReducedPoint, override) -> np.ndarray:
    """(psi_x0, psi_r, psi_s, psi_z) at ``p``."""
    if override is not None:
        bind = model.bindings(p.x0, p.r, p.s, p.z)
        return np.array([ex.evaluate(ex.differentiate(override, v), bind)
                         for v in ex.COORDINATES])
    jet = phi_jet(model, p, order=2, axial=2).full(2)
    x0, r, s, z = Jet.variables(2, [p.x0, p.r, p.s, p.z])
    phi = jet
    omega = phi - s * phi.d(2) - z * phi.d(3)
    psi = (r * r - s * s).truncate(1).sqrt() * omega
    return np.array([psi.partial(m) for m in ((1, 0, 0, 0), (0, 1, 0, 0), (0, 0, 1, 0), (0, 0, 0, 1))])


def reduced_pde_at(model: PhiModel, p: ReducedPoint, psi_override=None) -> float:
    if p.r - abs(p.s) < S_MARGIN:
        raise ArithmeticError("s too close to +-r for the reduced equation")
    f = field_jets(model, p, 0)
    U, L = f["U"].value, f["L"].value
    dx, dr, ds, dz = _psi_partials(model, p, psi_override)
    return abs(p.z * dx + (p.s / p.r) * dr + (1 - 2 * (p.r ** 2 - p.s ** 2) * U) * ds - 2 * L * dz)


def reduced_pde_residual(model: PhiModel, samples, psi=None, threads: int = 1) -> float:
    """max |z psi_x0 + (s/r) psi_r + [1 - 2(r^2-s^2)U] psi_s - 2 L psi_z|.

    ``psi`` may be an expression (string or Expr) replacing the default
    sqrt(r^2 - s^2) * Omega.
    """
    if isinstance(psi, str):
        psi = ex.parse(psi)
    vals = parallel_map(lambda p: reduced_pde_at(model, p, psi), list(samples), threads)
    return float(max(vals))


# ------------------------------------------------------ projective flatness

@dataclass(frozen=True)
class ProjectiveFlatness:
    supU: float
    supL: float
    supP1: float
    supP2: float
    tol: float

    @property
    def verdict(self) -> bool:
        return max(self.supU, self.supL, self.supP1, self.supP2) < self.tol

    def as_dict(self) -> dict:
        return {"supU": self.supU, "supL": self.supL, "supP1": self.supP1,
                "supP2": self.supP2, "projectively_flat": self.verdict}


def projective_flatness(model: PhiModel, samples, tol: float = FLAT_TOL) -> ProjectiveFlatness:
    sup = np.zeros(4)
    for p in samples:
        f = field_jets(model, p, 0)
        sup = np.maximum(sup, np.abs([f["U"].value, f["L"].value, f["p1"].value, f["p2"].value]))
    return ProjectiveFlatness(*sup.tolist(), tol=tol)
