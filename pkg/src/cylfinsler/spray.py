"""Spray coefficients G^A of F = u phi and the scalar fields they are built
from, with an independent P/Q oracle working in full coordinates."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .coords import ConfigPoint, ReducedPoint, TangentVector, reduce
from .core import PhiModel, phi_jet
from .taylor import Jet, compose

R_FLOOR = 1e-9
LAMBDA_FLOOR = 1e-14
COND_LIMIT = 1e12

S, Z = 0, 1  # variable slots of (s, z) jets


class SingularLambdaError(ArithmeticError):
    pass


class AxisError(ArithmeticError):
    """r is below the floor; the reduced formulas divide by r."""


class SingularTensorError(ArithmeticError):
    pass


@dataclass(frozen=True)
class SprayFields:
    varphi: float
    p1: float
    p2: float
    U: float
    V: float
    L: float
    W: float
    Omega: float
    Lambda: float

    def as_dict(self) -> dict:
        return dict(self.__dict__)


@dataclass(frozen=True)
class SprayCoefficients:
    G0: float
    Gi: np.ndarray

    def as_array(self) -> np.ndarray:
        return np.concatenate(([self.G0], self.Gi))


def _check_point(p: ReducedPoint):
    if p.r < R_FLOOR:
        raise AxisError(f"r = {p.r!r} below floor {R_FLOOR}")


def field_jets(model: PhiModel, p: ReducedPoint, order: int = 0) -> dict:
    """(s, z)-jets of phi, Omega, Lambda, varphi, p1, p2, U, V, L, W at ``p``.

    U, V, L, W and p1, p2 come out at ``order``; this needs phi partials up
    to total order ``order + 2``.
    """
    _check_point(p)
    K = order + 2
    jet = phi_jet(model, p, order=K, axial=1)
    base = (p.x0, p.r, p.s, p.z)
    phi = jet.sz(0, 0, K)
    phi_x = jet.sz(1, 0, K - 1)
    phi_r = jet.sz(0, 1, K - 1)
    s = Jet.variable(2, K, S, p.s, base)
    z = Jet.variable(2, K, Z, p.z, base)
    r = p.r
    ww = r * r - s * s
    phi_s, phi_z = phi.d(S), phi.d(Z)
    phi_ss, phi_sz, phi_zz = phi_s.d(S), phi_s.d(Z), phi_z.d(Z)
    omega = phi - s * phi_s - z * phi_z
    lam = omega * phi_zz + ww * (phi_ss * phi_zz - phi_sz * phi_sz)
    if abs(lam.value) < LAMBDA_FLOOR:
        raise SingularLambdaError(f"Lambda = {lam.value!r} at {p}")
    varphi = z * phi_x + (s / r) * phi_r + phi_s
    p1 = varphi.d(S) - (2.0 / r) * phi_r
    p2 = varphi.d(Z) - 2.0 * phi_x
    two_lam = 2.0 * lam
    U = (p1 * phi_zz - p2 * phi_sz) / two_lam
    V = (p1 * phi_sz - p2 * phi_ss) / two_lam
    L = (omega / two_lam) * p2 - ww * V
    W = (0.5 * varphi - s * phi * U - phi_z * L - ww * phi_s * U) / phi
    return {
        "phi": phi, "Omega": omega, "Lambda": lam, "varphi": varphi,
        "p1": p1, "p2": p2, "U": U, "V": V, "L": L, "W": W,
        "phi_s": phi_s, "phi_z": phi_z, "phi_ss": phi_ss, "phi_sz": phi_sz, "phi_zz": phi_zz,
    }


def spray_fields(model: PhiModel, p: ReducedPoint) -> SprayFields:
    f = field_jets(model, p, 0)
    return SprayFields(*(f[k].value for k in
                         ("varphi", "p1", "p2", "U", "V", "L", "W", "Omega", "Lambda")))


def spray_coefficients(model: PhiModel, x: ConfigPoint, y: TangentVector) -> SprayCoefficients:
    p = reduce(x, y)
    f = spray_fields(model, p)
    u2 = p.u * p.u
    G0 = u2 * (p.z * (f.W + p.s * f.U) + f.L)
    Gi = u2 * f.W * (y.ybar / p.u) + u2 * f.U * x.xbar
    return SprayCoefficients(G0, Gi)


def spray_divergence(model: PhiModel, x: ConfigPoint, y: TangentVector) -> float:
    """dG^A/dy^A = u {(n+2) W + 3 s U + L_z + (r^2 - s^2) U_s}."""
    p = reduce(x, y)
    f = field_jets(model, p, 1)
    U, L, W = f["U"], f["L"], f["W"]
    n = x.n
    return p.u * ((n + 2) * W.value + 3 * p.s * U.value + L.d(Z).value
                  + (p.r ** 2 - p.s ** 2) * U.d(S).value)


# ------------------------------------------------------------------ y-jets

def fiber_invariants(x: ConfigPoint, y: TangentVector, order: int) -> tuple:
    """Jets in the n+1 fiber variables y^A of (Y, u, s, z)."""
    Y = Jet.variables(order, y.as_array())
    u = sum((Yi * Yi for Yi in Y[1:]), Jet.constant(len(Y), order, 0.0)).sqrt()
    xs = sum((float(xi) * Yi for xi, Yi in zip(x.xbar, Y[1:])), Jet.constant(len(Y), order, 0.0))
    s = xs / u
    z = Y[0] / u
    return Y, u, s, z


def spray_jet(model: PhiModel, x: ConfigPoint, y: TangentVector, order: int,
              fields: dict | None = None) -> list:
    """G^A as jets in the fiber variables, to the given order."""
    p = reduce(x, y)
    if fields is None:
        fields = field_jets(model, p, order)
    Y, u, s, z = fiber_invariants(x, y, order)
    sz = [s, z]
    U = compose(fields["U"].truncate(order), sz)
    W = compose(fields["W"].truncate(order), sz)
    L = compose(fields["L"].truncate(order), sz)
    u2 = u * u
    G = [u2 * (z * (W + s * U) + L)]
    for i in range(x.n):
        G.append(u * W * Y[i + 1] + float(x.xbar[i]) * u2 * U)
    return G


def divergence_jet_oracle(model: PhiModel, x: ConfigPoint, y: TangentVector) -> float:
    G = spray_jet(model, x, y, 1)
    return float(sum(G[A].d(A).value for A in range(len(G))))


# ------------------------------------------------------------- P/Q oracle

def finsler_full_jet(model: PhiModel, x: ConfigPoint, y: TangentVector, order: int = 2) -> Jet:
    """F as a jet in the 2(n+1) variables (x^0..x^n, y^0..y^n).

    phi enters through its reduced partials; r, s, z, u are differentiated
    exactly in full coordinates.
    """
    p = reduce(x, y)
    _check_point(p)
    m = x.n + 1
    V = Jet.variables(order, np.concatenate((x.as_array(), y.as_array())))
    X, Y = V[:m], V[m:]
    zero = Jet.constant(2 * m, order, 0.0)
    r = sum((Xi * Xi for Xi in X[1:]), zero).sqrt()
    u = sum((Yi * Yi for Yi in Y[1:]), zero).sqrt()
    s = sum((Xi * Yi for Xi, Yi in zip(X[1:], Y[1:])), zero) / u
    z = Y[0] / u
    jet = phi_jet(model, p, order=order, axial=order)
    phi = compose(jet.full(order), [X[0], r, s, z])
    return u * phi


def spray_oracle_pq(model: PhiModel, x: ConfigPoint, y: TangentVector) -> SprayCoefficients:
    """G^A = P y^A + Q^A with P = F_{x^C} y^C / (2F) and
    Q^A = (F/2) g^{AB} (F_{x^C y^B} y^C - F_{x^B})."""
    m = x.n + 1
    F = finsler_full_jet(model, x, y, 2)
    F2 = F * F
    yv = y.as_array()
    Fv = F.value
    nv = 2 * m

    def unit(*idx):
        mono = [0] * nv
        for k in idx:
            mono[k] += 1
        return mono

    Fx = np.array([F.partial(unit(C)) for C in range(m)])
    Fxy = np.array([[F.partial(unit(C, m + B)) for B in range(m)] for C in range(m)])
    g = 0.5 * np.array([[F2.partial(unit(m + A, m + B)) for B in range(m)] for A in range(m)])
    cond = np.linalg.cond(g)
    if not np.isfinite(cond) or cond > COND_LIMIT:
        raise SingularTensorError(f"fundamental tensor condition number {cond:.3g}")
    P = Fx @ yv / (2 * Fv)
    rhs = Fxy.T @ yv - Fx
    Q = 0.5 * Fv * np.linalg.solve(g, rhs)
    G = P * yv + Q
    return SprayCoefficients(float(G[0]), G[1:])


def fiber_hessian_jet(model: PhiModel, x: ConfigPoint, y: TangentVector) -> np.ndarray:
    """Exact g_AB = (1/2)[F^2]_{y^A y^B} through full-coordinate jets."""
    m = x.n + 1
    F = finsler_full_jet(model, x, y, 2)
    F2 = F * F
    g = np.empty((m, m))
    for A in range(m):
        for B in range(m):
            mono = [0] * (2 * m)
            mono[m + A] += 1
            mono[m + B] += 1
            g[A, B] = 0.5 * F2.partial(mono)
    return g
