"""Psi identities over (s, z) jets, each as a pair (lhs, rhs)."""
import numpy as np

from cylfinsler.douglas import S, Z, psi_apply as P, psi_s as Ps, psi_z as Pz, sz_jet_from_poly
from cylfinsler.taylor import Jet

ORDER = 7


def _zm(z: Jet, m: int) -> Jet:
    return z ** m if m >= 0 else 1.0 / z ** (-m)


def ladder(T: Jet) -> dict:
    s = Jet.variable(2, T.order, S, T.base[0], T.base)
    z = Jet.variable(2, T.order, Z, T.base[1], T.base)
    Ts, Tz = T.d(S), T.d(Z)
    out = {
        "psi_psi": (P(P(T)), -P(T) - s * P(Ts) - z * P(Tz)),
        "z2_psi_over_z2": (P(z * z * P(T / (z * z))), -s * z * P(Ts / z) - z * z * P(Tz / z)),
        "z2_psi_over_z": (P(z * z * P(T / z)) / z, -s * P(Ts) - z * P(Tz) - z * P(T / z)),
        "psi_of_Tz": (P(Tz), Pz(T) + Tz),
        "z_psi_z": (z * Pz(T), P(z * Tz)),
        "psi_s": (Ps(T), P(Ts) - Ts),
        "z_psi_s_over_z": (z * Ps(T / z), P(Ts)),
        "d_z_of_z_psi_over_z": ((z * P(T / z)).d(Z), P(Tz)),
        "nested_s": (P(z * z * P(Ts / z)), z * Ps(z * z * P(T / (z * z)))),
        "psi_s_nested": (Ps(z * z * P(T / (z * z))), P(z * P(Ts / z)) - z * P(Ts / z)),
    }
    for m in (-2, -1, 1, 2, 3):
        zm = _zm(z, m)
        out[f"power_shift_{m}"] = (P(zm * T) / zm, P(T) - m * T)
        out[f"power_step_{m}"] = (P(zm * T) / zm, P(_zm(z, m - 1) * T) / _zm(z, m - 1) - T)
    return out


def random_theta(rng: np.random.Generator, s0: float, z0: float) -> Jet:
    coeffs = {(a, b): float(rng.normal()) for a in range(5) for b in range(5 - a)}
    return sz_jet_from_poly(coeffs, s0, z0, ORDER)


def random_sz(rng: np.random.Generator) -> tuple:
    s = float(rng.uniform(-1, 1))
    z = float(rng.choice([-1, 1]) * rng.uniform(0.05, 1.0))
    return s, z


def worst_defects(polys: int, points: int, seed: int) -> dict:
    """Max relative defect of each identity over polys x points draws."""
    rng = np.random.default_rng(seed)
    worst: dict = {}
    coeff_sets = [{(a, b): float(rng.normal()) for a in range(5) for b in range(5 - a)}
                  for _ in range(polys)]
    pts = [random_sz(rng) for _ in range(points)]
    for c in coeff_sets:
        for s0, z0 in pts:
            for name, (lhs, rhs) in ladder(sz_jet_from_poly(c, s0, z0, ORDER)).items():
                a, b = lhs.value, rhs.value
                d = abs(a - b) / max(1.0, abs(b))
                worst[name] = max(worst.get(name, 0.0), d)
    return worst
