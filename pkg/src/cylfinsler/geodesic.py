"""Classical RK4 integration of the geodesic equation x'' = -2 G(x, x')."""
from __future__ import annotations

import csv
import io
from dataclasses import dataclass

import numpy as np

from .coords import ConfigPoint, TangentVector
from .core import PhiModel
from .spray import spray_coefficients


class DomainExitError(ArithmeticError):
    """The trajectory left the model's domain."""

    def __init__(self, message: str, step: int, state):
        super().__init__(message)
        self.step = step
        self.state = state


@dataclass
class Trace:
    t: np.ndarray
    x: np.ndarray  # (steps+1, n+1)
    v: np.ndarray
    F: np.ndarray

    @property
    def drift(self) -> float:
        """max |F(t) - F(0)| / F(0)."""
        return float(np.max(np.abs(self.F - self.F[0])) / abs(self.F[0]))

    def header(self) -> list:
        m = self.x.shape[1]
        return (["t"] + [f"x{i}" for i in range(m)] + [f"v{i}" for i in range(m)] + ["F"])

    def rows(self):
        for k in range(len(self.t)):
            yield [self.t[k], *self.x[k], *self.v[k], self.F[k]]

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        for row in self.rows():
            w.writerow([repr(float(v)) for v in row])
        return buf.getvalue()

    def as_dict(self) -> dict:
        return {"columns": self.header(), "rows": [[float(v) for v in r] for r in self.rows()],
                "F_drift": self.drift}


def _check_domain(model: PhiModel, X: np.ndarray, V: np.ndarray, step: int):
    lo, hi = model.x0_interval
    r = float(np.linalg.norm(X[1:]))
    if not (lo <= X[0] <= hi) or r >= model.rho or not np.all(np.isfinite(X)):
        raise DomainExitError(f"trajectory left the domain at step {step}", step, (X, V))
    if not np.linalg.norm(V[1:]) > 0:
        raise DomainExitError(f"|ybar| vanished at step {step}", step, (X, V))


def _accel(model: PhiModel, X: np.ndarray, V: np.ndarray) -> np.ndarray:
    G = spray_coefficients(model, ConfigPoint.from_array(X), TangentVector.from_array(V))
    return -2.0 * G.as_array()


def geodesic_integrate(model: PhiModel, x: ConfigPoint, y: TangentVector,
                       t_end: float = 1.0, steps: int = 1000) -> Trace:
    if int(steps) != steps or steps < 1:
        raise ValueError(f"steps must be a positive integer, got {steps!r}")
    if not t_end > 0:
        raise ValueError("t_end must be positive")
    steps = int(steps)
    h = t_end / steps
    if h <= np.finfo(float).eps * t_end:
        raise ValueError("step size underflow")
    m = x.n + 1
    X = np.empty((steps + 1, m))
    Vt = np.empty((steps + 1, m))
    F = np.empty(steps + 1)
    X[0], Vt[0] = x.as_array(), y.as_array()
    _check_domain(model, X[0], Vt[0], 0)
    F[0] = model.finsler(x, y)
    for k in range(steps):
        q, v = X[k], Vt[k]
        try:
            a1 = _accel(model, q, v)
            q2, v2 = q + 0.5 * h * v, v + 0.5 * h * a1
            _check_domain(model, q2, v2, k)
            a2 = _accel(model, q2, v2)
            q3, v3 = q + 0.5 * h * v2, v + 0.5 * h * a2
            _check_domain(model, q3, v3, k)
            a3 = _accel(model, q3, v3)
            q4, v4 = q + h * v3, v + h * a3
            _check_domain(model, q4, v4, k)
            a4 = _accel(model, q4, v4)
        except DomainExitError:
            raise
        except ArithmeticError as err:
            raise DomainExitError(f"spray undefined at step {k}: {err}", k, (q, v)) from err
        X[k + 1] = q + h / 6.0 * (v + 2 * v2 + 2 * v3 + v4)
        Vt[k + 1] = v + h / 6.0 * (a1 + 2 * a2 + 2 * a3 + a4)
        _check_domain(model, X[k + 1], Vt[k + 1], k + 1)
        F[k + 1] = model.finsler(ConfigPoint.from_array(X[k + 1]), TangentVector.from_array(Vt[k + 1]))
    return Trace(np.linspace(0.0, t_end, steps + 1), X, Vt, F)
