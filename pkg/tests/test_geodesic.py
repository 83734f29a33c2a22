import numpy as np
import pytest

from cylfinsler.catalog import catalog_get
from cylfinsler.coords import ConfigPoint, TangentVector
from cylfinsler.geodesic import DomainExitError, geodesic_integrate


def test_euclidean_straight_line():
    m = catalog_get("euclidean")
    x = ConfigPoint(0.0, [0.1, 0.0, 0.0])
    y = TangentVector(0.2, [0.3, 0.1, 0.0])
    tr = geodesic_integrate(m, x, y, t_end=1.0, steps=50)
    assert np.allclose(tr.x[-1], [0.2, 0.4, 0.1, 0.0], atol=1e-14)
    assert tr.drift < 1e-14


def test_drift_small_on_douglas_example():
    m = catalog_get("ex4.6")
    x = ConfigPoint(0.1, [0.2, -0.1, 0.15])
    y = TangentVector(0.15, [0.2, 0.1, -0.1])
    tr = geodesic_integrate(m, x, y, t_end=1.0, steps=200)
    assert tr.drift < 1e-6
    assert len(tr.t) == 201


def test_trace_csv_header():
    m = catalog_get("euclidean")
    tr = geodesic_integrate(m, ConfigPoint(0, [0.1, 0, 0]), TangentVector(0.1, [0.1, 0, 0]), steps=3)
    lines = tr.to_csv().splitlines()
    assert lines[0] == "t,x0,x1,x2,x3,v0,v1,v2,v3,F"
    assert len(lines) == 5


def test_bad_arguments():
    m = catalog_get("euclidean")
    x, y = ConfigPoint(0, [0.1, 0, 0]), TangentVector(0.1, [0.1, 0, 0])
    with pytest.raises(ValueError):
        geodesic_integrate(m, x, y, steps=0)
    with pytest.raises(ValueError):
        geodesic_integrate(m, x, y, t_end=-1.0)


def test_domain_exit():
    m = catalog_get("euclidean")
    with pytest.raises(DomainExitError) as info:
        geodesic_integrate(m, ConfigPoint(0, [0.5, 0, 0]), TangentVector(0, [2.0, 0, 0]), steps=100)
    assert info.value.step > 0
