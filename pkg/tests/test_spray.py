import numpy as np
import pytest

from cylfinsler.catalog import catalog_get
from cylfinsler.coords import ConfigPoint, ReducedPoint, TangentVector, random_orthogonal, rotate, sample_full, sample_reduced
from cylfinsler.core import PhiModel
from cylfinsler.spray import (AxisError, SingularLambdaError, divergence_jet_oracle, field_jets,
                              fiber_hessian_jet, spray_coefficients, spray_divergence, spray_fields,
                              spray_oracle_pq)
from cylfinsler.core import metric_tensor


def _rel(a, b):
    a, b = np.asarray(a), np.asarray(b)
    return float(np.max(np.abs(a - b)) / max(1.0, float(np.max(np.abs(b)))))


def test_euclidean_fields_vanish():
    m = PhiModel("sqrt(1+z^2)")
    f = spray_fields(m, ReducedPoint(0.1, 0.5, 0.2, 0.7))
    assert (f.varphi, f.p1, f.p2, f.U, f.V, f.L, f.W) == (0, 0, 0, 0, 0, 0, 0)
    x, y = sample_full(m.region(), 3, 1, 0)[0]
    assert np.all(spray_coefficients(m, x, y).as_array() == 0)
    assert np.max(np.abs(spray_oracle_pq(m, x, y).as_array())) < 1e-12
    assert spray_divergence(m, x, y) == 0


def test_randers_oracle_vanishes():
    m = catalog_get("minkowski-randers")
    for x, y in sample_full(m.region(), 3, 5, 1):
        assert np.max(np.abs(spray_oracle_pq(m, x, y).as_array())) < 1e-12


def test_u_v_relations():
    m = catalog_get("ex4.1", {"k": 1})
    for p in sample_reduced(m.region(), 10, 3):
        f = field_jets(m, p, 0)
        lam = f["Lambda"].value
        p1, p2 = f["p1"].value, f["p2"].value
        lhs_u = 2 * lam * f["U"].value
        rhs_u = f["phi_zz"].value * p1 - f["phi_sz"].value * p2
        lhs_v = 2 * lam * f["V"].value
        rhs_v = f["phi_sz"].value * p1 - f["phi_ss"].value * p2
        assert lhs_u == pytest.approx(rhs_u, rel=1e-10, abs=1e-14)
        assert lhs_v == pytest.approx(rhs_v, rel=1e-10, abs=1e-14)


def test_printed_u_and_l():
    m = catalog_get("ex4.3", {"g": "exp(r^2/2)", "h": "1/2"})
    for p in sample_reduced(m.region(), 10, 4):
        assert spray_fields(m, p).U == pytest.approx(0.5, rel=1e-9)  # g'/(2rg) with g = exp(r^2/2)
    m = catalog_get("ex4.5")
    for p in sample_reduced(m.region(), 10, 5):
        # g = 1 + r^2: g'/(r g) = 2/(1 + r^2)
        want = 0.5 * p.s * p.z * 2 / (1 + p.r ** 2)
        assert spray_fields(m, p).L == pytest.approx(want, rel=1e-9, abs=1e-13)


def test_example_point_cross_oracle():
    m = catalog_get("ex4.1", {"k": 1})
    x = ConfigPoint(0, [0.3, 0.2, 0.1])
    y = TangentVector(0.4, [1, 0.5, -0.2])
    assert _rel(spray_coefficients(m, x, y).as_array(), spray_oracle_pq(m, x, y).as_array()) < 1e-8


@pytest.mark.parametrize("cid", ["ex4.1", "ex4.3", "ex4.6", "nondouglas-b"])
@pytest.mark.parametrize("n", [3, 4])
def test_cross_oracle(cid, n):
    m = catalog_get(cid, n=n)
    for x, y in sample_full(m.region(), n, 15, 21):
        G = spray_coefficients(m, x, y)
        assert _rel(G.as_array(), spray_oracle_pq(m, x, y).as_array()) < 1e-8
        assert spray_divergence(m, x, y) == pytest.approx(divergence_jet_oracle(m, x, y), rel=1e-9, abs=1e-12)


def test_homogeneity_and_structure():
    m = catalog_get("ex4.6")
    for x, y in sample_full(m.region(), 3, 10, 8):
        G = spray_coefficients(m, x, y)
        G2 = spray_coefficients(m, x, y.scaled(2.0))
        assert _rel(G2.as_array(), 4 * G.as_array()) < 1e-10
        d = spray_divergence(m, x, y)
        assert spray_divergence(m, x, y.scaled(2.0)) == pytest.approx(2 * d, rel=1e-10)
        # fiber part lies in span{ybar, xbar}
        A = np.column_stack([y.ybar, x.xbar])
        coef, *_ = np.linalg.lstsq(A, G.Gi, rcond=None)
        assert np.max(np.abs(A @ coef - G.Gi)) < 1e-12


def test_equivariance():
    m = catalog_get("ex4.1")
    for k, (x, y) in enumerate(sample_full(m.region(), 4, 10, 3)):
        O = random_orthogonal(k, 4)
        xr, yr = rotate(O, x, y)
        G, Gr = spray_coefficients(m, x, y), spray_coefficients(m, xr, yr)
        assert Gr.G0 == pytest.approx(G.G0, rel=1e-10, abs=1e-12)
        assert np.max(np.abs(Gr.Gi - O @ G.Gi)) < 1e-10


def test_exact_hessian_matches_blocks():
    m = catalog_get("ex4.3")
    for x, y in sample_full(m.region(), 3, 5, 3):
        assert np.max(np.abs(fiber_hessian_jet(m, x, y) - metric_tensor(m, x, y).g)) < 1e-12


def test_errors():
    m = PhiModel("sqrt(1+z^2)")
    with pytest.raises(AxisError):
        spray_fields(m, ReducedPoint(0, 0.0, 0.0, 1.0))
    flat = PhiModel("1 + 0*z")  # Lambda = 0 everywhere
    with pytest.raises(SingularLambdaError):
        spray_fields(flat, ReducedPoint(0, 0.5, 0.1, 1.0))
