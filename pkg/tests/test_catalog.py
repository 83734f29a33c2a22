import pytest

from cylfinsler.catalog import (UnknownEntryError, catalog_get, catalog_ids, catalog_verify,
                                printed_fields, printed_psi)
from cylfinsler.core import ModelError, validity_scan

DOUGLAS = ["euclidean", "minkowski-randers", "ex4.1", "ex4.2", "ex4.3", "ex4.4", "ex4.5", "ex4.6"]


def test_ids():
    ids = catalog_ids()
    assert set(DOUGLAS) | {"nondouglas-a", "nondouglas-b"} == set(ids)
    with pytest.raises(UnknownEntryError):
        catalog_get("ex9.9")


def test_slot_constraints():
    with pytest.raises(ModelError):
        catalog_get("ex4.1", {"k": 3})
    loose = catalog_get("ex4.1", {"k": 3}, strict=False)
    assert not validity_scan(loose).valid
    with pytest.raises(ModelError):
        catalog_get("ex4.3", {"h": "-1"})
    with pytest.raises(ModelError):
        catalog_get("ex4.1", {"q": 1})


def test_slot_substitution():
    m = catalog_get("ex4.3", {"g": "exp(r^2/2)", "h": "exp(x0)"})
    assert m.params == {}
    assert "exp" in str(m.phi)
    assert catalog_get("ex4.6", n=4).n == 4


def test_printed_material():
    assert set(printed_fields("ex4.6")) == {"U", "R", "T"}
    assert printed_psi("ex4.5") is not None
    assert printed_psi("euclidean") is None


@pytest.mark.parametrize("cid", catalog_ids())
def test_verify_entry(cid):
    rep = catalog_verify(cid, seed=3, samples=8)
    failing = [c.name for c in rep.checks if not c.passed]
    assert rep.passed, failing
    if cid in DOUGLAS:
        assert rep.check("douglas_vanishing").value < 1e-9
    else:
        assert rep.check("douglas_vanishing").value > 1e-6


def test_ex42_discrepancy_reported():
    rep = catalog_verify("ex4.2", seed=1, samples=8)
    fields = {d["field"] for d in rep.discrepancies}
    assert "U" in fields
    d = next(d for d in rep.discrepancies if d["field"] == "U")
    assert d["computed"] == pytest.approx(-d["printed"], rel=1e-9)
    assert set(d) >= {"point", "computed", "printed", "abs_diff"}
    assert "T" in rep.matched


@pytest.mark.parametrize("cid,fields", [("ex4.1", {"U", "R", "T"}), ("ex4.3", {"U", "R", "T"}),
                                        ("ex4.4", {"U", "L"}), ("ex4.5", {"U", "L"}),
                                        ("ex4.6", {"U", "R", "T"})])
def test_printed_fields_match(cid, fields):
    rep = catalog_verify(cid, seed=2, samples=8)
    assert set(rep.matched) >= fields
    assert not rep.discrepancies


def test_report_serialisable():
    import json
    rep = catalog_verify("euclidean", seed=0, samples=4)
    json.dumps(rep.as_dict())
