import json

import numpy as np
import pytest

from symprealize.specfile import CATALOG, SpecError, build_spec, catalog_document, catalog_names, load_spec


def test_catalog_has_required_entries():
    names = catalog_names()
    for required in ("zero", "const-c2", "so3", "sl2", "quad-c2", "log-canonical-c2"):
        assert required in names
    assert len(names) >= 6
    assert catalog_document("zero-5")["dim"] == 5


@pytest.mark.parametrize("name", list(CATALOG))
def test_catalog_entries_build(name):
    spec = load_spec("catalog:" + name)
    assert spec.kind == CATALOG[name]["kind"]
    assert len(spec.hash) == 64


def test_so3_fields():
    spec = load_spec("catalog:so3")
    np.testing.assert_array_equal(spec.pi.matrix([1.0, 2.0, 3.0]), [[0, 3, -2], [-3, 0, 1], [2, -1, 0]])
    assert spec.conn.flat


def test_holomorphic_spec_uses_real_chart():
    spec = load_spec("catalog:sl2")
    assert spec.chart_dim == 6
    assert spec.variables == ("x1", "x2", "x3", "y1", "y2", "y3")
    assert spec.holomorphic.n == 3


def test_file_roundtrip_and_hash(tmp_path):
    doc = catalog_document("pn-r2")
    p = tmp_path / "pn.json"
    p.write_text(json.dumps(doc))
    a = load_spec(str(p))
    b = load_spec("catalog:pn-r2")
    assert a.hash == b.hash
    assert a.N.matrix([0.0, 1.0])[0, 0] == pytest.approx(1.2)


def test_connection_parsing():
    spec = build_spec({"kind": "poisson", "dim": 2, "pi": {"1,2": "1"}, "connection": {"1,1,2": "x2"}})
    assert not spec.conn.flat
    assert str(spec.conn.component(0, 0, 1)) == "x2"


@pytest.mark.parametrize(
    "doc",
    [
        [],
        {"kind": "other", "dim": 2},
        {"kind": "poisson", "dim": 0},
        {"kind": "poisson", "dim": 2, "pi": {"1,3": "1"}},
        {"kind": "poisson", "dim": 2, "pi": {"2,1": "1"}},
        {"kind": "poisson", "dim": 2, "pi": {"1,2": "x3"}},
        {"kind": "poisson", "dim": 2, "pi": {"1,2": "x1 +"}},
        {"kind": "poisson", "dim": 2, "pi": {"1,2": "w1"}},
        {"kind": "poisson", "dim": 2, "pi": {"1,2": "1"}, "connection": "curved"},
        {"kind": "poisson", "dim": 2, "pi": {"1,2": "1"}, "connection": {"1,2": "1"}},
        {"kind": "poisson", "dim": 2, "pi": {"1,2": "1"}, "N": [["1"]]},
        {"kind": "poisson-nijenhuis", "dim": 2, "pi": {"1,2": "1"}},
        {"kind": "poisson-nijenhuis", "dim": 2, "pi": {"1,2": "1"}, "N": [["1", "0"]]},
        {"kind": "holomorphic", "dim": 2, "pi": {"1,2": "1"}},
        {"kind": "holomorphic", "dim": 2, "pi": {"1,2": {"re": "z1"}}},
        {"kind": "poisson", "dim": 2, "extra": 1},
    ],
)
def test_bad_specs(doc):
    with pytest.raises(SpecError):
        build_spec(doc)


def test_bad_sources(tmp_path):
    with pytest.raises(SpecError):
        load_spec(str(tmp_path / "missing.json"))
    bad = tmp_path / "bad.json"
    bad.write_text("{not json")
    with pytest.raises(SpecError):
        load_spec(str(bad))
    with pytest.raises(SpecError):
        load_spec("catalog:nope")
