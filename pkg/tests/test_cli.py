import csv
import io
import json

import numpy as np
import pytest

from symprealize.cli import EXIT_FAIL, EXIT_OK, EXIT_OUTSIDE, EXIT_SPEC, main
from symprealize.geometry import omega_can
from symprealize.holomorphic import complex_structure_matrix


def run(argv, capsys):
    code = main(argv)
    out, err = capsys.readouterr()
    return code, out, err


def rows(text):
    table = list(csv.reader(io.StringIO(text)))
    return table[0], [dict(zip(table[0], r)) for r in table[1:]]


def block(row, label, d):
    return np.array([[float(row[f"{label}_{a + 1}_{b + 1}"]) for b in range(d)] for a in range(d)])


@pytest.fixture
def spec_file(tmp_path):
    def write(doc, name="spec.json"):
        p = tmp_path / name
        p.write_text(json.dumps(doc))
        return str(p)

    return write


def test_verify_zero_passes(capsys):
    code, out, err = run(["verify", "catalog:zero", "--points", "3"], capsys)
    assert code == EXIT_OK
    rep = json.loads(out)
    assert rep["summary"]["passed"] is True
    assert "wall_time" not in rep["summary"]
    assert "points inside U" in err


def test_verify_so3_jacobiator(capsys):
    code, out, _ = run(["verify", "catalog:so3", "--points", "4", "--no-structural", "-q"], capsys)
    assert code == EXIT_OK
    assert json.loads(out)["aggregate"]["jacobiator"]["value"] <= 1e-12


def test_verify_non_poisson_fails_with_location(spec_file, capsys):
    path = spec_file({"kind": "poisson", "dim": 3, "pi": {"1,2": "x2", "2,3": "1"}})
    code, out, err = run(["verify", path, "--points", "3"], capsys)
    assert code == EXIT_FAIL
    assert "jacobiator check failed at base point x = (" in err
    assert "realization" not in json.loads(out)["aggregate"]


def test_spec_errors_exit_2(spec_file, tmp_path, capsys):
    assert run(["verify", str(tmp_path / "nope.json")], capsys)[0] == EXIT_SPEC
    bad = spec_file({"kind": "poisson", "dim": 2, "pi": {"1,2": "x1 + q"}}, "bad.json")
    code, _, err = run(["verify", bad], capsys)
    assert code == EXIT_SPEC and "spec error" in err
    assert run(["realize", "catalog:so3", "--point", "1,2"], capsys)[0] == EXIT_SPEC
    with pytest.raises(SystemExit) as exc:
        main(["nosuchcommand"])
    assert exc.value.code == 2


def test_all_outside_exit_3(spec_file, capsys):
    path = spec_file({"kind": "poisson", "dim": 2, "pi": {"1,2": "x1^2"}})
    pt = ["--point", "1,0,0,5"]
    assert run(["verify", path, *pt], capsys)[0] == EXIT_OUTSIDE
    assert run(["realize", path, *pt], capsys)[0] == EXIT_OUTSIDE
    assert run(["spray", path, "--p0", "1,0,0,5"], capsys)[0] == EXIT_OUTSIDE


def test_reports_byte_identical(tmp_path, capsys):
    a, b = tmp_path / "a.json", tmp_path / "b.json"
    args = ["verify", "catalog:const-c2", "--seed", "7", "--points", "3", "-q"]
    assert main(args + ["-o", str(a)]) == EXIT_OK
    assert main(args + ["-o", str(b)]) == EXIT_OK
    assert a.read_bytes() == b.read_bytes()
    capsys.readouterr()


def test_realize_zero_rows(capsys):
    code, out, _ = run(["realize", "catalog:zero-1", "--point", "0.1,0.2,0.3,0.4", "-q"], capsys)
    assert code == EXIT_OK
    header, table = rows(out)
    assert header[:4] == ["x1", "y1", "lam1", "lam2"] and header[-1] == "inside_U"
    W = omega_can(2)
    F = np.eye(4)
    F[2:, 2:] = complex_structure_matrix(1).T
    np.testing.assert_allclose(block(table[0], "omegaI", 4), W, atol=1e-12)
    np.testing.assert_allclose(block(table[0], "omegaR", 4), -F.T @ W @ F, atol=1e-12)
    J = block(table[0], "Jbar", 4)
    np.testing.assert_allclose(J @ J, -np.eye(4), atol=1e-12)


def test_realize_constant_rows(spec_file, capsys):
    path = spec_file({"kind": "poisson", "dim": 2, "pi": {"1,2": "0.6"}})
    code, out, _ = run(["realize", path, "--points", "3", "-q"], capsys)
    assert code == EXIT_OK
    _, table = rows(out)
    P = np.array([[0, 0.6], [-0.6, 0]])
    expected = np.block([[np.zeros((2, 2)), np.eye(2)], [-np.eye(2), -P]])
    for row in table:
        np.testing.assert_allclose(block(row, "omega", 4), expected, atol=1e-10)
        np.testing.assert_allclose(block(row, "Pi", 4)[:2, :2], P, atol=1e-12)


def test_realize_grid(capsys):
    code, out, _ = run(["realize", "catalog:so3", "--grid", "5", "--base", "0.2,-0.1,0.3", "-q"], capsys)
    assert code == EXIT_OK
    _, table = rows(out)
    assert len(table) <= 125 and len(table) > 0
    assert all(r["x1"] == "0.20000000000000001" for r in table)


def test_realize_pn_columns(capsys):
    code, out, _ = run(["realize", "catalog:pn-r2", "--points", "1", "-q"], capsys)
    header, _ = rows(out)
    assert code == EXIT_OK
    assert len(header) == 4 + 4 * 16 + 1


def test_spray_zero_and_constant(spec_file, capsys):
    code, out, _ = run(["spray", "catalog:zero-1", "--p0", "0.1,0.2,0.3,0.4"], capsys)
    assert code == EXIT_OK
    _, table = rows(out)
    assert len(table) == 11
    assert all([r[k] for k in ("x1", "y1", "lam1", "lam2")] == ["0.10000000000000001", "0.20000000000000001", "0.29999999999999999", "0.40000000000000002"] for r in table)
    path = spec_file({"kind": "poisson", "dim": 2, "pi": {"1,2": "2"}})
    code, out, err = run(["spray", path, "--p0", "0,0,0.3,-0.1", "--samples", "5", "--check-homogeneity", "0.5"], capsys)
    assert code == EXIT_OK
    _, table = rows(out)
    for r in table:
        t = float(r["t"])
        # x' = P lam with lam constant
        assert float(r["x1"]) == pytest.approx(2 * -0.1 * t, abs=1e-12)
        assert float(r["x2"]) == pytest.approx(-2 * 0.3 * t, abs=1e-12)
        assert float(r["lam1"]) == pytest.approx(0.3, abs=1e-14)
    res = float(err.split(":")[-1])
    assert res <= 1e-8


def test_catalog_listing(capsys):
    code, out, _ = run(["catalog"], capsys)
    assert code == EXIT_OK
    assert len(out.strip().splitlines()) >= 6
    code, out, _ = run(["catalog", "--json"], capsys)
    assert "so3" in json.loads(out)
    code, out, _ = run(["catalog", "--show", "sl2"], capsys)
    assert json.loads(out)["kind"] == "holomorphic"
    assert run(["catalog", "--show", "nope"], capsys)[0] == EXIT_SPEC


def test_jet_scheme_and_module_entry(capsys):
    code, out, _ = run(["verify", "catalog:so3", "--points", "2", "--scheme", "jet", "--no-structural", "-q"], capsys)
    assert code == EXIT_OK
    assert json.loads(out)["options"]["scheme"] == "jet"


@pytest.mark.parametrize("name", ["zero", "const-c2", "so3", "sl2", "quad-c2", "log-canonical-c2", "pn-r2"])
def test_catalog_entry_passes_verify(name, capsys):
    code, out, _ = run(["verify", f"catalog:{name}", "--points", "3", "-q"], capsys)
    assert code == EXIT_OK, json.loads(out)["summary"]["failed_checks"]
