import numpy as np

from symprealize.realization import RealizationOptions
from symprealize.specfile import build_spec, load_spec
from symprealize.suites import base_gate, run_suite, sample_points, verify_pn


def test_sampling_is_seeded_and_bounded():
    a = sample_points(3, 50, 7, 0.25)
    b = sample_points(3, 50, 7, 0.25)
    np.testing.assert_array_equal(a, b)
    assert np.all(np.abs(a[:, :3]) <= 1)
    assert np.all(np.linalg.norm(a[:, 3:], axis=1) <= 0.25)
    assert not np.array_equal(a, sample_points(3, 50, 8, 0.25))


def test_pn_suite_passes_on_catalog():
    spec = load_spec("catalog:pn-r2")
    rep = verify_pn(spec, sample_points(2, 5, 0, 0.25), extra_checks=True)
    assert rep.passed, rep.failed_checks()
    assert rep.max("twisted_agreement") <= 1e-7
    assert rep.max("realization_N") <= 1e-7


def test_incompatible_pn_pair_fails():
    spec = build_spec({"kind": "poisson-nijenhuis", "dim": 2, "pi": {"1,2": "1"}, "N": [["1", "0"], ["0", "2"]]})
    rep = verify_pn(spec, sample_points(2, 2, 0, 0.2))
    assert "pn" in rep.failed_checks()


def test_gate_locates_non_poisson_point():
    spec = build_spec({"kind": "poisson", "dim": 3, "pi": {"1,2": "x2", "2,3": "1"}})
    pts = sample_points(3, 4, 1, 0.2)
    rep, failure = base_gate(spec, pts, __import__("symprealize").Tolerances())
    assert failure is not None and "jacobiator" in failure
    full = run_suite(spec, pts)
    assert not full.passed
    assert "realization" not in full.checks
    assert any("skipped" in note for note in full.notes)


def test_gate_reports_cauchy_riemann_pair():
    spec = build_spec({"kind": "holomorphic", "dim": 2, "pi": {"1,2": {"re": "x1", "im": "0"}}})
    rep = run_suite(spec, sample_points(4, 2, 0, 0.2))
    assert "cauchy_riemann" in rep.failed_checks()
    assert "dz1^dz2" in rep.notes[0]


def test_threads_do_not_change_results():
    spec = load_spec("catalog:so3")
    pts = sample_points(3, 4, 2, 0.25)
    one = run_suite(spec, pts, RealizationOptions(), threads=1, extra_checks=False)
    four = run_suite(spec, pts, RealizationOptions(), threads=4, extra_checks=False)
    assert one.to_json() == four.to_json()
