"""Acceptance criteria, one test per criterion.

Each test prints a ``PASS``/``FAIL`` line (also collected into the terminal
summary) and then asserts it.  Sample points come from the seeded sampler:
10 points, seed 42, fiber radius 0.25.
"""

from functools import lru_cache

import numpy as np
import pytest

from conftest import ACCEPTANCE_LINES
from symprealize.cli import main
from symprealize.geometry import BivectorField, CentralDifference, OneOneTensorField, omega_can
from symprealize.holomorphic import build_underline_J, build_underline_forms, complex_structure_matrix
from symprealize.nijenhuis import coboundary_commutator_residual, lie_poisson_lift_residual, random_polynomial
from symprealize.realization import realization_bivector, realized_two_form
from symprealize.specfile import load_spec
from symprealize.suites import run_suite, sample_points

HOLOMORPHIC = ("const-c2", "sl2", "quad-c2", "log-canonical-c2")
SEED, COUNT, RADIUS = 42, 10, 0.25


def record(number: int, label: str, value: float, limit: float) -> None:
    ok = bool(value <= limit)
    line = f"{'PASS' if ok else 'FAIL'} criterion {number:2d}  {label}: {value:.3e} <= {limit:g}"
    ACCEPTANCE_LINES.append(line)
    print(line)
    assert ok, line


def points_for(name: str) -> np.ndarray:
    spec = load_spec("catalog:" + name)
    return sample_points(spec.chart_dim, COUNT, SEED, RADIUS)


@lru_cache(maxsize=None)
def default_report(name: str):
    rep = run_suite(load_spec("catalog:" + name), points_for(name), extra_checks=True)
    assert rep.inside_count == COUNT, f"{name}: points left the flow domain"
    return rep


@lru_cache(maxsize=None)
def fine_fd_report(name: str):
    scheme = CentralDifference(1e-3, True)
    return run_suite(load_spec("catalog:" + name), points_for(name), scheme=scheme, extra_checks=False)


def worst(reports, prefix: str) -> float:
    vals = [rep.max(c) for rep in reports for c in rep.checks if c == prefix or c.startswith(prefix + "_")]
    return max(vals)


def test_criterion_01_zero_structure_exact():
    value = 0.0
    for n in (1, 2, 3):
        spec = load_spec(f"catalog:zero-{n}")
        Om = omega_can(2 * n)
        F = np.eye(4 * n)
        F[2 * n:, 2 * n:] = complex_structure_matrix(n).T
        for z in sample_points(2 * n, COUNT, SEED, RADIUS):
            wR, wI = build_underline_forms(spec.holomorphic, spec.conn, z)
            J = build_underline_J(wR.matrix, wI.matrix)
            value = max(
                value,
                float(np.max(np.abs(wI.matrix - Om))),
                float(np.max(np.abs(wR.matrix + F.T @ Om @ F))),
                float(np.max(np.abs(J @ J + np.eye(4 * n)))),
            )
    record(1, "zero structure, complex dims 1-3 (omega, omega_R, Jbar^2)", value, 1e-12)


def test_criterion_02_constant_pi_oracle():
    rng = np.random.default_rng(SEED)
    form_err = bivector_err = 0.0
    for n in (2, 3, 4):
        P = np.round(rng.uniform(-1, 1, (n, n)), 3)
        P = P - P.T
        pi = BivectorField(n, {(i, j): repr(float(P[i, j])) for i in range(n) for j in range(i + 1, n)})
        expected = np.block([[np.zeros((n, n)), np.eye(n)], [-np.eye(n), -P]])
        for z in sample_points(n, COUNT, SEED, RADIUS):
            W = realized_two_form(pi, None, z).matrix
            form_err = max(form_err, float(np.max(np.abs(W - expected))))
            bivector_err = max(bivector_err, float(np.max(np.abs(realization_bivector(W)[:n, :n] - P))))
    record(2, "constant pi, dims 2-4, realized form vs closed form", form_err, 1e-10)
    record(2, "constant pi, dims 2-4, x-x block of the bivector", bivector_err, 1e-12)


def test_criterion_03_realization_property():
    reports = [default_report(name) for name in ("so3", "sl2", "quad-c2")]
    record(3, "x-x block of the bivector minus pi on so3, sl2, quad-c2", worst(reports, "realization"), 1e-7)


CLOSED = ("so3", "pn-r2") + HOLOMORPHIC


def test_criterion_04_closedness():
    coarse = worst([default_report(n) for n in CLOSED], "closedness")
    record(4, "closedness, default FD (h=1e-4, Richardson)", coarse, 1e-5)
    fine = worst([fine_fd_report(n) for n in CLOSED], "closedness")
    record(4, "closedness, FD h=1e-3 with Richardson", fine, 1e-7)


def test_criterion_05_lagrangian_zero_section():
    reports = [default_report(n) for n in ("so3", "pn-r2") + HOLOMORPHIC]
    record(5, "x-x blocks at the zero section", worst(reports, "lagrangian"), 1e-9)


def test_criterion_06_almost_complex_and_torsion():
    reports = [default_report(n) for n in ("const-c2", "quad-c2")]
    record(6, "Jbar^2 + Id on const-c2, quad-c2", worst(reports, "complex_square"), 1e-8)
    record(6, "FD torsion of Jbar on const-c2, quad-c2", worst(reports, "torsion"), 1e-5)


def test_criterion_07_twisted_formula_agreement():
    reports = [default_report(n) for n in ("pn-r2",) + HOLOMORPHIC]
    record(7, "pullback vs along-flow twisted forms", worst(reports, "twisted_agreement"), 1e-7)


@pytest.mark.parametrize("n", [2, 3])
def test_criterion_08_complete_lift_identity(n):
    rng = np.random.default_rng(SEED + n)
    names = tuple(f"x{i + 1}" for i in range(n))
    N = OneOneTensorField([[random_polynomial(names, rng) for _ in range(n)] for _ in range(n)], names)
    value = max(lie_poisson_lift_residual(N, z) for z in sample_points(n, COUNT, SEED, RADIUS))
    record(8, f"twisted Lie-Poisson identity, polynomial N, dim {n}", value, 1e-8)


def test_criterion_09_factor_four():
    reports = [default_report(n) for n in HOLOMORPHIC]
    record(9, "bivectors of omega_R, omega_I vs 4 Re Pi, -4 Im Pi", worst(reports, "factor4"), 1e-7)


def test_criterion_10_structural_suites(tmp_path):
    reports = [default_report(n) for n in CLOSED]
    record(10, "homogeneity identity", worst(reports, "homogeneity"), 1e-7)
    record(10, "A-geodesic residual", worst(reports, "geodesic"), 1e-8)
    record(10, "quadrature self-convergence", worst(reports, "quadrature"), 1e-9)

    rng = np.random.default_rng(SEED)
    cob = worst([default_report(n) for n in ("pn-r2",) + HOLOMORPHIC], "coboundary")
    names = ("x1", "x2", "x3")
    N = OneOneTensorField([["1 + x2", "x3", "0"], ["0", "x1^2", "1"], ["x1*x2", "0", "2"]], names)
    for z in sample_points(3, COUNT, SEED, RADIUS):
        cob = max(cob, coboundary_commutator_residual(N, random_polynomial(names, rng), z[:3]))
    record(10, "coboundary commutator with d", cob, 1e-7)

    outs = []
    for k in range(2):
        path = tmp_path / f"report{k}.json"
        assert main(["verify", "catalog:quad-c2", "--points", "3", "-q", "-o", str(path)]) == 0
        outs.append(path.read_bytes())
    record(10, "byte mismatch between repeated reports", float(outs[0] != outs[1]), 0.0)
