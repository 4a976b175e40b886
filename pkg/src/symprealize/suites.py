"""Sampling and per-kind verification suites driven by a :class:`ManifoldSpec`.

Every suite first runs the base-point checks that need no flow (the
Jacobiator, plus Cauchy-Riemann for holomorphic specs).  If one of them
fails, the flow stages are skipped and the report names the first offending
point.
"""

from __future__ import annotations

from typing import Sequence

import numpy as np

from .geometry import CentralDifference, JetScheme, jacobiator
from .holomorphic import split_holomorphic, verify_holomorphic
from .nijenhuis import (
    PNStructure,
    bialgebroid_morphism_check,
    coboundary_commutator_residual,
    lie_poisson_lift_residual,
    pn_compatibility,
    random_polynomial,
    trial_covectors,
    trial_vectors,
)
from .realization import (
    OutsideDomainError,
    RealizationOptions,
    RealizedForm,
    Tolerances,
    realization_bivector,
    realize_batch,
    structural_residuals,
    verify_realization,
)
from .report import VerificationReport, ordered_map
from .specfile import ManifoldSpec


def sample_points(base_dim: int, count: int, seed: int, radius: float, box: float = 1.0) -> np.ndarray:
    """Seeded cotangent points: base uniform in ``[-box, box]^m``, fiber uniform in the ``radius`` ball."""
    rng = np.random.default_rng(seed)
    x = rng.uniform(-box, box, size=(count, base_dim))
    g = rng.normal(size=(count, base_dim))
    g /= np.maximum(np.linalg.norm(g, axis=1, keepdims=True), 1e-300)
    r = radius * rng.uniform(size=(count, 1)) ** (1.0 / base_dim)
    return np.concatenate([x, g * r], axis=1)


def _jac(pi, x) -> float:
    return float(np.max(np.abs(jacobiator(pi, x)), initial=0.0))


def base_gate(spec: ManifoldSpec, points: np.ndarray, tol: Tolerances) -> tuple[VerificationReport, str | None]:
    """Jacobiator (and Cauchy-Riemann) at each base point, before any flow."""
    report = VerificationReport(kind=spec.kind, spec_hash=spec.hash)
    m = spec.chart_dim
    names = ["jacobiator"]
    if spec.kind == "holomorphic":
        names = ["cauchy_riemann", "jacobiator"]
        report.declare("cauchy_riemann", tol.cauchy_riemann)
    report.declare("jacobiator", tol.jacobiator)
    if spec.kind == "poisson-nijenhuis":
        names.append("jacobiator_N")
        report.declare("jacobiator_N", tol.jacobiator)
        pi_N = PNStructure(spec.pi, spec.N).pi_N
    if spec.kind == "holomorphic":
        pi_R, pi_I, _ = split_holomorphic(spec.holomorphic)
    failure = None
    for z in points:
        x = z[:m]
        res = {}
        if spec.kind == "holomorphic":
            cr, pair = spec.holomorphic.cauchy_riemann_residual(x)
            res["cauchy_riemann"] = cr
            res["jacobiator"] = max(_jac(pi_R, x), _jac(pi_I, x))
        else:
            res["jacobiator"] = _jac(spec.pi, x)
        if spec.kind == "poisson-nijenhuis":
            res["jacobiator_N"] = _jac(pi_N, x)
        report.add_point(z, True, res, {})
        if failure is None:
            for name in names:
                if not res[name] <= report.checks[name].tolerance:
                    coords = ", ".join(f"{v:.6g}" for v in x)
                    failure = f"{name} check failed at base point x = ({coords}): residual {res[name]:.3e}"
                    if name == "cauchy_riemann":
                        failure += f" in the coefficient of dz{pair[0] + 1}^dz{pair[1] + 1}"
                    break
    return report, failure


def _pn_point(spec: ManifoldSpec, z: np.ndarray, opts: RealizationOptions, scheme, extra: bool, seed: int):
    pi, N = spec.pi, spec.N
    n = pi.dim
    x = z[:n]
    pn = PNStructure(pi, N)
    cov = trial_covectors(n, pi.variables, count=3, seed=seed)
    vec = trial_vectors(n, pi.variables, count=3, seed=seed + 1)
    comp = pn_compatibility(pi, N, x, cov, vec)
    bia = bialgebroid_morphism_check(pi, N, cov, x)
    f = random_polynomial(pi.variables, np.random.default_rng(seed))
    res = {
        "pn": max(comp.values()),
        "bialgebroid": max(bia.values()),
        "coboundary": coboundary_commutator_residual(N, f, x),
        "lie_poisson": lie_poisson_lift_residual(N, z),
    }
    form = RealizedForm(pi, spec.conn, "omega", opts=opts)
    try:
        W = form.at(z).matrix
        tw = realize_batch(form.xi, np.stack([z, np.concatenate([x, np.zeros(n)])]), opts, ("twisted", "alongflow"), N=N)
        if not tw.success:
            raise OutsideDomainError("flow left the domain", tw.failure_time)
    except OutsideDomainError as exc:
        return False, res, {}, exc.failure_time
    WN, WP = tw.forms["twisted"][0], tw.forms["alongflow"][0]
    res["realization"] = float(np.max(np.abs(realization_bivector(W)[:n, :n] - pi.matrix(x))))
    res["realization_N"] = float(np.max(np.abs(realization_bivector(WN)[:n, :n] - pn.pi_N.matrix(x))))
    res["twisted_agreement"] = float(np.max(np.abs(WN - WP)))
    res["closedness"] = float(np.max(np.abs(form.closedness(z, scheme))))
    twisted = RealizedForm(pi, spec.conn, "twisted", N=N, opts=opts)
    fd = scheme if isinstance(scheme, CentralDifference) else CentralDifference()
    res["closedness_N"] = float(np.max(np.abs(twisted.closedness(z, fd))))
    W0 = form.at(np.concatenate([x, np.zeros(n)])).matrix
    res["lagrangian"] = max(float(np.max(np.abs(W0[:n, :n]))), float(np.max(np.abs(tw.forms["twisted"][1][:n, :n]))))
    margins = {"nondegeneracy": min(abs(float(np.linalg.det(W))), abs(float(np.linalg.det(WN))))}
    if extra:
        res.update(structural_residuals(form, z, opts))
    return True, res, margins, None


def verify_pn(
    spec: ManifoldSpec,
    points: Sequence,
    opts: RealizationOptions | None = None,
    tolerances: Tolerances | None = None,
    scheme: CentralDifference | JetScheme | None = None,
    threads: int = 1,
    extra_checks: bool = False,
) -> VerificationReport:
    """Poisson-Nijenhuis suite: compatibility, bialgebroid, lifts, both realized forms."""
    opts = opts or RealizationOptions()
    tol = tolerances or Tolerances()
    scheme = scheme or CentralDifference()
    report = VerificationReport(kind="poisson-nijenhuis", options=opts.as_dict())
    names = {
        "pn": tol.pn,
        "bialgebroid": tol.pn,
        "coboundary": tol.coboundary,
        "lie_poisson": tol.lie_poisson,
        "realization": tol.realization,
        "realization_N": tol.realization,
        "twisted_agreement": tol.twisted_agreement,
        "closedness": tol.closedness,
        "closedness_N": tol.closedness,
        "lagrangian": tol.lagrangian,
    }
    if extra_checks:
        names.update(homogeneity=tol.homogeneity, geodesic=tol.geodesic, quadrature=tol.quadrature)
    for name, t in names.items():
        report.declare(name, t)
    report.declare("nondegeneracy", tol.nondegeneracy, kind="min")
    pts = [np.asarray(p, dtype=float) for p in points]

    def task(z):
        return _pn_point(spec, z, opts, scheme, extra_checks, seed=0)

    for z, (inside, res, margins, failure) in zip(pts, ordered_map(task, pts, threads)):
        report.add_point(z, inside, res, margins, failure)
    return report


def run_suite(
    spec: ManifoldSpec,
    points: np.ndarray,
    opts: RealizationOptions | None = None,
    tolerances: Tolerances | None = None,
    scheme: CentralDifference | JetScheme | None = None,
    torsion_h: float = 1e-3,
    threads: int = 1,
    extra_checks: bool = True,
) -> VerificationReport:
    """Base gate, then the suite for the spec kind; returns one merged report."""
    opts = opts or RealizationOptions()
    tol = tolerances or Tolerances()
    points = np.atleast_2d(np.asarray(points, dtype=float))
    report, failure = base_gate(spec, points, tol)
    report.options = opts.as_dict()
    if failure is not None:
        report.notes.append(failure)
        report.notes.append("flow stages skipped")
        return report
    if spec.kind == "poisson":
        sub = verify_realization(spec.pi, spec.conn, points, opts, tol, scheme, threads, extra_checks)
    elif spec.kind == "poisson-nijenhuis":
        sub = verify_pn(spec, points, opts, tol, scheme, threads, extra_checks)
    else:
        sub = verify_holomorphic(spec.holomorphic, spec.conn, points, opts, tol, scheme, torsion_h, threads, extra_checks)
        # the holomorphic suite re-reports its own base checks; keep one copy
        for name in ("cauchy_riemann", "jacobiator"):
            sub.checks.pop(name, None)
            for rec in sub.points:
                rec.residuals.pop(name, None)
    report.merge(sub)
    return report


__all__ = ["base_gate", "run_suite", "sample_points", "verify_pn"]
