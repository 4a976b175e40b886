"""Realized two-forms by quadrature of flow pullbacks.

For a spray flow ``phi_t`` the realized form at ``p`` is::

    w(u, v) = int_0^1 (phi_t^* omega_can)(u, v) dt

evaluated with Gauss-Legendre nodes on ``[0, 1]``.  A single adaptive pass
integrates the flow and its Jacobian through all nodes.  Every integrand is
``J_t^T M(z_t) J_t`` for a middle matrix ``M`` depending on the variant:

``omega``
    ``M = omega_can``.
``twisted``
    ``M = F^T omega_can F`` with ``F`` the Jacobian of the fiber map
    ``(x, l) -> (x, N(x)^{-T} l)`` at the flowed point.
``alongflow``
    ``M = (N^c)^{-T} omega_can`` at the flowed point, i.e. the pullback of
    ``omega_can((N^c)^{-1} ., .)``.
``conj``
    ``M = -(T^* omega_can)`` for a constant fiber map ``l -> T^T l``
    (used for the real part of the holomorphic form with ``T = J``).
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace
from typing import Iterable, Sequence

import numpy as np

from .geometry import (
    BivectorField,
    CentralDifference,
    GeometryError,
    JetScheme,
    OneOneTensorField,
    TwoFormMatrix,
    exterior_derivative_2form,
    omega_can,
)
from .nijenhuis import complete_lift, fiber_map_jacobian
from .ode import SolverOptions
from .spray import ConnectionCoefficients, CotangentPoint, PoissonSpray, build_spray, flow_batch


class OutsideDomainError(GeometryError):
    """The spray flow did not reach ``t = 1`` from the requested point."""

    def __init__(self, message: str, failure_time: float | None = None):
        super().__init__(message)
        self.failure_time = failure_time


class NondegeneracyError(GeometryError):
    pass


@dataclass(frozen=True)
class QuadratureRule:
    """Quadrature nodes and weights on ``[0, 1]``."""

    nodes: np.ndarray
    weights: np.ndarray

    @classmethod
    def gauss_legendre(cls, count: int = 16) -> "QuadratureRule":
        if count < 1:
            raise ValueError("need at least one node")
        t, w = np.polynomial.legendre.leggauss(count)
        return cls((t + 1.0) / 2.0, w / 2.0)

    @property
    def count(self) -> int:
        return len(self.nodes)

    def integrate(self, f) -> float:
        return float(sum(w * f(t) for t, w in zip(self.nodes, self.weights)))


@dataclass(frozen=True)
class RealizationOptions:
    """Quadrature and ODE settings for realized forms."""

    quad_nodes: int = 16
    rtol: float = 1e-10
    atol: float = 1e-12
    min_step: float = 1e-10
    max_steps: int = 200_000
    det_floor: float = 1e-12

    @property
    def solver(self) -> SolverOptions:
        return SolverOptions(rtol=self.rtol, atol=self.atol, min_step=self.min_step, max_steps=self.max_steps)

    @property
    def quadrature(self) -> QuadratureRule:
        return QuadratureRule.gauss_legendre(self.quad_nodes)

    def with_(self, **kw) -> "RealizationOptions":
        return replace(self, **kw)

    def as_dict(self) -> dict:
        return {
            "quad_nodes": self.quad_nodes,
            "rtol": self.rtol,
            "atol": self.atol,
            "min_step": self.min_step,
            "max_steps": self.max_steps,
        }


KINDS = ("omega", "twisted", "alongflow", "conj")
_CONSTANT_MIDDLE = ("omega", "conj")


def _conj_middle(T: np.ndarray) -> np.ndarray:
    # -(F^T Omega F) with F = diag(I, T^T)
    m = T.shape[0]
    F = np.zeros((2 * m, 2 * m))
    F[:m, :m] = np.eye(m)
    F[m:, m:] = T.T
    return -(F.T @ omega_can(m) @ F)


@dataclass
class RealizationBatch:
    success: bool
    forms: dict[str, np.ndarray]  # kind -> (B, 2n, 2n)
    derivatives: dict[str, np.ndarray] = field(default_factory=dict)  # kind -> (B, 2n, 2n, 2n)
    steps: int = 0
    failure_time: float | None = None
    message: str = ""


def realize_batch(
    xi: PoissonSpray,
    points,
    opts: RealizationOptions | None = None,
    kinds: Iterable[str] = ("omega",),
    N: OneOneTensorField | None = None,
    T: np.ndarray | None = None,
    second: bool = False,
) -> RealizationBatch:
    """Realized forms of several kinds at a batch of points ``(B, 2n)``.

    With ``second`` the derivative ``D[..., a, b, c] = d_c w_ab`` is returned
    for the kinds whose middle matrix is constant.
    """
    opts = opts or RealizationOptions()
    kinds = tuple(kinds)
    for k in kinds:
        if k not in KINDS:
            raise ValueError(f"unknown realized-form kind {k!r}")
    if any(k in ("twisted", "alongflow") for k in kinds) and N is None:
        raise ValueError("twisted forms need a (1,1)-tensor N")
    if "conj" in kinds and T is None:
        raise ValueError("conj form needs a constant fiber map T")
    Z = np.atleast_2d(np.asarray(points, dtype=float))
    B, d = Z.shape
    n = d // 2
    quad = opts.quadrature
    bf = flow_batch(xi, Z, quad.nodes, opts.solver, 2 if second else 1)
    if not bf.success:
        return RealizationBatch(False, {}, steps=bf.steps, failure_time=bf.failure_time, message=bf.message)
    Om = omega_can(n)
    middles_const = {"omega": Om}
    if "conj" in kinds:
        middles_const["conj"] = _conj_middle(np.asarray(T, dtype=float))
    forms = {k: np.zeros((B, d, d)) for k in kinds}
    derivs = {k: np.zeros((B, d, d, d)) for k in kinds if second and k in _CONSTANT_MIDDLE}
    for q, w in enumerate(quad.weights):
        Jt = bf.jacobian[q]
        zt = bf.z[q]
        for k in kinds:
            if k in _CONSTANT_MIDDLE:
                M = middles_const[k]
                MJ = np.einsum("de,...eb->...db", M, Jt)
                forms[k] += w * np.einsum("...da,...db->...ab", Jt, MJ)
                if second:
                    K = bf.second[q]
                    t1 = np.einsum("...dac,...db->...abc", K, MJ)
                    t2 = np.einsum("...da,de,...ebc->...abc", Jt, M, K)
                    derivs[k] += w * (t1 + t2)
                continue
            if k == "twisted":
                F = fiber_map_jacobian(N, zt, inverse=True)
                M = np.swapaxes(F, -1, -2) @ Om @ F
            else:
                Nc = complete_lift(N, zt)
                M = np.swapaxes(np.linalg.inv(Nc), -1, -2) @ Om
            forms[k] += w * (np.swapaxes(Jt, -1, -2) @ M @ Jt)
    for k in forms:
        forms[k] = 0.5 * (forms[k] - np.swapaxes(forms[k], -1, -2))
    for k in derivs:
        derivs[k] = 0.5 * (derivs[k] - np.swapaxes(derivs[k], -2, -3))
    return RealizationBatch(True, forms, derivs, bf.steps)


class RealizedForm:
    """Evaluator for one realized form ``p -> w(p)``.

    Calling with an ``(S, 2n)`` array gives ``(S, 2n, 2n)`` matrices (rows
    outside the flow domain are ``nan``); :meth:`at` returns a
    :class:`TwoFormMatrix` and caches single-point results.  Instances are
    independent, so concurrent use of separate instances is safe.
    """

    def __init__(
        self,
        pi: BivectorField,
        conn: ConnectionCoefficients | None = None,
        kind: str = "omega",
        N: OneOneTensorField | None = None,
        T: np.ndarray | None = None,
        opts: RealizationOptions | None = None,
    ):
        if kind not in KINDS:
            raise ValueError(f"unknown realized-form kind {kind!r}")
        conn = conn or ConnectionCoefficients.flat_connection(pi.dim, pi.variables)
        self.xi = build_spray(pi, conn)
        self.kind = kind
        self.N = N
        self.T = None if T is None else np.asarray(T, dtype=float)
        self.opts = opts or RealizationOptions()
        self._cache: dict[bytes, np.ndarray] = {}

    @property
    def dim(self) -> int:
        return self.xi.dim

    def _batch(self, pts: np.ndarray, second: bool = False) -> RealizationBatch:
        return realize_batch(self.xi, pts, self.opts, (self.kind,), self.N, self.T, second)

    def __call__(self, points) -> np.ndarray:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        res = self._batch(pts)
        if res.success:
            return res.forms[self.kind]
        # fall back to per-point evaluation to locate failures
        out = np.full((pts.shape[0], self.dim, self.dim), np.nan)
        for i, p in enumerate(pts):
            r = self._batch(p[None])
            if r.success:
                out[i] = r.forms[self.kind][0]
        return out

    def at(self, p) -> TwoFormMatrix:
        z = p.as_array() if isinstance(p, CotangentPoint) else np.asarray(p, dtype=float)
        key = z.tobytes()
        if key not in self._cache:
            res = self._batch(z[None])
            if not res.success:
                raise OutsideDomainError(
                    f"flow left the domain at t={res.failure_time} ({res.message})", res.failure_time
                )
            self._cache[key] = res.forms[self.kind][0]
        return TwoFormMatrix(self._cache[key].copy(), z, self.kind)

    @property
    def supports_jet(self) -> bool:
        return self.kind in _CONSTANT_MIDDLE

    def derivative(self, p) -> np.ndarray:
        """``D[a, b, c] = d_c w_ab`` via the second variational equation."""
        if not self.supports_jet:
            raise GeometryError(f"jet derivative not available for the {self.kind!r} form")
        z = p.as_array() if isinstance(p, CotangentPoint) else np.asarray(p, dtype=float)
        res = self._batch(z[None], second=True)
        if not res.success:
            raise OutsideDomainError("flow left the domain", res.failure_time)
        return res.derivatives[self.kind][0]

    def closedness(self, p, scheme: CentralDifference | JetScheme | None = None) -> np.ndarray:
        z = p.as_array() if isinstance(p, CotangentPoint) else np.asarray(p, dtype=float)
        return exterior_derivative_2form(self, z, scheme)


def realized_two_form(
    pi: BivectorField,
    conn: ConnectionCoefficients | None,
    p0,
    opts: RealizationOptions | None = None,
) -> TwoFormMatrix:
    """``int_0^1 phi_t^* omega_can dt`` at ``p0``."""
    return RealizedForm(pi, conn, "omega", opts=opts).at(p0)


def _check_N(N: OneOneTensorField, x: np.ndarray, floor: float) -> None:
    det = np.linalg.det(N.matrix(x))
    if abs(det) <= floor:
        raise NondegeneracyError(f"N is singular at the base point (det = {det:.3e})")


def realized_two_form_twisted(
    pi: BivectorField,
    conn: ConnectionCoefficients | None,
    N: OneOneTensorField,
    p0,
    opts: RealizationOptions | None = None,
    variant: str = "pullback",
) -> TwoFormMatrix:
    """Twisted realized form ``int_0^1 ((N^T)^{-1} o phi_t)^* omega_can dt``.

    ``variant="alongflow"`` evaluates the alternative integrand
    ``phi_t^* [omega_can((N^c)^{-1} ., .)]`` instead.
    """
    opts = opts or RealizationOptions()
    kind = {"pullback": "twisted", "alongflow": "alongflow"}.get(variant)
    if kind is None:
        raise ValueError("variant must be 'pullback' or 'alongflow'")
    z = p0.as_array() if isinstance(p0, CotangentPoint) else np.asarray(p0, dtype=float)
    _check_N(N, z[: N.dim], opts.det_floor)
    try:
        return RealizedForm(pi, conn, kind, N=N, opts=opts).at(z)
    except np.linalg.LinAlgError as exc:
        raise NondegeneracyError("N became singular along the flow") from exc


def two_form_bivector(w, floor: float = 1e-12) -> np.ndarray:
    """Bivector of a symplectic matrix: ``-w^{-1}``.

    The sign is the Hamiltonian convention ``iota_{X_f} w = df`` with
    ``X_f = Pi_sharp df`` and ``(w_flat v)_a = w_ab v^b``; with it the
    canonical form gives ``{x^i, l_j} = delta^i_j`` and realized forms
    project to the original bivector.
    """
    W = np.asarray(w, dtype=float)
    scale = max(1.0, float(np.max(np.abs(W))))
    det = np.linalg.det(W)
    if not np.isfinite(det) or abs(det) <= floor * scale ** W.shape[0]:
        raise NondegeneracyError(f"two-form is degenerate (det = {det:.3e})")
    inv = np.linalg.inv(W)
    return -0.5 * (inv - inv.T)


def realization_bivector(w, floor: float = 1e-12) -> np.ndarray:
    """``Pi`` at the point, inverse to the realized form (see :func:`two_form_bivector`)."""
    return two_form_bivector(w, floor)


@dataclass(frozen=True)
class Tolerances:
    """Pass thresholds used by the verification suites."""

    realization: float = 1e-7
    closedness: float = 1e-5
    lagrangian: float = 1e-9
    nondegeneracy: float = 1e-3
    jacobiator: float = 1e-9
    cauchy_riemann: float = 1e-9
    complex_square: float = 1e-8
    torsion: float = 1e-5
    factor4: float = 1e-7
    type20: float = 1e-8
    projection: float = 1e-7
    pn_pair: float = 1e-9
    twisted_agreement: float = 1e-7
    pn: float = 1e-8
    lie_poisson: float = 1e-8
    coboundary: float = 1e-7
    homogeneity: float = 1e-7
    geodesic: float = 1e-8
    quadrature: float = 1e-9

    def as_dict(self) -> dict:
        return dict(self.__dict__)


def _fd_or_jet(form: RealizedForm, z: np.ndarray, scheme) -> float:
    dw = exterior_derivative_2form(form, z, scheme)
    return float(np.max(np.abs(dw), initial=0.0))


def verify_realization(
    pi: BivectorField,
    conn: ConnectionCoefficients | None,
    sample: Sequence,
    opts: RealizationOptions | None = None,
    tolerances: Tolerances | None = None,
    scheme: CentralDifference | JetScheme | None = None,
    threads: int = 1,
    extra_checks: bool = False,
):
    """Per-point realization suite for a Poisson bivector.

    Residuals per point: ``realization`` (x-x block of the realization
    bivector minus ``pi``), ``closedness`` (``d w``), ``lagrangian`` (x-x
    block of ``w`` at ``(x, 0)``) and the margin ``nondegeneracy`` (``|det w|``).
    With ``extra_checks``: ``homogeneity``, ``geodesic``, ``quadrature``.
    """
    from .report import VerificationReport, ordered_map

    opts = opts or RealizationOptions()
    tol = tolerances or Tolerances()
    conn = conn or ConnectionCoefficients.flat_connection(pi.dim, pi.variables)
    scheme = scheme or CentralDifference()
    report = VerificationReport(kind="poisson", options=opts.as_dict())
    for name in ("realization", "closedness", "lagrangian"):
        report.declare(name, getattr(tol, name))
    report.declare("nondegeneracy", tol.nondegeneracy, kind="min")
    if extra_checks:
        for name in ("homogeneity", "geodesic", "quadrature"):
            report.declare(name, getattr(tol, name))
    points = [p.as_array() if isinstance(p, CotangentPoint) else np.asarray(p, dtype=float) for p in sample]

    def task(z):
        return _realization_point(pi, conn, z, opts, scheme, extra_checks)

    for z, (inside, residuals, margins, failure) in zip(points, ordered_map(task, points, threads)):
        report.add_point(z, inside, residuals, margins, failure)
    return report


def _realization_point(pi, conn, z, opts, scheme, extra):
    n = pi.dim
    form = RealizedForm(pi, conn, "omega", opts=opts)
    try:
        W = form.at(z).matrix
    except OutsideDomainError as exc:
        return False, {}, {}, exc.failure_time
    Pi = realization_bivector(W)
    x = z[:n]
    residuals = {"realization": float(np.max(np.abs(Pi[:n, :n] - pi.matrix(x))))}
    residuals["closedness"] = _fd_or_jet(form, z, scheme)
    W0 = form.at(np.concatenate([x, np.zeros(n)])).matrix
    residuals["lagrangian"] = float(np.max(np.abs(W0[:n, :n])))
    margins = {"nondegeneracy": abs(float(np.linalg.det(W)))}
    if extra:
        residuals.update(structural_residuals(form, z, opts))
    return True, residuals, margins, None


def structural_residuals(form: RealizedForm, z: np.ndarray, opts: RealizationOptions) -> dict[str, float]:
    """Homogeneity, A-geodesic and quadrature self-convergence at ``z``."""
    from .spray import geodesic_residuals, homogeneity_residual

    xi = form.xi
    solver = opts.solver
    hom = max(
        homogeneity_residual(xi, z, 0.25, 1.0, solver),
        homogeneity_residual(xi, z, 0.5, 1.0, solver),
        homogeneity_residual(xi, z, 2.0, 0.5, solver),
    )
    geo = geodesic_residuals(xi, z, opts=solver)
    fine = RealizedForm(form.xi.pi, form.xi.conn, form.kind, form.N, form.T, opts.with_(quad_nodes=2 * opts.quad_nodes))
    quad = float(np.max(np.abs(fine.at(z).matrix - form.at(z).matrix)))
    return {"homogeneity": hom, "geodesic": max(geo["path"], geo["geodesic"]), "quadrature": quad}


__all__ = [
    "KINDS",
    "NondegeneracyError",
    "OutsideDomainError",
    "QuadratureRule",
    "RealizationBatch",
    "RealizationOptions",
    "RealizedForm",
    "Tolerances",
    "realization_bivector",
    "realize_batch",
    "realized_two_form",
    "realized_two_form_twisted",
    "structural_residuals",
    "two_form_bivector",
    "verify_realization",
]
