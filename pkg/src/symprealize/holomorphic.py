"""Holomorphic Poisson structures and their holomorphic symplectic realizations.

A holomorphic bivector ``pi = sum_{j<k} f_jk dz_j ^ dz_k`` on ``C^n`` is
given by real and imaginary parts of each ``f_jk`` in the real chart
``(x1..xn, y1..yn)``, ``z_j = x_j + i y_j``.  With
``dz_j = (d/dx_j - i d/dy_j) / 2`` it splits as ``pi = pi_R + i pi_I``.

The spray is driven by ``pi_I``.  From one flow we get

* ``w_I = int phi_t^* omega_can``;
* ``w_R = -int (J^T o phi_t)^* omega_can`` (``J`` the standard complex
  structure acting fiberwise through its transpose);
* ``Jbar = w_R^{-1} w_I`` and ``omega = (w_R - i w_I) / 4``.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .expr import Expression, as_expression, coordinate_names
from .geometry import (
    BivectorField,
    CentralDifference,
    CovectorField,
    GeometryError,
    JetScheme,
    OneOneTensorField,
    TwoFormMatrix,
    _d_from_derivative,
    fd_gradient,
    jacobiator,
    omega_can,
    torsion_tensor,
)
from .nijenhuis import (
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
    Tolerances,
    realize_batch,
    structural_residuals,
    two_form_bivector,
    RealizedForm,
)
from .spray import ConnectionCoefficients, CotangentPoint, build_spray


class CauchyRiemannError(GeometryError):
    def __init__(self, message: str, pair=None, point=None, residual: float = float("nan")):
        super().__init__(message)
        self.pair = pair
        self.point = point
        self.residual = residual


def complex_structure_matrix(n: int) -> np.ndarray:
    """``J d/dx_j = d/dy_j`` on the chart ``(x, y)``: ``[[0, -I], [I, 0]]``."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, -eye], [eye, zero]])


class HolomorphicPoissonSpec:
    """Holomorphic bivector on ``C^n`` from ``{(j, k): (re, im)}`` with ``j < k`` (0-based)."""

    def __init__(self, n: int, components: dict | None = None):
        self.n = int(n)
        self.variables = coordinate_names(self.n, holomorphic=True)
        self.components: dict[tuple[int, int], tuple[Expression, Expression]] = {}
        allowed = set(self.variables)
        for (j, k), (re, im) in (components or {}).items():
            if not (0 <= j < self.n and 0 <= k < self.n) or j == k:
                raise GeometryError(f"bad holomorphic index ({j}, {k})")
            re, im = as_expression(re), as_expression(im)
            if j > k:
                j, k, re, im = k, j, -re, -im
            for e in (re, im):
                if not e.variables <= allowed:
                    raise GeometryError(f"holomorphic coefficient uses variables outside {self.variables}")
            self.components[(j, k)] = (re, im)

    @property
    def real_dim(self) -> int:
        return 2 * self.n

    @property
    def is_zero(self) -> bool:
        return all(re.is_zero and im.is_zero for re, im in self.components.values())

    def cauchy_riemann_residual(self, point) -> tuple[float, tuple[int, int] | None]:
        """Largest violation of ``a_x = b_y``, ``a_y = -b_x`` over all coefficients."""
        from .geometry import scalar_jet

        pts = np.atleast_2d(np.asarray(point, dtype=float))
        n = self.n
        worst, where = 0.0, None
        for pair, (re, im) in self.components.items():
            ga = scalar_jet(re, pts, 1, self.variables).coeffs[1]
            gb = scalar_jet(im, pts, 1, self.variables).coeffs[1]
            r1 = np.abs(ga[:, :n] - gb[:, n:])
            r2 = np.abs(ga[:, n:] + gb[:, :n])
            r = float(max(r1.max(initial=0.0), r2.max(initial=0.0)))
            if r > worst:
                worst, where = r, pair
        return worst, where


def require_holomorphic(spec: HolomorphicPoissonSpec, points, tol: float = 1e-9) -> None:
    """Raise :class:`CauchyRiemannError` at the first point violating Cauchy-Riemann."""
    for x in np.atleast_2d(np.asarray(points, dtype=float)):
        res, pair = spec.cauchy_riemann_residual(x)
        if not res <= tol:
            j, k = pair
            raise CauchyRiemannError(
                f"coefficient of dz{j + 1}^dz{k + 1} is not holomorphic at {x.tolist()} (residual {res:.3e})",
                pair,
                x,
                res,
            )


def split_holomorphic(
    spec: HolomorphicPoissonSpec, check_points=None, tol: float = 1e-9
) -> tuple[BivectorField, BivectorField, OneOneTensorField]:
    """Real bivectors ``pi_R``, ``pi_I`` on ``R^{2n}`` and the complex structure ``J``.

    With ``check_points`` the Cauchy-Riemann equations are checked there
    first (see :func:`require_holomorphic`).

    For ``f = a + i b`` on ``dz_j ^ dz_k``::

        pi_R = (a (dx_j^dx_k - dy_j^dy_k) + b (dx_j^dy_k + dy_j^dx_k)) / 4
        pi_I = (b (dx_j^dx_k - dy_j^dy_k) - a (dx_j^dy_k + dy_j^dx_k)) / 4
    """
    if check_points is not None:
        require_holomorphic(spec, check_points, tol)
    n = spec.n
    R: dict[tuple[int, int], Expression] = {}
    I: dict[tuple[int, int], Expression] = {}

    def add(store, i, j, e):
        if e.is_zero:
            return
        if i > j:
            i, j, e = j, i, -e
        store[(i, j)] = store[(i, j)] + e if (i, j) in store else e

    for (j, k), (a, b) in spec.components.items():
        qa, qb = 0.25 * a, 0.25 * b
        xj, xk, yj, yk = j, k, n + j, n + k
        add(R, xj, xk, qa)
        add(R, yj, yk, -qa)
        add(R, xj, yk, qb)
        add(R, yj, xk, qb)
        add(I, xj, xk, qb)
        add(I, yj, yk, -qb)
        add(I, xj, yk, -qa)
        add(I, yj, xk, -qa)
    variables = spec.variables
    J = OneOneTensorField.constant(complex_structure_matrix(n), variables)
    return BivectorField(2 * n, R, variables), BivectorField(2 * n, I, variables), J


def pn_pair_residual(pi_R: BivectorField, pi_I: BivectorField, point) -> float:
    """``max |P_R - P_I J^T|`` (``pi_R_sharp = pi_I_sharp o J^T``)."""
    n = pi_R.dim // 2
    Jm = complex_structure_matrix(n)
    return float(np.max(np.abs(pi_R.matrix(point) - pi_I.matrix(point) @ Jm.T)))


@dataclass
class ComplexTwoForm:
    """``re + i im`` with both parts antisymmetric."""

    re: np.ndarray
    im: np.ndarray
    point: np.ndarray | None = None

    @property
    def matrix(self) -> np.ndarray:
        return self.re + 1j * self.im

    def type20_residual(self, Jbar: np.ndarray) -> float:
        """``max |W Jbar - i W|``, i.e. ``w(u, Jbar v) = i w(u, v)``."""
        W = self.matrix
        return float(np.max(np.abs(W @ Jbar - 1j * W)))


class HolomorphicRealization:
    """Evaluator for ``(w_R, w_I)`` on batches of cotangent points."""

    def __init__(self, spec: HolomorphicPoissonSpec, conn: ConnectionCoefficients | None = None, opts: RealizationOptions | None = None):
        self.spec = spec
        self.pi_R, self.pi_I, self.J = split_holomorphic(spec)
        m = spec.real_dim
        self.conn = conn or ConnectionCoefficients.flat_connection(m, spec.variables)
        if self.conn.dim != m:
            raise GeometryError("connection dimension must equal the real dimension 2n")
        self.xi = build_spray(self.pi_I, self.conn)
        self.Jm = complex_structure_matrix(spec.n)
        self.opts = opts or RealizationOptions()

    def forms(self, points, second: bool = False):
        res = realize_batch(self.xi, points, self.opts, ("conj", "omega"), T=self.Jm, second=second)
        if not res.success:
            raise OutsideDomainError(f"flow left the domain ({res.message})", res.failure_time)
        if second:
            return res.forms["conj"], res.forms["omega"], res.derivatives["conj"], res.derivatives["omega"]
        return res.forms["conj"], res.forms["omega"]

    def stacked(self, points) -> np.ndarray:
        WR, WI = self.forms(points)
        return np.stack([WR, WI], axis=1)

    def jbar(self, points) -> np.ndarray:
        WR, WI = self.forms(points)
        return np.linalg.solve(WR, WI)


def build_underline_forms(spec, conn, p0, opts: RealizationOptions | None = None) -> tuple[TwoFormMatrix, TwoFormMatrix]:
    """``(w_R, w_I)`` at ``p0``."""
    z = p0.as_array() if isinstance(p0, CotangentPoint) else np.asarray(p0, dtype=float)
    hr = HolomorphicRealization(spec, conn, opts)
    WR, WI = hr.forms(z[None])
    return TwoFormMatrix(WR[0], z, "omega_R"), TwoFormMatrix(WI[0], z, "omega_I")


def build_underline_J(wR, wI) -> np.ndarray:
    """``Jbar = (w_R flat)^{-1} o w_I flat``."""
    WR = np.asarray(wR, dtype=float)
    if abs(np.linalg.det(WR)) < 1e-14:
        raise GeometryError("w_R is degenerate")
    return np.linalg.solve(WR, np.asarray(wI, dtype=float))


def build_holomorphic_omega(wR, wI) -> ComplexTwoForm:
    """``omega = (w_R - i w_I) / 4``."""
    WR = np.asarray(wR, dtype=float)
    WI = np.asarray(wI, dtype=float)
    point = getattr(wR, "point", None)
    return ComplexTwoForm(0.25 * WR, -0.25 * WI, point)


def holomorphic_bivector(omega: ComplexTwoForm, Jbar: np.ndarray) -> np.ndarray:
    """Bivector of type (2,0) inverse to ``omega`` on ``T^{1,0}``.

    ``Pi = -P^{1,0} (omega + conj(omega))^{-1}`` with the projector
    ``P^{1,0} = (I - i Jbar) / 2``; the sign follows the real convention
    ``Pi = -w^{-1}``.
    """
    m = Jbar.shape[0]
    P10 = 0.5 * (np.eye(m) - 1j * Jbar)
    return -P10 @ np.linalg.inv(2.0 * omega.re)


def _torsion_residual(hr: HolomorphicRealization, z: np.ndarray, h: float) -> float:
    scheme = CentralDifference(h, True)
    Jc = hr.jbar(z[None])[0]
    dJ = fd_gradient(hr.jbar, z, scheme)  # dJ[i, j, k] = d_k Jbar^i_j
    return float(np.max(np.abs(torsion_tensor(Jc, dJ))))


def holomorphic_point_checks(
    hr: HolomorphicRealization,
    z: np.ndarray,
    scheme: CentralDifference | JetScheme,
    torsion_h: float,
    extra: bool,
) -> tuple[dict, dict]:
    m = hr.spec.real_dim
    x = z[:m]
    WR, WI = (a[0] for a in hr.forms(z[None]))
    Jbar = build_underline_J(WR, WI)
    omega = build_holomorphic_omega(WR, WI)
    Pi = holomorphic_bivector(omega, Jbar)
    PR, PI = hr.pi_R.matrix(x), hr.pi_I.matrix(x)
    res = {}
    res["realization_R"] = float(np.max(np.abs(Pi.real[:m, :m] - PR)))
    res["realization_I"] = float(np.max(np.abs(Pi.imag[:m, :m] - PI)))
    res["realization"] = max(res["realization_R"], res["realization_I"])
    res["factor4"] = max(
        float(np.max(np.abs(two_form_bivector(omega.re) - 4 * Pi.real))),
        float(np.max(np.abs(two_form_bivector(omega.im) + 4 * Pi.imag))),
    )
    res["complex_square"] = float(np.max(np.abs(Jbar @ Jbar + np.eye(2 * m))))
    res["type20"] = omega.type20_residual(Jbar)
    proj = np.concatenate([hr.Jm, np.zeros((m, m))], axis=1)
    res["projection"] = float(np.max(np.abs(Jbar[:m] - proj)))
    if isinstance(scheme, JetScheme):
        _, _, DR, DI = hr.forms(z[None], second=True)
        dR, dI = _d_from_derivative(DR[0]), _d_from_derivative(DI[0])
    else:
        D = fd_gradient(hr.stacked, z, scheme)  # (2, d, d, c)
        dR, dI = _d_from_derivative(D[0]), _d_from_derivative(D[1])
    res["closedness_R"] = float(np.max(np.abs(dR)))
    res["closedness_I"] = float(np.max(np.abs(dI)))
    res["closedness"] = max(res["closedness_R"], res["closedness_I"])
    res["torsion"] = _torsion_residual(hr, z, torsion_h)
    z0 = np.concatenate([x, np.zeros(m)])
    WR0, WI0 = (a[0] for a in hr.forms(z0[None]))
    res["lagrangian"] = max(float(np.max(np.abs(WR0[:m, :m]))), float(np.max(np.abs(WI0[:m, :m]))))
    # the real part through the generic twisted-form code path with N = J
    tw = realize_batch(hr.xi, z[None], hr.opts, ("twisted", "alongflow"), N=hr.J)
    if not tw.success:
        raise OutsideDomainError("flow left the domain", tw.failure_time)
    res["twisted_consistency"] = float(np.max(np.abs(tw.forms["twisted"][0] - WR)))
    res["twisted_agreement"] = float(np.max(np.abs(tw.forms["twisted"][0] - tw.forms["alongflow"][0])))
    res["lie_poisson"] = lie_poisson_lift_residual(hr.J, z)
    margins = {"nondegeneracy": min(abs(float(np.linalg.det(WR))), abs(float(np.linalg.det(WI))))}
    if extra:
        form = RealizedForm(hr.pi_I, hr.conn, "omega", opts=hr.opts)
        res.update(structural_residuals(form, z, hr.opts))
    return res, margins


def base_checks(spec: HolomorphicPoissonSpec, x: np.ndarray, trial_seed: int = 0) -> dict[str, float]:
    """Checks at a base point that need no flow."""
    pi_R, pi_I, J = split_holomorphic(spec)
    cr, _ = spec.cauchy_riemann_residual(x)
    out = {
        "cauchy_riemann": cr,
        "jacobiator": max(
            float(np.max(np.abs(jacobiator(pi_R, x)), initial=0.0)),
            float(np.max(np.abs(jacobiator(pi_I, x)), initial=0.0)),
        ),
        "pn_pair": pn_pair_residual(pi_R, pi_I, x),
    }
    m = spec.real_dim
    cov = trial_covectors(m, spec.variables, count=2, seed=trial_seed)
    vec = trial_vectors(m, spec.variables, count=2, seed=trial_seed + 1)
    pn = pn_compatibility(pi_I, J, x, cov, vec)
    bia = bialgebroid_morphism_check(pi_I, J, cov, x)
    out["pn"] = max(pn.values())
    out["bialgebroid"] = max(bia.values())
    rng = np.random.default_rng(trial_seed)
    f = random_polynomial(spec.variables, rng)
    out["coboundary"] = coboundary_commutator_residual(J, f, x)
    return out


def verify_holomorphic(
    spec: HolomorphicPoissonSpec,
    conn: ConnectionCoefficients | None,
    samples: Sequence,
    opts: RealizationOptions | None = None,
    tolerances: Tolerances | None = None,
    scheme: CentralDifference | JetScheme | None = None,
    torsion_h: float = 1e-3,
    threads: int = 1,
    extra_checks: bool = False,
):
    """Full holomorphic suite at the sample points (see module docstring)."""
    from .report import VerificationReport, ordered_map

    opts = opts or RealizationOptions()
    tol = tolerances or Tolerances()
    scheme = scheme or CentralDifference()
    hr = HolomorphicRealization(spec, conn, opts)
    report = VerificationReport(kind="holomorphic", options=opts.as_dict())
    base_names = {
        "cauchy_riemann": tol.cauchy_riemann,
        "jacobiator": tol.jacobiator,
        "pn_pair": tol.pn_pair,
        "pn": tol.pn,
        "bialgebroid": tol.pn,
        "coboundary": tol.coboundary,
    }
    point_names = {
        "realization": tol.realization,
        "realization_R": tol.realization,
        "realization_I": tol.realization,
        "factor4": tol.factor4,
        "complex_square": tol.complex_square,
        "type20": tol.type20,
        "projection": tol.projection,
        "closedness": tol.closedness,
        "closedness_R": tol.closedness,
        "closedness_I": tol.closedness,
        "torsion": tol.torsion,
        "lagrangian": tol.lagrangian,
        "twisted_consistency": tol.pn_pair,
        "twisted_agreement": tol.twisted_agreement,
        "lie_poisson": tol.lie_poisson,
    }
    if extra_checks:
        point_names.update(homogeneity=tol.homogeneity, geodesic=tol.geodesic, quadrature=tol.quadrature)
    for name, t in {**base_names, **point_names}.items():
        report.declare(name, t)
    report.declare("nondegeneracy", tol.nondegeneracy, kind="min")
    points = [p.as_array() if isinstance(p, CotangentPoint) else np.asarray(p, dtype=float) for p in samples]
    m = spec.real_dim

    def task(z):
        base = base_checks(spec, z[:m])
        try:
            res, margins = holomorphic_point_checks(hr, z, scheme, torsion_h, extra_checks)
        except OutsideDomainError as exc:
            return False, base, {}, exc.failure_time
        return True, {**base, **res}, margins, None

    for z, (inside, res, margins, failure) in zip(points, ordered_map(task, points, threads)):
        report.add_point(z, inside, res, margins, failure)
    return report


__all__ = [
    "CauchyRiemannError",
    "ComplexTwoForm",
    "HolomorphicPoissonSpec",
    "HolomorphicRealization",
    "base_checks",
    "build_holomorphic_omega",
    "build_underline_J",
    "build_underline_forms",
    "complex_structure_matrix",
    "holomorphic_bivector",
    "holomorphic_point_checks",
    "pn_pair_residual",
    "require_holomorphic",
    "split_holomorphic",
    "verify_holomorphic",
]
