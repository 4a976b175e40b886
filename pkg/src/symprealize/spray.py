"""The cotangent Poisson spray and its flow.

For a bivector ``pi`` and an affine connection with coefficients
``Gamma^k_{ij}`` (the ``d_k`` component of ``nabla_{d_i} d_j``) the spray on
the cotangent chart ``(x, l)`` reads::

    dx^j/dt = pi^{jk}(x) l_k
    dl_i/dt = Gamma^k_{ji}(x) pi^{jm}(x) l_m l_k

The flow is integrated together with its first (and optionally second)
variational equation, which gives the flow Jacobian needed by the realized
two-forms and, for closedness checks, its derivative.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Sequence

import numpy as np

from .expr import Expression, coordinate_names
from .geometry import BivectorField, GeometryError, TensorJet, _expr_or_none, field_jet, jet_einsum
from .ode import SolverOptions, integrate


class ConnectionCoefficients:
    """Coefficients ``Gamma^k_{ij}`` stored as ``gamma[k][i][j]``.

    Torsion is allowed.  A connection with no nonzero coefficient is flat
    and short-circuits every connection term.
    """

    def __init__(self, dim: int, gamma=None, variables: Sequence[str] | None = None):
        self.dim = int(dim)
        self.variables = tuple(variables) if variables is not None else coordinate_names(self.dim)
        comps = np.full((self.dim,) * 3, None, dtype=object)
        if isinstance(gamma, dict):
            for (k, i, j), v in gamma.items():
                comps[k, i, j] = _expr_or_none(v)
        elif gamma is not None:
            arr = np.asarray(gamma, dtype=object)
            if arr.shape != (self.dim,) * 3:
                raise GeometryError(f"connection coefficients must have shape {(self.dim,) * 3}")
            for idx in np.ndindex(arr.shape):
                comps[idx] = _expr_or_none(arr[idx])
        allowed = set(self.variables)
        for e in comps.reshape(-1):
            if e is not None and not e.variables <= allowed:
                raise GeometryError(f"connection uses variables outside {self.variables}")
        self._comps = comps

    @classmethod
    def flat_connection(cls, dim: int, variables=None) -> "ConnectionCoefficients":
        return cls(dim, None, variables)

    @property
    def flat(self) -> bool:
        return all(e is None for e in self._comps.reshape(-1))

    def component(self, k: int, i: int, j: int) -> Expression | None:
        return self._comps[k, i, j]

    def components(self) -> np.ndarray:
        return self._comps.copy()

    def jet(self, points, order: int) -> TensorJet:
        return field_jet(self._comps, np.atleast_2d(points), order, self.variables)

    def __repr__(self) -> str:
        if self.flat:
            return f"ConnectionCoefficients(dim={self.dim}, flat)"
        nz = sum(e is not None for e in self._comps.reshape(-1))
        return f"ConnectionCoefficients(dim={self.dim}, nonzero={nz})"


@dataclass(frozen=True)
class CotangentPoint:
    x: np.ndarray
    lam: np.ndarray

    def __post_init__(self):
        x = np.asarray(self.x, dtype=float).reshape(-1)
        lam = np.asarray(self.lam, dtype=float).reshape(-1)
        if x.shape != lam.shape:
            raise ValueError("base and fiber coordinates must have equal length")
        if not (np.all(np.isfinite(x)) and np.all(np.isfinite(lam))):
            raise ValueError("cotangent point must be finite")
        object.__setattr__(self, "x", x)
        object.__setattr__(self, "lam", lam)

    @classmethod
    def from_array(cls, z) -> "CotangentPoint":
        z = np.asarray(z, dtype=float).reshape(-1)
        if z.size % 2:
            raise ValueError("cotangent chart has even dimension")
        n = z.size // 2
        return cls(z[:n], z[n:])

    @property
    def dim(self) -> int:
        return self.x.size

    def as_array(self) -> np.ndarray:
        return np.concatenate([self.x, self.lam])

    def scaled(self, s: float) -> "CotangentPoint":
        return CotangentPoint(self.x, s * self.lam)


@dataclass
class FlowResult:
    inside_U: bool
    steps: int
    error_estimate: float
    endpoint: CotangentPoint | None = None
    jacobian: np.ndarray | None = None
    second: np.ndarray | None = None
    failure_time: float | None = None
    message: str = ""


@dataclass
class BatchFlow:
    """Flow of a batch of initial points sampled at ``times``."""

    success: bool
    times: np.ndarray
    z: np.ndarray  # (T, B, 2n)
    jacobian: np.ndarray | None  # (T, B, 2n, 2n)
    second: np.ndarray | None  # (T, B, 2n, 2n, 2n)
    steps: int
    error_estimate: float
    failure_time: float | None = None
    message: str = ""
    meta: dict = field(default_factory=dict)


class PoissonSpray:
    """Geodesic vector field of the cotangent connection induced by ``conn``."""

    def __init__(self, pi: BivectorField, conn: ConnectionCoefficients):
        if pi.dim != conn.dim:
            raise GeometryError("bivector and connection dimensions differ")
        if pi.variables != conn.variables:
            raise GeometryError("bivector and connection use different charts")
        self.pi = pi
        self.conn = conn
        self.n = pi.dim

    @property
    def dim(self) -> int:
        return 2 * self.n

    def _G(self, x: np.ndarray, order: int) -> TensorJet | None:
        # G[i, k, l] = sum_j Gamma^k_{ji} pi^{jl}
        if self.conn.flat or self.pi.is_zero:
            return None
        Gam = self.conn.jet(x, order)
        P = self.pi.jet(x, order)
        return jet_einsum("kji,jl->ikl", Gam, P)

    def __call__(self, z) -> np.ndarray:
        z2 = np.atleast_2d(np.asarray(z, dtype=float))
        out = self.derivatives(z2, 0)[0]
        return out[0] if np.ndim(z) == 1 else out

    def derivatives(self, z: np.ndarray, order: int) -> list[np.ndarray]:
        """Field values and derivatives up to ``order`` (0, 1 or 2) at points ``(B, 2n)``."""
        n = self.n
        z = np.atleast_2d(z)
        B = z.shape[0]
        x, lam = z[:, :n], z[:, n:]
        if self.pi.is_zero:
            zero = [np.zeros((B,) + (2 * n,) * (k + 1)) for k in range(order + 1)]
            return zero
        P = self.pi.jet(x, order)
        G = self._G(x, order)
        f = np.empty((B, 2 * n))
        f[:, :n] = np.einsum("...jk,...k->...j", P.coeffs[0], lam)
        if G is None:
            f[:, n:] = 0.0
        else:
            f[:, n:] = np.einsum("...ikl,...k,...l->...i", G.coeffs[0], lam, lam)
        out = [f]
        if order >= 1:
            D = np.zeros((B, 2 * n, 2 * n))
            D[:, :n, :n] = np.einsum("...jka,...k->...ja", P.coeffs[1], lam)
            D[:, :n, n:] = P.coeffs[0]
            if G is not None:
                G0, G1 = G.coeffs[0], G.coeffs[1]
                D[:, n:, :n] = np.einsum("...ikla,...k,...l->...ia", G1, lam, lam)
                D[:, n:, n:] = np.einsum("...icl,...l->...ic", G0, lam) + np.einsum("...ikc,...k->...ic", G0, lam)
            out.append(D)
        if order >= 2:
            H = np.zeros((B, 2 * n, 2 * n, 2 * n))
            H[:, :n, :n, :n] = np.einsum("...jkac,...k->...jac", P.coeffs[2], lam)
            xl = np.einsum("...jba->...jab", P.coeffs[1])
            H[:, :n, :n, n:] = xl
            H[:, :n, n:, :n] = np.swapaxes(xl, -1, -2)
            if G is not None:
                G0, G1, G2 = G.coeffs
                H[:, n:, :n, :n] = np.einsum("...iklac,...k,...l->...iac", G2, lam, lam)
                gl = np.einsum("...ibla,...l->...iab", G1, lam) + np.einsum("...ikba,...k->...iab", G1, lam)
                H[:, n:, :n, n:] = gl
                H[:, n:, n:, :n] = np.swapaxes(gl, -1, -2)
                H[:, n:, n:, n:] = G0 + np.swapaxes(G0, -1, -2)
            out.append(H)
        return out


def build_spray(pi: BivectorField, conn: ConnectionCoefficients) -> PoissonSpray:
    return PoissonSpray(pi, conn)


def _augmented_rhs(xi: PoissonSpray, variational: int):
    d = xi.dim

    def rhs(y):
        B = y.shape[0]
        z = y[:, :d]
        if variational == 0:
            return xi.derivatives(z, 0)[0]
        derivs = xi.derivatives(z, variational)
        J = y[:, d : d + d * d].reshape(B, d, d)
        parts = [derivs[0], (derivs[1] @ J).reshape(B, -1)]
        if variational == 2:
            K = y[:, d + d * d :].reshape(B, d, d, d)
            Kdot = np.einsum("...ade,...db,...ec->...abc", derivs[2], J, J, optimize=True)
            Kdot += np.einsum("...ad,...dbc->...abc", derivs[1], K, optimize=True)
            parts.append(Kdot.reshape(B, -1))
        return np.concatenate(parts, axis=1)

    return rhs


def flow_batch(
    xi: PoissonSpray,
    z0,
    times: Sequence[float],
    opts: SolverOptions | None = None,
    variational: int = 0,
) -> BatchFlow:
    """Integrate a batch of initial points ``(B, 2n)`` through ``times``.

    ``variational`` selects 0 (state only), 1 (plus Jacobian) or 2 (plus its
    derivative ``K[a, b, c] = d^2 z^a / d z0^b d z0^c``).
    """
    if variational not in (0, 1, 2):
        raise ValueError("variational must be 0, 1 or 2")
    d = xi.dim
    Z = np.atleast_2d(np.asarray(z0, dtype=float))
    if Z.shape[1] != d:
        raise ValueError(f"initial points must have dimension {d}")
    B = Z.shape[0]
    parts = [Z]
    if variational >= 1:
        parts.append(np.broadcast_to(np.eye(d).reshape(1, -1), (B, d * d)))
    if variational == 2:
        parts.append(np.zeros((B, d**3)))
    y0 = np.concatenate(parts, axis=1)
    sol = integrate(_augmented_rhs(xi, variational), y0, times, opts)
    T = len(sol.t)
    z = sol.y[..., :d]
    J = sol.y[..., d : d + d * d].reshape(T, B, d, d) if variational >= 1 else None
    K = sol.y[..., d + d * d :].reshape(T, B, d, d, d) if variational == 2 else None
    return BatchFlow(sol.success, sol.t, z, J, K, sol.steps, sol.error_estimate, sol.failure_time, sol.message)


def _as_point(p0) -> CotangentPoint:
    return p0 if isinstance(p0, CotangentPoint) else CotangentPoint.from_array(p0)


def _check_t(t: float) -> float:
    t = float(t)
    if not 0.0 <= t <= 1.0:
        raise ValueError("flow time must lie in [0, 1]")
    return t


def flow(xi: PoissonSpray, p0, t: float, opts: SolverOptions | None = None) -> FlowResult:
    """Flow ``p0`` for time ``t``; failure is reported through ``inside_U``."""
    p = _as_point(p0)
    bf = flow_batch(xi, p.as_array()[None], [_check_t(t)], opts, 0)
    if not bf.success:
        return FlowResult(False, bf.steps, bf.error_estimate, failure_time=bf.failure_time, message=bf.message)
    return FlowResult(True, bf.steps, bf.error_estimate, CotangentPoint.from_array(bf.z[-1, 0]))


def flow_with_jacobian(
    xi: PoissonSpray,
    p0,
    t: float,
    opts: SolverOptions | None = None,
    second: bool = False,
) -> FlowResult:
    """Flow plus Jacobian ``d phi_t`` (and its derivative if ``second``)."""
    p = _as_point(p0)
    bf = flow_batch(xi, p.as_array()[None], [_check_t(t)], opts, 2 if second else 1)
    if not bf.success:
        return FlowResult(False, bf.steps, bf.error_estimate, failure_time=bf.failure_time, message=bf.message)
    return FlowResult(
        True,
        bf.steps,
        bf.error_estimate,
        CotangentPoint.from_array(bf.z[-1, 0]),
        bf.jacobian[-1, 0],
        bf.second[-1, 0] if second else None,
    )


def trajectory(xi: PoissonSpray, p0, times: Sequence[float], opts: SolverOptions | None = None) -> BatchFlow:
    """States of a single trajectory at the (sorted) ``times``."""
    p = _as_point(p0)
    return flow_batch(xi, p.as_array()[None], times, opts, 0)


def homogeneity_residual(
    xi: PoissonSpray,
    p0,
    s: float,
    t: float = 1.0,
    opts: SolverOptions | None = None,
) -> float:
    """``max |m_s(phi_{ts}(x, l)) - phi_t(x, s l)|`` where ``m_s`` rescales fibers.

    Returns ``nan`` when either flow leaves the domain.
    """
    p = _as_point(p0)
    n = p.dim
    left = flow_batch(xi, p.as_array()[None], [t * s], opts, 0)
    right = flow_batch(xi, p.scaled(s).as_array()[None], [t], opts, 0)
    if not (left.success and right.success):
        return float("nan")
    lz = left.z[-1, 0].copy()
    lz[n:] *= s
    return float(np.max(np.abs(lz - right.z[-1, 0])))


def geodesic_residuals(
    xi: PoissonSpray,
    p0,
    samples: int = 20,
    h: float = 1e-3,
    opts: SolverOptions | None = None,
) -> dict[str, float]:
    """A-path and A-geodesic residuals along the trajectory through ``p0``.

    Velocities come from a five-point difference of the integrated
    trajectory (not from the vector field), then

    * ``path``: ``x' - pi_sharp(l)``;
    * ``geodesic``: ``l'_i - Gamma^k_{ji} x'^j l_k``.
    """
    p = _as_point(p0)
    n = p.dim
    centers = np.linspace(0.05, 0.95, samples)
    offsets = np.array([-2, -1, 0, 1, 2]) * h
    times = np.sort((centers[:, None] + offsets[None, :]).reshape(-1))
    bf = trajectory(xi, p, times, opts)
    if not bf.success:
        return {"path": float("nan"), "geodesic": float("nan")}
    z = bf.z[:, 0].reshape(samples, 5, 2 * n)
    vel = (z[:, 0] - 8 * z[:, 1] + 8 * z[:, 3] - z[:, 4]) / (12 * h)
    mid = z[:, 2]
    xs, lam = mid[:, :n], mid[:, n:]
    xdot, ldot = vel[:, :n], vel[:, n:]
    P = xi.pi.matrix(xs)
    path = xdot - np.einsum("bjk,bk->bj", P, lam)
    if xi.conn.flat:
        geo = ldot
    else:
        Gam = xi.conn.jet(xs, 0).value
        geo = ldot - np.einsum("bkji,bj,bk->bi", Gam, xdot, lam)
    return {"path": float(np.max(np.abs(path))), "geodesic": float(np.max(np.abs(geo)))}


__all__ = [
    "BatchFlow",
    "ConnectionCoefficients",
    "CotangentPoint",
    "FlowResult",
    "PoissonSpray",
    "build_spray",
    "flow",
    "flow_batch",
    "flow_with_jacobian",
    "geodesic_residuals",
    "homogeneity_residual",
    "trajectory",
]
