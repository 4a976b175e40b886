"""Poisson-Nijenhuis structures on a chart.

Besides the compatibility checks this module provides the cotangent-level
objects attached to a (1,1)-tensor ``N``: the complete lift ``N^c``, the
twisted Lie-Poisson bivector and the coboundary of the twisted tangent
algebroid ``(TM)_N`` (anchor ``X -> NX``, bracket ``[X, Y]_N``).
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from typing import Sequence

import numpy as np

from .expr import ZERO, Expression, Num, Var, coordinate_names
from .geometry import (
    BivectorField,
    CovectorField,
    GeometryError,
    OneOneTensorField,
    TensorJet,
    TwoFormField,
    VectorField,
    _as_batch,
    _bracket_arrays,
    _koszul_from_jets,
    _torsion_from_jets,
    _unbatch,
    antisymmetrize3,
    exterior_derivative_1form,
    jacobiator,
    jet_einsum,
    omega_can,
    scalar_jet,
)


def fiber_names(n: int) -> tuple[str, ...]:
    return tuple(f"lam{i + 1}" for i in range(n))


# --------------------------------------------------------------------------
# fields assembled symbolically


def transpose_apply(N: OneOneTensorField, alpha: CovectorField) -> CovectorField:
    """``(N^T alpha)_j = N^k_j alpha_k`` as an expression field."""
    comps = []
    for j in range(N.dim):
        acc = ZERO
        for k in range(N.dim):
            acc = acc + N.component(k, j) * alpha.component(k)
        comps.append(acc)
    return CovectorField(comps, N.variables)


def apply(N: OneOneTensorField, X: VectorField) -> VectorField:
    """``(NX)^i = N^i_j X^j``."""
    comps = []
    for i in range(N.dim):
        acc = ZERO
        for j in range(N.dim):
            acc = acc + N.component(i, j) * X.component(j)
        comps.append(acc)
    return VectorField(comps, N.variables)


def twisted_bivector(pi: BivectorField, N: OneOneTensorField) -> BivectorField:
    """``pi_N`` with ``pi_N_sharp = pi_sharp o N^T``, i.e. ``pi_N^{ik} = pi^{ij} N^k_j``."""
    if pi.dim != N.dim:
        raise GeometryError("dimension mismatch")
    comps = {}
    for i in range(pi.dim):
        for k in range(i + 1, pi.dim):
            acc = ZERO
            for j in range(pi.dim):
                acc = acc + pi.component(i, j) * N.component(k, j)
            comps[(i, k)] = acc
    return BivectorField(pi.dim, comps, pi.variables)


@dataclass
class PNStructure:
    """A bivector with a (1,1)-tensor; ``pi_N`` is derived."""

    pi: BivectorField
    N: OneOneTensorField

    def __post_init__(self):
        if self.pi.dim != self.N.dim or self.pi.variables != self.N.variables:
            raise GeometryError("bivector and (1,1)-tensor live on different charts")
        self.pi_N = twisted_bivector(self.pi, self.N)

    @property
    def dim(self) -> int:
        return self.pi.dim

    def pi_N_antisymmetry(self, point) -> float:
        """Defect of ``P N^T`` from antisymmetry (compatibility of the matrices)."""
        P = self.pi.matrix(point)
        Nm = self.N.matrix(point)
        M = P @ np.swapaxes(Nm, -1, -2)
        return float(np.max(np.abs(M + np.swapaxes(M, -1, -2)), initial=0.0))


# --------------------------------------------------------------------------
# trial fields


def trial_covectors(dim: int, variables: Sequence[str] | None = None, count: int = 5, seed: int = 0) -> list[CovectorField]:
    """Coordinate differentials plus seeded random polynomial 1-forms of degree <= 2."""
    variables = tuple(variables) if variables is not None else coordinate_names(dim)
    out = [CovectorField.exact(i, dim, variables) for i in range(dim)]
    rng = np.random.default_rng(seed)
    for _ in range(count):
        out.append(CovectorField([random_polynomial(variables, rng) for _ in range(dim)], variables))
    return out


def trial_vectors(dim: int, variables: Sequence[str] | None = None, count: int = 5, seed: int = 1) -> list[VectorField]:
    variables = tuple(variables) if variables is not None else coordinate_names(dim)
    out = [VectorField.coordinate(i, dim, variables) for i in range(dim)]
    rng = np.random.default_rng(seed)
    for _ in range(count):
        out.append(VectorField([random_polynomial(variables, rng) for _ in range(dim)], variables))
    return out


def random_polynomial(variables: Sequence[str], rng: np.random.Generator, degree: int = 2) -> Expression:
    """Random polynomial with coefficients rounded to 3 decimals (reproducible text form)."""
    acc = Expression(Num(float(np.round(rng.uniform(-1, 1), 3))))
    for v in variables:
        acc = acc + Expression(Num(float(np.round(rng.uniform(-1, 1), 3)))) * Expression(Var(v))
    if degree >= 2:
        for a in range(len(variables)):
            for b in range(a, len(variables)):
                c = float(np.round(rng.uniform(-1, 1), 3))
                acc = acc + Expression(Num(c)) * Expression(Var(variables[a])) * Expression(Var(variables[b]))
    return acc


# --------------------------------------------------------------------------
# operations


def twisted_bracket(N: OneOneTensorField, X: VectorField, Y: VectorField, point) -> np.ndarray:
    """``[X, Y]_N = [NX, Y] + [X, NY] - N[X, Y]``."""
    pts, single = _as_batch(point)
    Nj = N.jet(pts, 1)
    Xj, Yj = X.jet(pts, 1), Y.jet(pts, 1)
    NX = jet_einsum("ij,j->i", Nj, Xj)
    NY = jet_einsum("ij,j->i", Nj, Yj)
    out = _bracket_arrays(NX, Yj) + _bracket_arrays(Xj, NY)
    out -= np.einsum("bij,bj->bi", Nj.value, _bracket_arrays(Xj, Yj))
    return _unbatch(out, single)


def _koszul(pi: BivectorField, a: CovectorField, b: CovectorField, pts) -> np.ndarray:
    return _koszul_from_jets(pi.jet(pts, 1), a.jet(pts, 1), b.jet(pts, 1))


def pn_compatibility(
    pi: BivectorField,
    N: OneOneTensorField,
    point,
    covectors: Sequence[CovectorField] | None = None,
    vectors: Sequence[VectorField] | None = None,
) -> dict[str, float]:
    """Residuals of the Poisson-Nijenhuis conditions at ``point``.

    * ``matrix``: ``N P - P N^T`` (``N pi_sharp = pi_sharp N^T``);
    * ``bracket``: ``[a, b]_{pi_N} - ([N^T a, b]_pi + [a, N^T b]_pi - N^T [a, b]_pi)``;
    * ``torsion``: ``T_N(X, Y)``.
    """
    pts, _ = _as_batch(point)
    covectors = list(covectors) if covectors is not None else trial_covectors(pi.dim, pi.variables, count=2)
    vectors = list(vectors) if vectors is not None else trial_vectors(pi.dim, pi.variables, count=2)
    P = pi.matrix(pts)
    Nm = N.matrix(pts)
    NT = np.swapaxes(Nm, -1, -2)
    matrix_res = float(np.max(np.abs(Nm @ P - P @ NT)))
    pi_N = twisted_bivector(pi, N)
    bracket_res = 0.0
    for i, a in enumerate(covectors):
        Na = transpose_apply(N, a)
        for b in covectors[i + 1 :]:
            Nb = transpose_apply(N, b)
            lhs = _koszul(pi_N, a, b, pts)
            rhs = _koszul(pi, Na, b, pts) + _koszul(pi, a, Nb, pts)
            rhs -= np.einsum("bkj,bk->bj", Nm, _koszul(pi, a, b, pts))
            bracket_res = max(bracket_res, float(np.max(np.abs(lhs - rhs))))
    Nj = N.jet(pts, 1)
    torsion_res = 0.0
    for i, X in enumerate(vectors):
        for Y in vectors[i + 1 :]:
            t = _torsion_from_jets(Nj, X.jet(pts, 1), Y.jet(pts, 1))
            torsion_res = max(torsion_res, float(np.max(np.abs(t))))
    return {"matrix": matrix_res, "bracket": bracket_res, "torsion": torsion_res}


def bialgebroid_morphism_check(
    pi: BivectorField,
    N: OneOneTensorField,
    covectors: Sequence[CovectorField] | None,
    point,
) -> dict[str, float]:
    """Residuals of ``N^T [a, b]_{pi_N} = [N^T a, N^T b]_pi`` and ``pi_sharp N^T = pi_N_sharp``."""
    pts, _ = _as_batch(point)
    covectors = list(covectors) if covectors is not None else trial_covectors(pi.dim, pi.variables, count=2)
    pi_N = twisted_bivector(pi, N)
    Nm = N.matrix(pts)
    bracket_res = 0.0
    for i, a in enumerate(covectors):
        for b in covectors[i + 1 :]:
            lhs = np.einsum("bkj,bk->bj", Nm, _koszul(pi_N, a, b, pts))
            rhs = _koszul(pi, transpose_apply(N, a), transpose_apply(N, b), pts)
            bracket_res = max(bracket_res, float(np.max(np.abs(lhs - rhs))))
    P = pi.matrix(pts)
    anchor_res = float(np.max(np.abs(P @ np.swapaxes(Nm, -1, -2) - pi_N.matrix(pts))))
    return {"bracket": bracket_res, "anchor": anchor_res}


@lru_cache(maxsize=64)
def _twisted_liouville(N: OneOneTensorField) -> CovectorField:
    # theta_N = l_i N^i_b dx^b on the cotangent chart (x, lam)
    n = N.dim
    lam = fiber_names(n)
    comps = []
    for b in range(n):
        acc = ZERO
        for i in range(n):
            acc = acc + Expression(Var(lam[i])) * N.component(i, b)
        comps.append(acc)
    comps += [ZERO] * n
    return CovectorField(comps, N.variables + lam)


def twisted_liouville(N: OneOneTensorField) -> CovectorField:
    """The 1-form ``theta_N(u) = <l, N p_* u>`` on the cotangent chart."""
    return _twisted_liouville(N)


def complete_lift(N: OneOneTensorField, p) -> np.ndarray:
    """Complete lift ``N^c`` at ``p`` (or a batch of points ``(B, 2n)``).

    Solves ``omega_can(N^c u, v) = -d theta_N(u, v)``, with ``d theta_N``
    from jets of the explicitly assembled ``theta_N``.  The sign makes the
    lift of the identity the identity under ``omega_can = sum dx^i ^ dl_i``
    (for which the Liouville form satisfies ``d theta = -omega_can``).
    """
    from .spray import CotangentPoint

    z = p.as_array() if isinstance(p, CotangentPoint) else np.asarray(p, dtype=float)
    pts, single = _as_batch(z)
    dtheta = exterior_derivative_1form(twisted_liouville(N), pts)
    # N^c^T Omega = -dtheta  =>  N^c = Omega dtheta
    Nc = omega_can(N.dim) @ dtheta
    return _unbatch(Nc, single)


def complete_lift_blocks(Nv: np.ndarray, dN: np.ndarray, lam: np.ndarray) -> np.ndarray:
    """Closed-form ``N^c = [[N, 0], [-L, N^T]]`` with ``L_ab = l_i (d_a N^i_b - d_b N^i_a)``."""
    L = np.einsum("...i,...iba->...ab", lam, dN)
    L = L - np.swapaxes(L, -1, -2)
    top = np.concatenate([Nv, np.zeros_like(Nv)], axis=-1)
    bot = np.concatenate([-L, np.swapaxes(Nv, -1, -2)], axis=-1)
    return np.concatenate([top, bot], axis=-2)


def fiber_map_jacobian(N: OneOneTensorField, p, inverse: bool = False) -> np.ndarray:
    """Jacobian of ``(x, l) -> (x, N(x)^T l)`` (or ``N(x)^{-T} l`` when ``inverse``)."""
    from .spray import CotangentPoint

    z = p.as_array() if isinstance(p, CotangentPoint) else np.asarray(p, dtype=float)
    pts, single = _as_batch(z)
    n = N.dim
    x, lam = pts[:, :n], pts[:, n:]
    Nj = N.jet(x, 1)
    NT = np.swapaxes(Nj.value, -1, -2)
    dNT = np.swapaxes(Nj.coeffs[1], -2, -3)  # dNT[..., i, j, a] = d_a (N^T)_{ij}
    if inverse:
        M = np.linalg.inv(NT)
        # d_a (M l) = -M (d_a N^T) M l
        C = -np.einsum("...ij,...jka,...kl,...l->...ia", M, dNT, M, lam)
    else:
        M = NT
        C = np.einsum("...ija,...j->...ia", dNT, lam)
    B = pts.shape[0]
    F = np.zeros((B, 2 * n, 2 * n))
    F[:, :n, :n] = np.eye(n)
    F[:, n:, :n] = C
    F[:, n:, n:] = M
    return _unbatch(F, single)


def twisted_lie_poisson(N: OneOneTensorField, p) -> np.ndarray:
    """Matrix of the twisted Lie-Poisson bivector on ``T*M`` at ``p``.

    Entries are the brackets of coordinate functions::

        {x^i, x^j} = 0,  {l_i, x^j} = N^j_i,
        {l_i, l_j} = l_k (d_i N^k_j - d_j N^k_i)

    where ``l_i`` is the fiberwise-linear function of the vector field ``d_i``.
    """
    from .spray import CotangentPoint

    z = p.as_array() if isinstance(p, CotangentPoint) else np.asarray(p, dtype=float)
    pts, single = _as_batch(z)
    n = N.dim
    x, lam = pts[:, :n], pts[:, n:]
    Nj = N.jet(x, 1)
    Nv, dN = Nj.coeffs
    # {l_i, l_j} = l_k C^k_{ij} with C the structure functions of [d_i, d_j]_N
    C = np.einsum("...kji->...kij", dN)
    C = C - np.swapaxes(C, -1, -2)
    LL = np.einsum("...k,...kij->...ij", lam, C)
    B = pts.shape[0]
    Pi = np.zeros((B, 2 * n, 2 * n))
    Pi[:, n:, :n] = np.swapaxes(Nv, -1, -2)
    Pi[:, :n, n:] = -Nv
    Pi[:, n:, n:] = 0.5 * (LL - np.swapaxes(LL, -1, -2))
    return _unbatch(Pi, single)


def lie_poisson_lift_residual(N: OneOneTensorField, p) -> float:
    """``max |pi~_N_sharp o omega_can_flat - N^c|``."""
    Pi = twisted_lie_poisson(N, p)
    Nc = complete_lift(N, p)
    return float(np.max(np.abs(Pi @ omega_can(N.dim) - Nc)))


# --------------------------------------------------------------------------
# coboundary of (TM)_N


def _structure_jet(N: TensorJet) -> TensorJet:
    # C[e, a, b] = d_a N^e_b - d_b N^e_a, one order lower than N
    dN = N.d().transpose(0, 2, 1)  # [e, a, b] = d_a N^e_b
    return dN - dN.transpose(0, 2, 1)


def coboundary_jet(N: TensorJet, form: TensorJet, k: int) -> TensorJet:
    """Coboundary of a k-form jet (k <= 2) for the algebroid ``(TM)_N``.

    The result has one order fewer than the inputs.
    """
    if k == 0:
        return jet_einsum("ba,b->a", N, form.d())
    C = _structure_jet(N)
    if k == 1:
        # N^c_a d_c l_b - N^c_b d_c l_a - l_e C^e_ab
        t = jet_einsum("ca,bc->ab", N, form.d())
        return t - t.transpose(1, 0) - jet_einsum("e,eab->ab", form, C)
    if k == 2:
        D = jet_einsum("da,bcd->abc", N, form.d())  # N^d_a d_d w_bc
        cyc = D - D.transpose(1, 0, 2) + D.transpose(1, 2, 0)
        cw = jet_einsum("eab,ec->abc", C, form)  # w(C_ab, d_c)
        corr = cw - cw.transpose(0, 2, 1) + cw.transpose(2, 0, 1)
        return cyc - corr
    raise ValueError("coboundary is implemented for k in {0, 1, 2}")


def de_rham_jet(form: TensorJet, k: int) -> TensorJet:
    """Exterior derivative of a k-form jet (k <= 1) as a (k+1)-form jet."""
    if k == 0:
        return form.d()
    if k == 1:
        D = form.d().transpose(1, 0)  # [a, b] = d_a l_b
        return D - D.transpose(1, 0)
    raise ValueError("de Rham jet implemented for k in {0, 1}")


def _form_jet(form, pts, order, variables):
    if isinstance(form, (CovectorField, TwoFormField)):
        return form.jet(pts, order), (1 if isinstance(form, CovectorField) else 2)
    return scalar_jet(form, pts, order, variables), 0


def coboundary_TMN(N: OneOneTensorField, form, point) -> np.ndarray:
    """Components of ``delta form`` for a function, 1-form or 2-form field."""
    pts, single = _as_batch(point)
    fj, k = _form_jet(form, pts, 1, N.variables)
    out = coboundary_jet(N.jet(pts, 1), fj, k).value
    if k == 2:
        out = antisymmetrize3(out)
    return _unbatch(out, single)


def coboundary_square_residual(N: OneOneTensorField, form, point) -> float:
    """``max |delta(delta form)|`` for a function or 1-form."""
    pts, _ = _as_batch(point)
    fj, k = _form_jet(form, pts, 2, N.variables)
    Nj = N.jet(pts, 2)
    once = coboundary_jet(Nj, fj, k)
    twice = coboundary_jet(Nj.truncate(1), once, k + 1).value
    return float(np.max(np.abs(twice), initial=0.0))


def coboundary_commutator_residual(N: OneOneTensorField, f, point) -> float:
    """``max |(delta d + d delta) f|`` on a scalar test function."""
    pts, _ = _as_batch(point)
    fj = scalar_jet(f, pts, 2, N.variables)
    Nj = N.jet(pts, 1)
    a = coboundary_jet(Nj, de_rham_jet(fj, 0), 1).value
    b = de_rham_jet(coboundary_jet(Nj, fj, 0), 1).value
    return float(np.max(np.abs(a + b), initial=0.0))


def pi_N_jacobiator(pn: PNStructure, point) -> float:
    return float(np.max(np.abs(jacobiator(pn.pi_N, point)), initial=0.0))


__all__ = [
    "PNStructure",
    "apply",
    "bialgebroid_morphism_check",
    "coboundary_TMN",
    "coboundary_commutator_residual",
    "coboundary_jet",
    "coboundary_square_residual",
    "complete_lift",
    "complete_lift_blocks",
    "de_rham_jet",
    "fiber_map_jacobian",
    "fiber_names",
    "lie_poisson_lift_residual",
    "pi_N_jacobiator",
    "pn_compatibility",
    "random_polynomial",
    "transpose_apply",
    "trial_covectors",
    "trial_vectors",
    "twisted_bivector",
    "twisted_bracket",
    "twisted_liouville",
    "twisted_lie_poisson",
]
