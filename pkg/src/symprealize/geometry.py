"""Coordinate tensor calculus on a single chart.

Conventions used everywhere in the package:

* ``(pi_sharp alpha)^i = pi^{ij} alpha_j``;
* ``(omega_flat v)_a = omega_{ab} v^b``;
* on a cotangent chart ordered ``(x1..xn, l1..ln)`` the canonical form is
  ``omega_can = sum dx^i ^ dl_i`` with matrix ``[[0, I], [-I, 0]]``.

Derivatives of coordinate fields come from :mod:`symprealize.expr` jets.
Array-valued jets (:class:`TensorJet`) carry the product rule through
tensor contractions so brackets and coboundaries stay exact.
"""

from __future__ import annotations

import itertools
from dataclasses import dataclass, field
from functools import lru_cache
from typing import Callable, Sequence

import numpy as np

from .expr import ZERO, Expression, as_expression, coordinate_names, eval_jets


class GeometryError(ValueError):
    pass


class StencilError(GeometryError):
    """A finite-difference stencil point could not be evaluated."""

    def __init__(self, message: str, offset):
        super().__init__(message)
        self.offset = offset


# --------------------------------------------------------------------------
# array-valued jets

_DERIV_LETTERS = "ZYXW"


class TensorJet:
    """Batch of tensor-valued jets.

    ``coeffs[k]`` has shape ``(B, *shape, n, ..., n)`` with ``k`` trailing
    derivative axes.
    """

    __slots__ = ("coeffs", "rank")

    def __init__(self, coeffs: Sequence[np.ndarray], rank: int):
        self.coeffs = list(coeffs)
        self.rank = rank

    @property
    def order(self) -> int:
        return len(self.coeffs) - 1

    @property
    def value(self) -> np.ndarray:
        return self.coeffs[0]

    def d(self) -> "TensorJet":
        """Promote the first derivative axis to a trailing tensor axis."""
        if self.order < 1:
            raise GeometryError("jet order exhausted")
        return TensorJet(self.coeffs[1:], self.rank + 1)

    def truncate(self, order: int) -> "TensorJet":
        return TensorJet(self.coeffs[: order + 1], self.rank)

    def transpose(self, *perm: int) -> "TensorJet":
        out = []
        for k, c in enumerate(self.coeffs):
            axes = [0] + [p + 1 for p in perm] + list(range(self.rank + 1, self.rank + 1 + k))
            out.append(np.transpose(c, axes))
        return TensorJet(out, self.rank)

    def __add__(self, other: "TensorJet") -> "TensorJet":
        k = min(self.order, other.order)
        return TensorJet([a + b for a, b in zip(self.coeffs[: k + 1], other.coeffs)], self.rank)

    def __sub__(self, other: "TensorJet") -> "TensorJet":
        k = min(self.order, other.order)
        return TensorJet([a - b for a, b in zip(self.coeffs[: k + 1], other.coeffs)], self.rank)

    def __neg__(self) -> "TensorJet":
        return TensorJet([-c for c in self.coeffs], self.rank)

    def __mul__(self, s: float) -> "TensorJet":
        return TensorJet([s * c for c in self.coeffs], self.rank)

    __rmul__ = __mul__


def jet_einsum(spec: str, *operands) -> TensorJet:
    """Einstein contraction of tensor jets with the Leibniz rule applied.

    ``spec`` names tensor axes only (batch and derivative axes are implicit).
    Plain arrays ``(B, *shape)`` are treated as constants.
    """
    inputs, output = spec.split("->")
    in_specs = inputs.split(",")
    if len(in_specs) != len(operands):
        raise GeometryError("operand count does not match spec")
    jets = [op for op in operands if isinstance(op, TensorJet)]
    order = min(j.order for j in jets) if jets else 0
    out = []
    for k in range(order + 1):
        letters = _DERIV_LETTERS[:k]
        total = None
        for assign in itertools.product(range(len(operands)), repeat=k):
            arrays, subs = [], []
            ok = True
            for idx, (op, s) in enumerate(zip(operands, in_specs)):
                mine = "".join(letters[slot] for slot in range(k) if assign[slot] == idx)
                if isinstance(op, TensorJet):
                    arrays.append(op.coeffs[len(mine)])
                    subs.append("..." + s + mine)
                else:
                    if mine:
                        ok = False
                        break
                    arrays.append(op)
                    subs.append("..." + s)
            if not ok:
                continue
            term = np.einsum(",".join(subs) + "->..." + output + letters, *arrays)
            total = term if total is None else total + term
        out.append(total)
    return TensorJet(out, len(output))


def field_jet(
    components: np.ndarray,
    points: np.ndarray,
    order: int,
    variables: Sequence[str],
) -> TensorJet:
    """Evaluate an object array of expressions (``None`` for zero) as a tensor jet."""
    comps = np.asarray(components, dtype=object)
    shape = comps.shape
    pts = np.atleast_2d(np.asarray(points, dtype=float))
    batch, n = pts.shape
    flat = [None if (e is None or e.is_zero) else e for e in comps.reshape(-1)]
    jets = eval_jets(flat, pts, order, variables)
    coeffs = []
    for k in range(order + 1):
        arr = np.zeros((batch, comps.size) + (n,) * k)
        for idx, j in enumerate(jets):
            if j is not None:
                arr[:, idx] = j.coeffs[k]
        coeffs.append(arr.reshape((batch,) + shape + (n,) * k))
    for c in coeffs:
        if not np.all(np.isfinite(c)):
            raise GeometryError("non-finite value while evaluating a field")
    return TensorJet(coeffs, len(shape))


def scalar_jet(e, points, order: int, variables: Sequence[str]) -> TensorJet:
    comps = np.empty((), dtype=object)
    comps[()] = _expr_or_none(e)
    return field_jet(comps, points, order, variables)


def _as_batch(point) -> tuple[np.ndarray, bool]:
    arr = np.asarray(point, dtype=float)
    if arr.ndim == 1:
        return arr[None, :], True
    return arr, False


def _unbatch(arr: np.ndarray, single: bool) -> np.ndarray:
    return arr[0] if single else arr


# --------------------------------------------------------------------------
# fields


def _expr_or_none(value) -> Expression | None:
    if value is None:
        return None
    e = as_expression(value)
    return None if e.is_zero else e


class _ChartField:
    dim: int
    variables: tuple[str, ...]

    def _check_vars(self, exprs):
        allowed = set(self.variables)
        for e in exprs:
            if e is not None and not e.variables <= allowed:
                extra = sorted(e.variables - allowed)
                raise GeometryError(f"expression uses {extra} outside chart {self.variables}")


class BivectorField(_ChartField):
    """Bivector ``pi`` stored by its strict upper triangle ``pi^{ij}, i < j``."""

    def __init__(self, dim: int, components: dict | None = None, variables: Sequence[str] | None = None):
        self.dim = int(dim)
        self.variables = tuple(variables) if variables is not None else coordinate_names(self.dim)
        if len(self.variables) != self.dim:
            raise GeometryError("variable count must equal the dimension")
        self._upper: dict[tuple[int, int], Expression] = {}
        for (i, j), value in (components or {}).items():
            if not (0 <= i < self.dim and 0 <= j < self.dim) or i == j:
                raise GeometryError(f"bad bivector index ({i}, {j})")
            e = _expr_or_none(value)
            if e is None:
                continue
            if i > j:
                i, j, e = j, i, -e
            self._upper[(i, j)] = self._upper.get((i, j), ZERO) + e
        self._check_vars(self._upper.values())

    @classmethod
    def zero(cls, dim: int, variables=None) -> "BivectorField":
        return cls(dim, {}, variables)

    @classmethod
    def from_matrix(cls, matrix, variables=None) -> "BivectorField":
        """Build from an antisymmetric matrix of expressions; only ``i < j`` is read."""
        m = np.asarray(matrix, dtype=object)
        n = m.shape[0]
        comps = {(i, j): m[i, j] for i in range(n) for j in range(i + 1, n)}
        return cls(n, comps, variables)

    @property
    def upper(self) -> dict[tuple[int, int], Expression]:
        return dict(self._upper)

    def component(self, i: int, j: int) -> Expression:
        if i == j:
            return ZERO
        if i < j:
            return self._upper.get((i, j), ZERO)
        return -self._upper.get((j, i), ZERO)

    def components(self) -> np.ndarray:
        out = np.full((self.dim, self.dim), None, dtype=object)
        for (i, j), e in self._upper.items():
            out[i, j] = e
            out[j, i] = -e
        return out

    @property
    def is_zero(self) -> bool:
        return not self._upper

    @property
    def is_constant(self) -> bool:
        return all(e.is_constant for e in self._upper.values())

    def jet(self, points, order: int) -> TensorJet:
        pts, _ = _as_batch(points)
        tj = field_jet(self.components(), pts, order, self.variables)
        # exact antisymmetry: copy the upper triangle
        iu = np.triu_indices(self.dim, 1)
        for k, c in enumerate(tj.coeffs):
            c[:, iu[1], iu[0]] = -c[:, iu[0], iu[1]]
        return tj

    def matrix(self, point) -> np.ndarray:
        pts, single = _as_batch(point)
        return _unbatch(self.jet(pts, 0).value, single)

    def sharp(self, alpha, point) -> np.ndarray:
        return self.matrix(point) @ np.asarray(alpha, dtype=float)

    def __repr__(self) -> str:
        terms = ", ".join(f"{i + 1}{j + 1}: {e}" for (i, j), e in sorted(self._upper.items()))
        return f"BivectorField(dim={self.dim}, {{{terms}}})"


class OneOneTensorField(_ChartField):
    """(1,1)-tensor with components ``N[i][j] = N^i_j`` (so ``N d_j = N^i_j d_i``)."""

    def __init__(self, components, variables: Sequence[str] | None = None):
        rows = [list(r) for r in components]
        self.dim = len(rows)
        if any(len(r) != self.dim for r in rows):
            raise GeometryError("(1,1)-tensor must be square")
        self.variables = tuple(variables) if variables is not None else coordinate_names(self.dim)
        if len(self.variables) != self.dim:
            raise GeometryError("variable count must equal the dimension")
        self._comps = np.full((self.dim, self.dim), None, dtype=object)
        for i, r in enumerate(rows):
            for j, v in enumerate(r):
                self._comps[i, j] = _expr_or_none(v)
        self._check_vars(self._comps.reshape(-1))

    @classmethod
    def identity(cls, dim: int, variables=None) -> "OneOneTensorField":
        return cls([[1.0 if i == j else 0.0 for j in range(dim)] for i in range(dim)], variables)

    @classmethod
    def constant(cls, matrix, variables=None) -> "OneOneTensorField":
        m = np.asarray(matrix, dtype=float)
        return cls([[float(v) for v in row] for row in m], variables)

    def components(self) -> np.ndarray:
        return self._comps.copy()

    def component(self, i: int, j: int) -> Expression:
        e = self._comps[i, j]
        return ZERO if e is None else e

    @property
    def is_constant(self) -> bool:
        return all(e is None or e.is_constant for e in self._comps.reshape(-1))

    def transpose_components(self) -> np.ndarray:
        return self._comps.T.copy()

    def jet(self, points, order: int) -> TensorJet:
        pts, _ = _as_batch(points)
        return field_jet(self._comps, pts, order, self.variables)

    def matrix(self, point) -> np.ndarray:
        pts, single = _as_batch(point)
        return _unbatch(self.jet(pts, 0).value, single)

    def __repr__(self) -> str:
        rows = "; ".join(", ".join(str(self.component(i, j)) for j in range(self.dim)) for i in range(self.dim))
        return f"OneOneTensorField([{rows}])"


class _ComponentField(_ChartField):
    def __init__(self, components, variables: Sequence[str] | None = None):
        comps = [_expr_or_none(c) for c in components]
        self.dim = len(comps)
        self.variables = tuple(variables) if variables is not None else coordinate_names(self.dim)
        if len(self.variables) != self.dim:
            raise GeometryError("variable count must equal the dimension")
        self._comps = np.empty(self.dim, dtype=object)
        self._comps[:] = comps
        self._check_vars(comps)

    def component(self, i: int) -> Expression:
        e = self._comps[i]
        return ZERO if e is None else e

    def components(self) -> np.ndarray:
        return self._comps.copy()

    def jet(self, points, order: int) -> TensorJet:
        pts, _ = _as_batch(points)
        return field_jet(self._comps, pts, order, self.variables)

    def value(self, point) -> np.ndarray:
        pts, single = _as_batch(point)
        return _unbatch(self.jet(pts, 0).value, single)

    def __repr__(self) -> str:
        comps = ", ".join(str(self.component(i)) for i in range(self.dim))
        return f"{type(self).__name__}([{comps}])"


class VectorField(_ComponentField):
    """Vector field ``X = X^i d_i``."""

    @classmethod
    def coordinate(cls, i: int, dim: int, variables=None) -> "VectorField":
        return cls([1.0 if k == i else 0.0 for k in range(dim)], variables)


class CovectorField(_ComponentField):
    """1-form ``alpha = alpha_i dx^i``."""

    @classmethod
    def exact(cls, i: int, dim: int, variables=None) -> "CovectorField":
        return cls([1.0 if k == i else 0.0 for k in range(dim)], variables)


class TwoFormField(_ChartField):
    """2-form field stored by its strict upper triangle ``w_{ab}, a < b``."""

    def __init__(self, dim: int, components: dict | None = None, variables=None):
        self.dim = int(dim)
        self.variables = tuple(variables) if variables is not None else coordinate_names(self.dim)
        self._bv = BivectorField(dim, components, self.variables)

    def components(self) -> np.ndarray:
        return self._bv.components()

    def jet(self, points, order: int) -> TensorJet:
        return self._bv.jet(points, order)

    def __call__(self, points) -> np.ndarray:
        return self._bv.jet(np.atleast_2d(points), 0).value


@dataclass
class TwoFormMatrix:
    """Antisymmetric matrix ``w_{ab}`` of a 2-form at a point."""

    matrix: np.ndarray
    point: np.ndarray | None = None
    label: str = ""
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.matrix = np.asarray(self.matrix, dtype=float)
        if self.matrix.ndim != 2 or self.matrix.shape[0] != self.matrix.shape[1]:
            raise GeometryError("two-form matrix must be square")
        if self.point is not None:
            self.point = np.asarray(self.point, dtype=float)

    def __array__(self, dtype=None, copy=None):
        return self.matrix if dtype is None else self.matrix.astype(dtype)

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def antisymmetry_defect(self) -> float:
        return float(np.max(np.abs(self.matrix + self.matrix.T), initial=0.0))

    def det(self) -> float:
        return float(np.linalg.det(self.matrix))

    def flat(self, v) -> np.ndarray:
        return self.matrix @ np.asarray(v, dtype=float)

    def __call__(self, u, v) -> float:
        return float(np.asarray(u) @ self.matrix @ np.asarray(v))


def omega_can(n: int) -> np.ndarray:
    """Matrix of ``sum dx^i ^ dl_i`` on a ``2n``-dimensional cotangent chart."""
    eye = np.eye(n)
    zero = np.zeros((n, n))
    return np.block([[zero, eye], [-eye, zero]])


# --------------------------------------------------------------------------
# antisymmetric rank-3 helpers


@lru_cache(maxsize=None)
def _triples(n: int):
    return [t for t in itertools.combinations(range(n), 3)]


def _perm_sign(p) -> int:
    sign = 1
    p = list(p)
    for i in range(len(p)):
        for j in range(i + 1, len(p)):
            if p[i] > p[j]:
                sign = -sign
    return sign


_PERMS3 = [(p, _perm_sign(p)) for p in itertools.permutations(range(3))]


def antisymmetrize3(t: np.ndarray) -> np.ndarray:
    """Copy the ``i < j < k`` entries of ``t[..., i, j, k]`` into an exactly antisymmetric array."""
    n = t.shape[-1]
    out = np.zeros_like(t)
    for ijk in _triples(n):
        val = t[(..., *ijk)]
        for p, s in _PERMS3:
            idx = tuple(ijk[q] for q in p)
            out[(..., *idx)] = s * val
    return out


# --------------------------------------------------------------------------
# operations


def jacobiator(pi: BivectorField, point) -> np.ndarray:
    """``1/2 [pi, pi]^{ijk} = pi^{il} d_l pi^{jk} + pi^{jl} d_l pi^{ki} + pi^{kl} d_l pi^{ij}``."""
    pts, single = _as_batch(point)
    tj = pi.jet(pts, 1)
    P, dP = tj.coeffs
    A = np.einsum("bil,bjkl->bijk", P, dP)
    cyc = A + np.transpose(A, (0, 2, 3, 1)) + np.transpose(A, (0, 3, 1, 2))
    return _unbatch(antisymmetrize3(cyc), single)


def _anchor_jet(pi_jet: TensorJet, alpha: TensorJet) -> TensorJet:
    # X_alpha = pi(alpha, .), i.e. X^i = pi^{ji} alpha_j
    return jet_einsum("ji,j->i", pi_jet, alpha)


def _lie_derivative_covector(X: TensorJet, beta: TensorJet) -> np.ndarray:
    # (L_X beta)_i = X^j d_j beta_i + beta_j d_i X^j
    Xv, dX = X.coeffs[:2]
    bv, db = beta.coeffs[:2]
    return np.einsum("bj,bij->bi", Xv, db) + np.einsum("bj,bji->bi", bv, dX)


def koszul_bracket(pi: BivectorField, alpha: CovectorField, beta: CovectorField, point) -> np.ndarray:
    """Koszul bracket ``[a, b]_pi = L_{X_a} b - L_{X_b} a - d(pi(a, b))``.

    Here ``pi(a, b) = pi^{ij} a_i b_j`` and ``X_a = pi(a, .)`` so that
    ``[df, dg] = d{f, g}`` with ``{f, g} = pi^{ij} d_i f d_j g``.
    """
    pts, single = _as_batch(point)
    P = pi.jet(pts, 1)
    a = alpha.jet(pts, 1)
    b = beta.jet(pts, 1)
    return _unbatch(_koszul_from_jets(P, a, b), single)


def _koszul_from_jets(P: TensorJet, a: TensorJet, b: TensorJet) -> np.ndarray:
    Xa = _anchor_jet(P, a)
    Xb = _anchor_jet(P, b)
    pab = jet_einsum("ij,i,j->", P, a, b)
    return _lie_derivative_covector(Xa, b) - _lie_derivative_covector(Xb, a) - pab.coeffs[1]


def poisson_bracket(pi: BivectorField, f: Expression, g: Expression, point) -> np.ndarray:
    """``{f, g} = pi^{ij} d_i f d_j g``."""
    pts, single = _as_batch(point)
    fj = scalar_jet(f, pts, 1, pi.variables)
    gj = scalar_jet(g, pts, 1, pi.variables)
    P = pi.matrix(pts)
    val = np.einsum("bij,bi,bj->b", P, fj.coeffs[1], gj.coeffs[1])
    return _unbatch(val, single)


def _bracket_arrays(X: TensorJet, Y: TensorJet) -> np.ndarray:
    Xv, dX = X.coeffs[:2]
    Yv, dY = Y.coeffs[:2]
    return np.einsum("bj,bij->bi", Xv, dY) - np.einsum("bj,bij->bi", Yv, dX)


def _bracket_jet(X: TensorJet, Y: TensorJet) -> TensorJet:
    # [X, Y]^i = X^j d_j Y^i - Y^j d_j X^i, carried as a jet
    return jet_einsum("j,ij->i", X, Y.d()) - jet_einsum("j,ij->i", Y, X.d())


def vf_lie_bracket(X: VectorField, Y: VectorField, point) -> np.ndarray:
    """``[X, Y]^i = X^j d_j Y^i - Y^j d_j X^i``."""
    pts, single = _as_batch(point)
    return _unbatch(_bracket_arrays(X.jet(pts, 1), Y.jet(pts, 1)), single)


def _torsion_from_jets(N: TensorJet, X: TensorJet, Y: TensorJet) -> np.ndarray:
    NX = jet_einsum("ij,j->i", N, X)
    NY = jet_einsum("ij,j->i", N, Y)
    Nv = N.value
    t = _bracket_arrays(NX, NY)
    t -= np.einsum("bij,bj->bi", Nv, _bracket_arrays(NX, Y) + _bracket_arrays(X, NY))
    t += np.einsum("bij,bjk,bk->bi", Nv, Nv, _bracket_arrays(X, Y))
    return t


def nijenhuis_torsion(N: OneOneTensorField, X: VectorField, Y: VectorField, point) -> np.ndarray:
    """``T_N(X, Y) = [NX, NY] - N([NX, Y] + [X, NY]) + N^2 [X, Y]``."""
    pts, single = _as_batch(point)
    return _unbatch(_torsion_from_jets(N.jet(pts, 1), X.jet(pts, 1), Y.jet(pts, 1)), single)


def torsion_tensor(N: np.ndarray, dN: np.ndarray) -> np.ndarray:
    """Torsion components ``T[c, a, b] = T_N(d_a, d_b)^c`` from values and first derivatives.

    ``N[..., i, j] = N^i_j`` and ``dN[..., i, j, k] = d_k N^i_j``.  Used for
    fields that are only known pointwise (e.g. a realized complex structure).
    """
    # [N d_a, N d_b]^c = N^d_a d_d N^c_b - N^d_b d_d N^c_a
    t1 = np.einsum("...da,...cbd->...cab", N, dN)
    # N^c_e (d_a N^e_b - d_b N^e_a)
    C = np.einsum("...eba->...eab", dN)
    C = C - np.swapaxes(C, -1, -2)
    return t1 - np.swapaxes(t1, -1, -2) - np.einsum("...ce,...eab->...cab", N, C)


@dataclass(frozen=True)
class CentralDifference:
    """Central differences with step ``h``, optionally one Richardson step."""

    h: float = 1e-4
    richardson: bool = True

    def offsets(self) -> list[float]:
        return [self.h, self.h / 2] if self.richardson else [self.h]


@dataclass(frozen=True)
class JetScheme:
    """Use the evaluator's own derivative (``evaluator.derivative``)."""


def fd_gradient(evaluator: Callable, point, scheme: CentralDifference) -> np.ndarray:
    """Derivatives ``D[..., c] = d_c F`` of an array-valued evaluator.

    ``evaluator`` maps an ``(S, m)`` array of points to ``(S, ...)``.  The
    whole stencil is evaluated in one call.
    """
    p = np.asarray(point, dtype=float)
    m = p.shape[0]
    steps = scheme.offsets()
    stencil = []
    for h in steps:
        for c in range(m):
            e = np.zeros(m)
            e[c] = h
            stencil.append(p + e)
            stencil.append(p - e)
    stencil = np.array(stencil)
    vals = np.asarray(evaluator(stencil), dtype=float)
    bad = ~np.all(np.isfinite(vals.reshape(len(stencil), -1)), axis=1)
    if np.any(bad):
        k = int(np.argmax(bad))
        raise StencilError(f"evaluation failed at stencil offset {stencil[k] - p}", stencil[k] - p)
    vals = vals.reshape((len(steps), m, 2) + vals.shape[1:])
    derivs = [(vals[s, :, 0] - vals[s, :, 1]) / (2 * h) for s, h in enumerate(steps)]
    D = derivs[0] if len(steps) == 1 else (4 * derivs[1] - derivs[0]) / 3
    return np.moveaxis(D, 0, -1)


def exterior_derivative_2form(
    w,
    point,
    scheme: CentralDifference | JetScheme | None = None,
) -> np.ndarray:
    """``(dw)_{abc} = d_a w_{bc} - d_b w_{ac} + d_c w_{ab}``.

    ``w`` is a callable mapping ``(S, m)`` points to ``(S, m, m)`` matrices.
    With :class:`JetScheme` it must also provide ``w.derivative(point)``
    returning ``D[a, b, c] = d_c w_{ab}``.
    """
    scheme = CentralDifference() if scheme is None else scheme
    if isinstance(scheme, JetScheme):
        if not hasattr(w, "derivative"):
            raise GeometryError("jet scheme requires an evaluator with a derivative method")
        D = np.asarray(w.derivative(point), dtype=float)
    else:
        D = fd_gradient(w, point, scheme)
    return _d_from_derivative(D)


def _d_from_derivative(D: np.ndarray) -> np.ndarray:
    # D[..., a, b, c] = d_c w_{ab}
    dw = np.einsum("...bca->...abc", D) - np.einsum("...acb->...abc", D) + D
    return antisymmetrize3(dw)


def exterior_derivative_1form(theta, point, scheme: CentralDifference | None = None) -> np.ndarray:
    """``(d theta)_{ab} = d_a theta_b - d_b theta_a`` for an evaluator or covector field."""
    if isinstance(theta, CovectorField):
        pts, single = _as_batch(point)
        dth = theta.jet(pts, 1).coeffs[1]
        D = np.swapaxes(dth, -1, -2)
        return _unbatch(D - np.swapaxes(D, -1, -2), single)
    D = fd_gradient(theta, point, scheme or CentralDifference())  # D[b, a] = d_a theta_b
    D = np.swapaxes(D, -1, -2)
    return D - np.swapaxes(D, -1, -2)


def pullback_2form(J, w_img) -> TwoFormMatrix:
    """Pull back ``w_img`` through a map with Jacobian ``J``: ``J^T w J``."""
    Jm = np.asarray(J, dtype=float)
    W = np.asarray(w_img, dtype=float)
    if Jm.ndim != 2 or W.ndim != 2 or W.shape[0] != W.shape[1] or Jm.shape[0] != W.shape[0]:
        raise GeometryError(f"cannot pull back a {W.shape} form through a {Jm.shape} Jacobian")
    out = Jm.T @ W @ Jm
    return TwoFormMatrix(0.5 * (out - out.T))


__all__ = [
    "BivectorField",
    "CentralDifference",
    "CovectorField",
    "GeometryError",
    "JetScheme",
    "OneOneTensorField",
    "StencilError",
    "TensorJet",
    "TwoFormField",
    "TwoFormMatrix",
    "VectorField",
    "antisymmetrize3",
    "exterior_derivative_1form",
    "exterior_derivative_2form",
    "fd_gradient",
    "field_jet",
    "jacobiator",
    "jet_einsum",
    "koszul_bracket",
    "nijenhuis_torsion",
    "omega_can",
    "poisson_bracket",
    "pullback_2form",
    "scalar_jet",
    "torsion_tensor",
    "vf_lie_bracket",
]
