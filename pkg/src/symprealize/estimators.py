"""scikit-learn style wrapper around the realization code.

The transformer maps cotangent points ``(S, 2m)`` to the flattened entries
of the realized form(s).  Rows for points whose flow leaves the domain are
``nan``.
"""

from __future__ import annotations

import numpy as np
from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_array, check_is_fitted

from .holomorphic import HolomorphicRealization, build_holomorphic_omega, build_underline_J, holomorphic_bivector
from .realization import RealizationOptions, realization_bivector, realize_batch
from .specfile import ManifoldSpec, build_spec, load_spec
from .spray import build_spray


class RealizationTransformer(TransformerMixin, BaseEstimator):
    """Realized symplectic forms as features.

    Parameters
    ----------
    spec : str, dict or ManifoldSpec
        ``catalog:<name>``, a JSON path, a spec document or a built spec.
    quad_nodes, rtol, atol : quadrature and ODE settings.

    Output columns are the row-major entries of ``omega`` (poisson), of
    ``omega`` then ``omega_N`` (poisson-nijenhuis) or of ``omega_R`` then
    ``omega_I`` (holomorphic).
    """

    def __init__(self, spec="catalog:so3", quad_nodes: int = 16, rtol: float = 1e-10, atol: float = 1e-12):
        self.spec = spec
        self.quad_nodes = quad_nodes
        self.rtol = rtol
        self.atol = atol

    def _resolve(self) -> ManifoldSpec:
        if isinstance(self.spec, ManifoldSpec):
            return self.spec
        if isinstance(self.spec, dict):
            return build_spec(self.spec)
        return load_spec(str(self.spec))

    def fit(self, X=None, y=None):
        self.spec_ = self._resolve()
        self.options_ = RealizationOptions(quad_nodes=self.quad_nodes, rtol=self.rtol, atol=self.atol)
        self.n_features_in_ = 2 * self.spec_.chart_dim
        if X is not None:
            self._check(X)
        if self.spec_.kind == "holomorphic":
            self._hr = HolomorphicRealization(self.spec_.holomorphic, self.spec_.conn, self.options_)
        else:
            self._xi = build_spray(self.spec_.pi, self.spec_.conn)
        return self

    def _check(self, X) -> np.ndarray:
        X = check_array(X, dtype=float)
        if X.shape[1] != self.n_features_in_:
            raise ValueError(f"X has {X.shape[1]} features, expected {self.n_features_in_}")
        return X

    def _forms(self, z: np.ndarray) -> list[np.ndarray] | None:
        if self.spec_.kind == "holomorphic":
            res = realize_batch(self._hr.xi, z[None], self.options_, ("conj", "omega"), T=self._hr.Jm)
            return None if not res.success else [res.forms["conj"][0], res.forms["omega"][0]]
        kinds = ("omega", "twisted") if self.spec_.kind == "poisson-nijenhuis" else ("omega",)
        res = realize_batch(self._xi, z[None], self.options_, kinds, N=self.spec_.N)
        return None if not res.success else [res.forms[k][0] for k in kinds]

    def transform(self, X) -> np.ndarray:
        check_is_fitted(self, "spec_")
        X = self._check(X)
        d = self.n_features_in_
        blocks = 1 if self.spec_.kind == "poisson" else 2
        out = np.full((X.shape[0], blocks * d * d), np.nan)
        for i, z in enumerate(X):
            forms = self._forms(z)
            if forms is not None:
                out[i] = np.concatenate([f.reshape(-1) for f in forms])
        return out

    def bivector(self, X) -> np.ndarray:
        """Realization bivector per point, ``(S, 2m, 2m)``; complex for holomorphic specs."""
        check_is_fitted(self, "spec_")
        X = self._check(X)
        d = self.n_features_in_
        holo = self.spec_.kind == "holomorphic"
        out = np.full((X.shape[0], d, d), np.nan, dtype=complex if holo else float)
        for i, z in enumerate(X):
            forms = self._forms(z)
            if forms is None:
                continue
            if holo:
                WR, WI = forms
                out[i] = holomorphic_bivector(build_holomorphic_omega(WR, WI), build_underline_J(WR, WI))
            else:
                out[i] = realization_bivector(forms[0])
        return out

    def score(self, X, y=None) -> float:
        """Negative worst realization residual ``|Pi_xx - pi(x)|`` over the rows inside U."""
        P = self.bivector(X)
        X = self._check(X)
        m = self.spec_.chart_dim
        worst = 0.0
        for z, Pz in zip(X, P):
            if np.isnan(Pz).any():
                continue
            if self.spec_.kind == "holomorphic":
                err = max(
                    np.max(np.abs(Pz.real[:m, :m] - self._hr.pi_R.matrix(z[:m]))),
                    np.max(np.abs(Pz.imag[:m, :m] - self._hr.pi_I.matrix(z[:m]))),
                )
            else:
                err = np.max(np.abs(Pz[:m, :m] - self.spec_.pi.matrix(z[:m])))
            worst = max(worst, float(err))
        return -worst

    def get_feature_names_out(self, input_features=None) -> np.ndarray:
        check_is_fitted(self, "spec_")
        d = self.n_features_in_
        labels = {"poisson": ["omega"], "poisson-nijenhuis": ["omega", "omegaN"], "holomorphic": ["omegaR", "omegaI"]}
        names = [f"{lab}_{a + 1}_{b + 1}" for lab in labels[self.spec_.kind] for a in range(d) for b in range(d)]
        return np.asarray(names, dtype=object)


__all__ = ["RealizationTransformer"]
