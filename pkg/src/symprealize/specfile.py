"""Manifold spec files (JSON) and the built-in catalog.

A spec is a single JSON object::

    {"kind": "poisson" | "poisson-nijenhuis" | "holomorphic",
     "dim": 3,
     "pi": {"1,2": "x3", "1,3": "-x2", "2,3": "x1"},
     "connection": "flat"  or  {"k,i,j": "expr", ...},
     "N": [["1", "0"], ["0", "1"]]}

Indices are 1-based.  ``pi`` lists the upper triangle ``pi^{ij}``, ``i < j``;
connection keys ``"k,i,j"`` give ``Gamma^k_{ij}``.  For ``holomorphic``
specs ``dim`` is the complex dimension ``n``, entries of ``pi`` are
``{"re": ..., "im": ...}`` pairs in ``x1..xn, y1..yn``, and the connection
lives on the real chart of dimension ``2n``.
"""

from __future__ import annotations

import json
import re
from dataclasses import dataclass
from pathlib import Path

from .expr import ExprError, coordinate_names, parse
from .geometry import BivectorField, GeometryError, OneOneTensorField
from .holomorphic import HolomorphicPoissonSpec
from .report import spec_hash
from .spray import ConnectionCoefficients

KINDS = ("poisson", "poisson-nijenhuis", "holomorphic")


class SpecError(ValueError):
    pass


@dataclass
class ManifoldSpec:
    kind: str
    dim: int
    name: str
    document: dict
    pi: BivectorField
    conn: ConnectionCoefficients
    N: OneOneTensorField | None = None
    holomorphic: HolomorphicPoissonSpec | None = None

    @property
    def chart_dim(self) -> int:
        """Real dimension of the base chart."""
        return self.pi.dim

    @property
    def variables(self) -> tuple[str, ...]:
        return self.pi.variables

    @property
    def canonical_text(self) -> str:
        return json.dumps(self.document, sort_keys=True, separators=(",", ":"))

    @property
    def hash(self) -> str:
        return spec_hash(self.canonical_text)


def _indices(key: str, count: int, bound: int, what: str) -> tuple[int, ...]:
    parts = [p.strip() for p in str(key).split(",")]
    if len(parts) != count or not all(p.isdigit() for p in parts):
        raise SpecError(f"{what} key {key!r} must be {count} comma-separated 1-based indices")
    idx = tuple(int(p) - 1 for p in parts)
    if any(i < 0 or i >= bound for i in idx):
        raise SpecError(f"{what} key {key!r} out of range 1..{bound}")
    return idx


def _expr(text, variables, where: str):
    if isinstance(text, (int, float)) and not isinstance(text, bool):
        text = repr(float(text))
    if not isinstance(text, str):
        raise SpecError(f"{where}: expression must be a string")
    try:
        return parse(text, variables)
    except ExprError as exc:
        raise SpecError(f"{where}: {exc}") from exc


def build_spec(doc: dict, name: str = "") -> ManifoldSpec:
    """Validate a spec document and build its fields."""
    if not isinstance(doc, dict):
        raise SpecError("spec must be a JSON object")
    kind = doc.get("kind")
    if kind not in KINDS:
        raise SpecError(f"kind must be one of {KINDS}, got {kind!r}")
    dim = doc.get("dim")
    if not isinstance(dim, int) or isinstance(dim, bool) or dim < 1:
        raise SpecError("dim must be a positive integer")
    unknown = set(doc) - {"kind", "dim", "pi", "connection", "N", "name", "description"}
    if unknown:
        raise SpecError(f"unknown spec fields {sorted(unknown)}")
    pi_doc = doc.get("pi", {})
    if not isinstance(pi_doc, dict):
        raise SpecError("pi must be an object of upper-triangle entries")
    try:
        holo = None
        if kind == "holomorphic":
            variables = coordinate_names(dim, holomorphic=True)
            comps = {}
            for key, val in pi_doc.items():
                j, k = _indices(key, 2, dim, "pi")
                if j >= k:
                    raise SpecError(f"pi key {key!r} must have i < j")
                if not isinstance(val, dict) or set(val) - {"re", "im"}:
                    raise SpecError(f"pi[{key}] must be an object with 're' and 'im'")
                comps[(j, k)] = (
                    _expr(val.get("re", "0"), variables, f"pi[{key}].re"),
                    _expr(val.get("im", "0"), variables, f"pi[{key}].im"),
                )
            holo = HolomorphicPoissonSpec(dim, comps)
            from .holomorphic import split_holomorphic

            _, pi, _ = split_holomorphic(holo)
            real_dim = 2 * dim
        else:
            variables = coordinate_names(dim)
            comps = {}
            for key, val in pi_doc.items():
                i, j = _indices(key, 2, dim, "pi")
                if i >= j:
                    raise SpecError(f"pi key {key!r} must have i < j")
                comps[(i, j)] = _expr(val, variables, f"pi[{key}]")
            pi = BivectorField(dim, comps, variables)
            real_dim = dim
        conn_doc = doc.get("connection", "flat")
        if conn_doc == "flat":
            conn = ConnectionCoefficients.flat_connection(real_dim, variables)
        elif isinstance(conn_doc, dict):
            gamma = {}
            for key, val in conn_doc.items():
                gamma[_indices(key, 3, real_dim, "connection")] = _expr(val, variables, f"connection[{key}]")
            conn = ConnectionCoefficients(real_dim, gamma, variables)
        else:
            raise SpecError('connection must be "flat" or an object of Gamma^k_ij entries')
        N = None
        if "N" in doc:
            if kind != "poisson-nijenhuis":
                raise SpecError("N is only allowed for poisson-nijenhuis specs")
            rows = doc["N"]
            if not isinstance(rows, list) or len(rows) != dim or any(not isinstance(r, list) or len(r) != dim for r in rows):
                raise SpecError(f"N must be a {dim}x{dim} list of expressions")
            N = OneOneTensorField(
                [[_expr(v, variables, f"N[{i + 1}][{j + 1}]") for j, v in enumerate(r)] for i, r in enumerate(rows)],
                variables,
            )
        elif kind == "poisson-nijenhuis":
            raise SpecError("poisson-nijenhuis specs need N")
    except GeometryError as exc:
        raise SpecError(str(exc)) from exc
    return ManifoldSpec(kind, dim, name or doc.get("name", ""), doc, pi, conn, N, holo)


def _zero(n: int) -> dict:
    return {"kind": "holomorphic", "dim": n, "pi": {}, "connection": "flat",
            "description": f"zero holomorphic Poisson structure on C^{n}"}


CATALOG: dict[str, dict] = {
    "zero": _zero(2),
    "const-c2": {
        "kind": "holomorphic",
        "dim": 2,
        "pi": {"1,2": {"re": "1", "im": "0.5"}},
        "connection": "flat",
        "description": "constant (1 + 0.5i) dz1^dz2 on C^2",
    },
    "so3": {
        "kind": "poisson",
        "dim": 3,
        "pi": {"1,2": "x3", "1,3": "-x2", "2,3": "x1"},
        "connection": "flat",
        "description": "Lie-Poisson structure of so(3) on R^3",
    },
    "sl2": {
        "kind": "holomorphic",
        "dim": 3,
        "pi": {
            "1,2": {"re": "2*x2", "im": "2*y2"},
            "1,3": {"re": "-2*x3", "im": "-2*y3"},
            "2,3": {"re": "x1", "im": "y1"},
        },
        "connection": "flat",
        "description": "linear holomorphic Lie-Poisson structure of sl(2,C) on C^3",
    },
    "quad-c2": {
        "kind": "holomorphic",
        "dim": 2,
        "pi": {"1,2": {"re": "x1*x2 - y1*y2", "im": "x1*y2 + x2*y1"}},
        "connection": "flat",
        "description": "z1 z2 dz1^dz2 on C^2",
    },
    "log-canonical-c2": {
        "kind": "holomorphic",
        "dim": 2,
        "pi": {"1,2": {"re": "0.7*(x1*x2 - y1*y2) + 0.4*(x1*y2 + x2*y1)",
                       "im": "0.7*(x1*y2 + x2*y1) - 0.4*(x1*x2 - y1*y2)"}},
        "connection": "flat",
        "description": "log-canonical q z1 z2 dz1^dz2 with q = 0.7 - 0.4i",
    },
    "pn-r2": {
        "kind": "poisson-nijenhuis",
        "dim": 2,
        "pi": {"1,2": "1"},
        "N": [["1 + 0.3*x1 + 0.2*x2^2", "0"], ["0", "1 + 0.3*x1 + 0.2*x2^2"]],
        "connection": "flat",
        "description": "canonical R^2 with the Nijenhuis tensor f(x) Id",
    },
}

_ZERO_N = re.compile(r"zero-(\d+)")


def catalog_names() -> list[str]:
    return list(CATALOG) + ["zero-1", "zero-2", "zero-3"]


def catalog_document(name: str) -> dict:
    if name in CATALOG:
        return json.loads(json.dumps(CATALOG[name]))
    m = _ZERO_N.fullmatch(name)
    if m and int(m.group(1)) >= 1:
        return _zero(int(m.group(1)))
    raise SpecError(f"unknown catalog entry {name!r}; try one of {catalog_names()}")


def load_spec(source: str) -> ManifoldSpec:
    """Load ``catalog:<name>`` or a JSON file path."""
    if source.startswith("catalog:"):
        name = source.split(":", 1)[1]
        return build_spec(catalog_document(name), name)
    path = Path(source)
    try:
        text = path.read_text()
    except OSError as exc:
        raise SpecError(f"cannot read spec file {source}: {exc.strerror}") from exc
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise SpecError(f"invalid JSON in {source}: {exc}") from exc
    return build_spec(doc, path.stem)


__all__ = ["CATALOG", "KINDS", "ManifoldSpec", "SpecError", "build_spec", "catalog_document", "catalog_names", "load_spec"]
