"""Verification reports with byte-reproducible JSON output."""

from __future__ import annotations

import hashlib
import json
import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Callable, Iterable, Sequence

import numpy as np


def format_float(x: float) -> str:
    """17 significant digits; ``nan``/``inf`` become JSON-safe strings."""
    x = float(x)
    if math.isnan(x):
        return '"nan"'
    if math.isinf(x):
        return '"inf"' if x > 0 else '"-inf"'
    return format(x, ".17g")


def _encode(obj, indent: int, level: int) -> str:
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if obj is None:
        return "null"
    if isinstance(obj, bool):
        return "true" if obj else "false"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return format_float(obj)
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        return _encode(obj.tolist(), indent, level)
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.floating, np.integer)) and not isinstance(v, bool) for v in obj):
            return "[" + ", ".join(_encode(v, indent, level) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot encode {type(obj).__name__}")


def dumps(obj, indent: int = 2) -> str:
    """Deterministic JSON with fixed float formatting and insertion-ordered keys."""
    return _encode(obj, indent, 0) + "\n"


def spec_hash(text: str | bytes) -> str:
    data = text.encode() if isinstance(text, str) else text
    return hashlib.sha256(data).hexdigest()


def thread_count(default: int = 1) -> int:
    """Worker cap from ``REALIZE_THREADS`` (at least 1)."""
    raw = os.environ.get("REALIZE_THREADS")
    if not raw:
        return default
    try:
        return max(1, int(raw))
    except ValueError:
        return default


def ordered_map(fn: Callable, items: Sequence, threads: int = 1) -> list:
    """Map preserving input order regardless of completion order."""
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))


@dataclass
class CheckSpec:
    tolerance: float
    kind: str = "max"  # "max": residual <= tol; "min": margin >= tol


@dataclass
class PointRecord:
    index: int
    point: np.ndarray
    inside_U: bool
    residuals: dict[str, float]
    margins: dict[str, float]
    failure_time: float | None = None

    def to_dict(self) -> dict:
        out = {"index": self.index, "point": [float(v) for v in self.point], "inside_U": self.inside_U}
        if self.failure_time is not None:
            out["failure_time"] = float(self.failure_time)
        out["residuals"] = {k: float(v) for k, v in self.residuals.items()}
        out["margins"] = {k: float(v) for k, v in self.margins.items()}
        return out


@dataclass
class VerificationReport:
    """Residual table with per-check aggregates.

    Aggregate maxima (or minima, for margins) are always recomputed from the
    per-point records.  Global checks that do not depend on a sample point
    are stored in ``globals``.
    """

    kind: str
    options: dict = field(default_factory=dict)
    spec_hash: str = ""
    checks: dict[str, CheckSpec] = field(default_factory=dict)
    points: list[PointRecord] = field(default_factory=list)
    globals: dict[str, float] = field(default_factory=dict)
    notes: list[str] = field(default_factory=list)
    wall_time: float | None = None

    def declare(self, name: str, tolerance: float, kind: str = "max") -> None:
        self.checks[name] = CheckSpec(float(tolerance), kind)

    def add_point(self, point, inside: bool, residuals: dict, margins: dict, failure_time=None) -> PointRecord:
        rec = PointRecord(len(self.points), np.asarray(point, dtype=float), bool(inside), dict(residuals), dict(margins), failure_time)
        self.points.append(rec)
        return rec

    def add_global(self, name: str, value: float, tolerance: float, kind: str = "max") -> None:
        self.declare(name, tolerance, kind)
        self.globals[name] = float(value)

    def values(self, name: str) -> list[float]:
        vals = [r.residuals.get(name, r.margins.get(name)) for r in self.points if r.inside_U]
        vals = [v for v in vals if v is not None]
        if name in self.globals:
            vals.append(self.globals[name])
        return vals

    def aggregate(self) -> dict[str, dict]:
        out = {}
        for name, spec in self.checks.items():
            vals = self.values(name)
            if not vals:
                out[name] = {"value": None, "tolerance": spec.tolerance, "kind": spec.kind, "passed": None}
                continue
            arr = np.asarray(vals, dtype=float)
            if spec.kind == "min":
                v = float(np.min(np.where(np.isnan(arr), -np.inf, arr)))
                passed = v >= spec.tolerance
            else:
                v = float(np.max(np.where(np.isnan(arr), np.inf, arr)))
                passed = v <= spec.tolerance
            out[name] = {"value": v, "tolerance": spec.tolerance, "kind": spec.kind, "passed": bool(passed)}
        return out

    @property
    def inside_count(self) -> int:
        return sum(r.inside_U for r in self.points)

    @property
    def all_outside(self) -> bool:
        return bool(self.points) and self.inside_count == 0

    @property
    def passed(self) -> bool:
        agg = self.aggregate()
        return not self.all_outside and all(a["passed"] is not False for a in agg.values())

    def failed_checks(self) -> list[str]:
        return [k for k, a in self.aggregate().items() if a["passed"] is False]

    def max(self, name: str) -> float:
        a = self.aggregate()[name]["value"]
        return float("nan") if a is None else a

    def merge(self, other: "VerificationReport", prefix: str = "") -> None:
        """Append another report's checks (prefixed) onto matching points."""
        for name, spec in other.checks.items():
            self.checks[prefix + name] = spec
        for name, v in other.globals.items():
            self.globals[prefix + name] = v
        if not self.points:
            for r in other.points:
                self.add_point(r.point, r.inside_U, {}, {}, r.failure_time)
        for mine, theirs in zip(self.points, other.points):
            mine.inside_U = mine.inside_U and theirs.inside_U
            mine.residuals.update({prefix + k: v for k, v in theirs.residuals.items()})
            mine.margins.update({prefix + k: v for k, v in theirs.margins.items()})
            if theirs.failure_time is not None:
                mine.failure_time = theirs.failure_time

    def to_dict(self, include_timing: bool = False) -> dict:
        agg = self.aggregate()
        out = {
            "kind": self.kind,
            "spec_hash": self.spec_hash,
            "options": self.options,
            "summary": {
                "passed": self.passed,
                "points": len(self.points),
                "inside_U": self.inside_count,
                "failed_checks": [k for k, a in agg.items() if a["passed"] is False],
            },
            "aggregate": agg,
            "globals": self.globals,
            "points": [r.to_dict() for r in self.points],
        }
        if self.notes:
            out["notes"] = list(self.notes)
        if include_timing and self.wall_time is not None:
            out["summary"]["wall_time"] = float(self.wall_time)
        return out

    def to_json(self, include_timing: bool = False) -> str:
        return dumps(self.to_dict(include_timing))

    def summary_lines(self) -> list[str]:
        lines = []
        for name, a in self.aggregate().items():
            status = {True: "PASS", False: "FAIL", None: "SKIP"}[a["passed"]]
            cmp = ">=" if a["kind"] == "min" else "<="
            val = "n/a" if a["value"] is None else f"{a['value']:.3e}"
            lines.append(f"{status} {name}: {val} ({cmp} {a['tolerance']:.1e})")
        return lines


__all__ = [
    "CheckSpec",
    "PointRecord",
    "VerificationReport",
    "dumps",
    "format_float",
    "ordered_map",
    "spec_hash",
    "thread_count",
]
