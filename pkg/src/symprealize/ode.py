"""Batched adaptive Dormand-Prince 5(4) integrator.

All members of a batch share one step sequence (the error norm is the max
over the batch).  This matters for finite-difference stencils: neighbouring
initial conditions see the same discrete map, so differences of endpoints
are smooth in the initial data.  Steps are clipped to land exactly on each
requested output time.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

# Dormand-Prince tableau; the last row doubles as the 5th-order weights
_A = [
    [],
    [1 / 5],
    [3 / 40, 9 / 40],
    [44 / 45, -56 / 15, 32 / 9],
    [19372 / 6561, -25360 / 2187, 64448 / 6561, -212 / 729],
    [9017 / 3168, -355 / 33, 46732 / 5247, 49 / 176, -5103 / 18656],
    [35 / 384, 0.0, 500 / 1113, 125 / 192, -2187 / 6784, 11 / 84],
]
_E = np.array([71 / 57600, 0.0, -71 / 16695, 71 / 1920, -17253 / 339200, 22 / 525, -1 / 40])


@dataclass(frozen=True)
class SolverOptions:
    """Tolerances and guards for the adaptive integrator."""

    rtol: float = 1e-10
    atol: float = 1e-12
    min_step: float = 1e-10
    max_steps: int = 200_000
    max_norm: float = 1e8
    first_step: float | None = None

    def __post_init__(self):
        if not (self.rtol > 0 and self.atol > 0):
            raise ValueError("tolerances must be positive")


@dataclass
class OdeSolution:
    success: bool
    t: np.ndarray
    y: np.ndarray  # (len(t), B, d)
    steps: int
    rejected: int
    error_estimate: float
    failure_time: float | None = None
    message: str = ""


def _norm(e: np.ndarray, y0: np.ndarray, y1: np.ndarray, opts: SolverOptions) -> float:
    scale = opts.atol + opts.rtol * np.maximum(np.abs(y0), np.abs(y1))
    return float(np.max(np.abs(e) / scale)) if e.size else 0.0


def _initial_step(f, y0, f0, opts: SolverOptions) -> float:
    # Hairer-Norsett-Wanner starting step heuristic
    scale = opts.atol + np.abs(y0) * opts.rtol
    d0 = np.max(np.abs(y0) / scale)
    d1 = np.max(np.abs(f0) / scale)
    h0 = 1e-6 if d0 < 1e-5 or d1 < 1e-5 else 0.01 * d0 / d1
    y1 = y0 + h0 * f0
    f1 = f(y1)
    d2 = np.max(np.abs(f1 - f0) / scale) / h0
    if max(d1, d2) <= 1e-15:
        h1 = max(1e-6, h0 * 1e-3)
    else:
        h1 = (0.01 / max(d1, d2)) ** (1 / 5)
    return min(100 * h0, h1)


def integrate(
    f: Callable[[np.ndarray], np.ndarray],
    y0,
    t_eval: Sequence[float],
    opts: SolverOptions | None = None,
) -> OdeSolution:
    """Integrate autonomous ``y' = f(y)`` from ``t = 0`` through every time in ``t_eval``.

    ``y0`` has shape ``(B, d)``; ``f`` maps ``(B, d)`` to ``(B, d)``.  Output
    times must be sorted and non-negative.  Failure (step underflow, step
    budget, non-finite or diverging state) is reported, never raised.
    """
    opts = opts or SolverOptions()
    y = np.array(y0, dtype=float)
    if y.ndim != 2:
        raise ValueError("y0 must have shape (B, d)")
    times = np.asarray(t_eval, dtype=float)
    if times.ndim != 1 or np.any(np.diff(times) < 0) or (times.size and times[0] < 0):
        raise ValueError("t_eval must be sorted and non-negative")
    out = np.empty((times.size,) + y.shape)
    t = 0.0
    k = 0
    while k < times.size and times[k] == 0.0:
        out[k] = y
        k += 1
    steps = rejected = 0
    err_max = 0.0
    if k == times.size:
        return OdeSolution(True, times, out, 0, 0, 0.0)
    fy = f(y)
    if not np.all(np.isfinite(fy)):
        return OdeSolution(False, times, out, 0, 0, np.inf, 0.0, "non-finite vector field")
    h = opts.first_step or _initial_step(f, y, fy, opts)
    stages = [None] * 7
    while k < times.size:
        target = times[k]
        if steps + rejected >= opts.max_steps:
            return OdeSolution(False, times, out, steps, rejected, err_max, t, "step budget exhausted")
        land = False
        h_full = h
        if t + h >= target - 1e-14 * max(1.0, abs(target)):
            h = target - t
            land = True
        stages[0] = fy
        for s in range(1, 7):
            acc = y.copy()
            for j, a in enumerate(_A[s]):
                if a != 0.0:
                    acc += (h * a) * stages[j]
            if s == 6:
                y_new = acc
            stages[s] = f(acc)
        if not all(np.all(np.isfinite(st)) for st in stages):
            err = np.inf
        else:
            e = h * sum(c * st for c, st in zip(_E, stages) if c != 0.0)
            err = _norm(e, y, y_new, opts)
        if err <= 1.0:
            t = target if land else t + h
            y = y_new
            fy = stages[6]
            steps += 1
            err_max = max(err_max, err)
            if np.max(np.abs(y)) > opts.max_norm:
                return OdeSolution(False, times, out, steps, rejected, err_max, t, "solution diverged")
            while k < times.size and land and times[k] == target:
                out[k] = y
                k += 1
            fac = 5.0 if err == 0 else min(5.0, max(0.2, 0.9 * err ** (-1 / 5)))
            h = max(h_full, h * fac) if land else h * fac
        else:
            rejected += 1
            fac = 0.2 if not np.isfinite(err) else max(0.2, 0.9 * err ** (-1 / 5))
            h *= fac
            if h < opts.min_step:
                return OdeSolution(False, times, out, steps, rejected, err_max, t, "step size underflow")
    return OdeSolution(True, times, out, steps, rejected, err_max)


__all__ = ["OdeSolution", "SolverOptions", "integrate"]
