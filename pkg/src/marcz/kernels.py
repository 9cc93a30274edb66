"""Backend selection and shared probe machinery for ratio optimization.

The hot loop (coordinate line search over weighted |.|^p power sums) lives in
the compiled extension marcz._power_ratio when the build produced it, with a
pure numpy twin as fallback.  Selection happens once at import; set
MARCZ_FORCE_FALLBACK=1 to insist on the numpy path (used by the benchmark and
the backend-agreement tests).
"""

from __future__ import annotations

import os

import numpy as np

from . import _power_ratio_np
from .parallel import det_map

try:
    from . import _power_ratio as _compiled
except ImportError:  # extension not built; numpy twin takes over
    _compiled = None

if _compiled is not None and os.environ.get("MARCZ_FORCE_FALLBACK", "") != "1":
    _impl = _compiled
    HAVE_COMPILED = True
else:
    _impl = _power_ratio_np
    HAVE_COMPILED = False

BACKEND = "compiled" if HAVE_COMPILED else "numpy"

# 16 magnitudes, both signs: 32 log-spaced steps per coordinate per sweep
STEP_MAGS = np.logspace(-7.0, 0.0, 16)
MAX_SWEEPS = 200
REL_TOL = 1e-10


def get_backend(name: str):
    """Return a kernel module by name ('compiled' or 'numpy'); None if absent."""
    if name == "compiled":
        return _compiled
    if name == "numpy":
        return _power_ratio_np
    raise ValueError(f"unknown backend {name!r}")


def refine_ratio(A, w_num, w_den, p, c0, maximize, max_iter=MAX_SWEEPS,
                 rel_tol=REL_TOL, impl=None, step_mags=None):
    """Refine one start vector; returns (locally optimal ratio, unit coeffs)."""
    mod = _impl if impl is None else impl
    A = np.ascontiguousarray(A, dtype=np.float64)
    mags = STEP_MAGS if step_mags is None else np.asarray(step_mags, dtype=np.float64)
    return mod.refine_ratio(
        A,
        np.ascontiguousarray(w_num, dtype=np.float64),
        np.ascontiguousarray(w_den, dtype=np.float64),
        float(p),
        np.ascontiguousarray(c0, dtype=np.float64),
        bool(maximize),
        int(max_iter),
        float(rel_tol),
        np.ascontiguousarray(mags),
    )


def eval_ratio(A, w_num, w_den, p, c):
    """Plain (unrefined) ratio of weighted power sums at coefficients c."""
    y = np.asarray(A) @ np.asarray(c)
    v = np.abs(y) ** p if p not in (1.0, 2.0) else (np.abs(y) if p == 1.0 else y * y)
    den = float(np.dot(np.asarray(w_den, dtype=np.float64), v))
    if den <= 0.0:
        raise ValueError("denominator vanishes")
    return float(np.dot(np.asarray(w_num, dtype=np.float64), v)) / den


def probe_starts(n: int, budget: int, seed, coords: bool = True) -> np.ndarray:
    """Probe start vectors: `budget` seeded random unit vectors, then (when
    `coords`) the n coordinate directions.  Randomness for probe j comes from
    (seed, j) only, so the set is identical for any worker count or
    evaluation order.  seed may be an int or a tuple of ints."""
    base = (seed,) if isinstance(seed, (int, np.integer)) else tuple(seed)
    extra = n if coords else 0
    starts = np.empty((budget + extra, n))
    for j in range(budget):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=base + (j,)))
        v = rng.standard_normal(n)
        nv = np.linalg.norm(v)
        while nv < 1e-12:  # essentially impossible; keeps the contract total
            v = rng.standard_normal(n)
            nv = np.linalg.norm(v)
        starts[j] = v / nv
    if coords:
        starts[budget:] = np.eye(n)
    return starts


def probe_optimize(A, w_num, w_den, p, starts, maximize, max_iter=MAX_SWEEPS,
                   rel_tol=REL_TOL, step_mags=None):
    """Refine every start; returns the refined values in start order."""
    A = np.ascontiguousarray(A, dtype=np.float64)
    wn = np.ascontiguousarray(w_num, dtype=np.float64)
    wd = np.ascontiguousarray(w_den, dtype=np.float64)

    def task(c0):
        val, _ = refine_ratio(A, wn, wd, p, c0, maximize, max_iter, rel_tol,
                              step_mags=step_mags)
        return val

    return np.array(det_map(task, list(starts)))
