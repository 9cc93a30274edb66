"""Two-sided bounds A, B for discrete-to-continuous norm ratios over a
subspace: A <= (1/|I|) sum_{i in I} |f(x_i)|^p / ||f||_{L_p(mu)}^p <= B for
all f in the span of the system.

p = 2 is exact (spectral); p in [1, 2) is probe based with one-sided
semantics: A_est over-estimates the true minimum and B_est under-estimates
the true maximum, so a probe-based "passed" is an unverified claim while a
probe-based failure is a proof of failure.  A brute-force sphere sweep is
available for dim <= 3 as an oracle.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Optional

import numpy as np

from . import kernels
from .subspace import OrthonormalSystem


@dataclass(frozen=True)
class RestrictedNorm:
    """Norm of function values restricted to an index multiset.

    normalization 'mean' is ((1/|I|) sum |v_i|^p)^(1/p); 'sum' drops the
    1/|I|.  p = inf ignores the normalization and takes the max.
    """

    subset: np.ndarray
    exponent: float
    normalization: str = "mean"

    def __post_init__(self):
        object.__setattr__(self, "subset", np.asarray(self.subset, dtype=np.int64))
        if self.subset.size == 0:
            raise ValueError("subset must be nonempty")
        if not (self.exponent >= 1.0):
            raise ValueError(f"exponent must be >= 1, got {self.exponent}")
        if self.normalization not in ("mean", "sum"):
            raise ValueError(f"unknown normalization {self.normalization!r}")

    def of(self, values: np.ndarray) -> float:
        return discrete_norm(values, self.subset, self.exponent, self.normalization)


def discrete_norm(values, subset=None, p: float = 2.0,
                  normalization: str = "mean") -> float:
    """Power-mean norm of `values` over `subset` (all points when None)."""
    v = np.asarray(values, dtype=np.float64)
    if subset is not None:
        v = v[np.asarray(subset, dtype=np.int64)]
    if v.size == 0:
        raise ValueError("empty value set")
    if math.isinf(p):
        return float(np.max(np.abs(v)))
    if p < 1.0:
        raise ValueError(f"p must be >= 1 or inf, got {p}")
    s = float(np.sum(np.abs(v) ** p))
    if normalization == "mean":
        s /= v.size
    elif normalization != "sum":
        raise ValueError(f"unknown normalization {normalization!r}")
    return s ** (1.0 / p)


def _subset_weights(system: OrthonormalSystem, subset, weights) -> np.ndarray:
    """Numerator weights on grid rows: counts/|I| for plain subsets, or the
    given quadrature weights aggregated by index."""
    idx = np.asarray(subset, dtype=np.int64)
    if idx.ndim != 1 or idx.size == 0:
        raise ValueError("subset must be a nonempty 1-d index list")
    M = system.m_points
    if np.any(idx < 0) or np.any(idx >= M):
        raise ValueError("subset indices out of range")
    if weights is None:
        return np.bincount(idx, minlength=M).astype(np.float64) / idx.size
    lam = np.asarray(weights, dtype=np.float64)
    if lam.shape != idx.shape:
        raise ValueError("weights must match the subset length")
    if np.any(lam < 0.0):
        raise ValueError("quadrature weights must be nonnegative")
    return np.bincount(idx, weights=lam, minlength=M)


def ratio_extremes_l2(system: OrthonormalSystem, subset, weights=None):
    """Exact (A, B) for p = 2: extreme eigenvalues of the weighted Gram
    matrix of the subset in the orthonormal coefficient basis."""
    w = _subset_weights(system, subset, weights)
    G = system.values.T @ (w[:, None] * system.values)
    evals = np.linalg.eigvalsh(G)
    return float(evals[0]), float(evals[-1])


def ratio_extremes_lp(system: OrthonormalSystem, subset, p: float,
                      probe_budget: int = 64, seed: int = 0, weights=None,
                      max_iter: int = kernels.MAX_SWEEPS,
                      rel_tol: float = kernels.REL_TOL,
                      step_mags=None, include_coord_starts: bool = True):
    """Probe-based (A_est, B_est) for p in [1, 2].

    Probes are `probe_budget` seeded random unit coefficient vectors plus
    (by default) all n coordinate directions; each start is refined by
    coordinate line search, once descending (for A_est) and once ascending
    (for B_est).  max_iter / rel_tol / step_mags trade accuracy for time.
    """
    if not (1.0 <= p <= 2.0):
        raise ValueError(f"p must lie in [1, 2], got {p}")
    if probe_budget < 0:
        raise ValueError("probe_budget must be >= 0")
    w_num = _subset_weights(system, subset, weights)
    w_den = system.domain.weights
    active = (w_num != 0.0) | (w_den != 0.0)
    A_mat = system.values[active]
    wn = w_num[active]
    wd = w_den[active]
    starts = kernels.probe_starts(system.dim, probe_budget, seed,
                                  coords=include_coord_starts)
    if starts.shape[0] == 0:
        raise ValueError("no probe starts: budget 0 with coordinate starts off")
    lows = kernels.probe_optimize(A_mat, wn, wd, p, starts, maximize=False,
                                  max_iter=max_iter, rel_tol=rel_tol,
                                  step_mags=step_mags)
    highs = kernels.probe_optimize(A_mat, wn, wd, p, starts, maximize=True,
                                   max_iter=max_iter, rel_tol=rel_tol,
                                   step_mags=step_mags)
    return float(np.min(lows)), float(np.max(highs))


def brute_force_extremes(system: OrthonormalSystem, subset, p: float,
                         resolution: int = 100_000, weights=None):
    """Oracle (A, B) for dim <= 3 by sweeping the unit coefficient sphere
    with `resolution` points per angular dimension.  Accuracy is
    O(1/resolution) in the angles (value error O(1/resolution) at kinks,
    O(1/resolution^2) at smooth extrema)."""
    n = system.dim
    if n > 3:
        raise ValueError("brute force sweep is limited to dim <= 3")
    if resolution < 2:
        raise ValueError("resolution must be >= 2")
    if n == 3 and resolution > 4000:
        raise ValueError("dim-3 sweeps cost resolution^2 points; "
                         "use resolution <= 4000")
    w_num = _subset_weights(system, subset, weights)
    w_den = system.domain.weights
    active = (w_num != 0.0) | (w_den != 0.0)
    Phi = system.values[active]
    wn = w_num[active]
    wd = w_den[active]

    def blocks():
        if n == 1:
            yield np.array([[1.0]])
        elif n == 2:
            phi = 2.0 * math.pi * np.arange(resolution) / resolution
            yield np.column_stack([np.cos(phi), np.sin(phi)])
        else:
            ph = 2.0 * math.pi * np.arange(resolution) / resolution
            cph, sph = np.cos(ph), np.sin(ph)
            for i in range(resolution):  # one latitude ring at a time
                th = math.pi * (i + 0.5) / resolution
                st, ctv = math.sin(th), math.cos(th)
                yield np.column_stack([st * cph, st * sph,
                                       np.full(resolution, ctv)])

    A_best = math.inf
    B_best = -math.inf
    chunk = max(1, (1 << 22) // max(Phi.shape[0], 1))
    for C in blocks():
        for lo in range(0, C.shape[0], chunk):
            V = np.abs(C[lo:lo + chunk] @ Phi.T) ** p
            nums = V @ wn
            dens = V @ wd
            r = nums / dens
            A_best = min(A_best, float(r.min()))
            B_best = max(B_best, float(r.max()))
    return A_best, B_best


@dataclass(frozen=True)
class DiscretizationCertificate:
    """Outcome of one two-sided norm-ratio check."""

    p: float
    m: int
    A: float
    B: float
    exactness: str  # spectral_exact | probe_estimate | oracle_exact
    epsilon: Optional[float] = None
    passed: Optional[bool] = None
    probe_budget: Optional[int] = None
    seed: Optional[int] = None

    def to_record(self) -> str:
        lines = [
            f"p={self.p!r}",
            f"m={self.m}",
            f"A={self.A!r}",
            f"B={self.B!r}",
            f"exactness={self.exactness}",
            f"epsilon={'none' if self.epsilon is None else repr(self.epsilon)}",
            f"passed={'none' if self.passed is None else str(self.passed).lower()}",
            f"probe_budget={'none' if self.probe_budget is None else self.probe_budget}",
            f"seed={'none' if self.seed is None else self.seed}",
        ]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "p": self.p, "m": self.m, "A": self.A, "B": self.B,
            "exactness": self.exactness, "epsilon": self.epsilon,
            "passed": self.passed, "probe_budget": self.probe_budget,
            "seed": self.seed,
        }


def certificate_from_record(text: str) -> DiscretizationCertificate:
    fields = {}
    for line in text.strip().splitlines():
        key, _, val = line.partition("=")
        fields[key.strip()] = val.strip()
    opt = lambda s, conv: None if s == "none" else conv(s)
    return DiscretizationCertificate(
        p=float(fields["p"]),
        m=int(fields["m"]),
        A=float(fields["A"]),
        B=float(fields["B"]),
        exactness=fields["exactness"],
        epsilon=opt(fields["epsilon"], float),
        passed=opt(fields["passed"], lambda s: s == "true"),
        probe_budget=opt(fields["probe_budget"], int),
        seed=opt(fields["seed"], int),
    )


def certify(system: OrthonormalSystem, subset, p: float,
            epsilon: Optional[float] = None, mode: str = "auto",
            probe_budget: int = 64, seed: int = 0, weights=None,
            resolution: int = 2000, max_iter: int = kernels.MAX_SWEEPS,
            rel_tol: float = kernels.REL_TOL, step_mags=None,
            include_coord_starts: bool = True) -> DiscretizationCertificate:
    """Produce a certificate for the subset's norm-ratio extremes.

    mode 'auto' picks spectral for p = 2, the brute-force oracle for
    one-dimensional systems (where the ratio does not depend on f), and
    probes otherwise; 'oracle' forces the sweep (dim <= 3).  epsilon may
    exceed 1 (the lower bound is then vacuous but the record stays well
    defined); None skips the pass/fail judgement.
    """
    if epsilon is not None and not (epsilon > 0.0):
        raise ValueError(f"epsilon must be positive, got {epsilon}")
    if mode == "auto":
        if p == 2.0:
            mode = "spectral"
        elif system.dim == 1:
            mode = "oracle"
        else:
            mode = "probe"
    if mode == "spectral":
        if p != 2.0:
            raise ValueError("spectral route requires p = 2")
        A, B = ratio_extremes_l2(system, subset, weights=weights)
        exactness = "spectral_exact"
        budget_used = None
    elif mode == "probe":
        A, B = ratio_extremes_lp(system, subset, p, probe_budget=probe_budget,
                                 seed=seed, weights=weights, max_iter=max_iter,
                                 rel_tol=rel_tol, step_mags=step_mags,
                                 include_coord_starts=include_coord_starts)
        exactness = "probe_estimate"
        budget_used = probe_budget
    elif mode == "oracle":
        A, B = brute_force_extremes(system, subset, p, resolution=resolution,
                                    weights=weights)
        exactness = "oracle_exact"
        budget_used = None
    else:
        raise ValueError(f"unknown mode {mode!r}")
    passed = None
    if epsilon is not None:
        passed = bool(A >= 1.0 - epsilon and B <= 1.0 + epsilon)
    return DiscretizationCertificate(
        p=float(p), m=int(np.asarray(subset).size), A=A, B=B,
        exactness=exactness, epsilon=epsilon, passed=passed,
        probe_budget=budget_used, seed=seed if mode == "probe" else None,
    )
