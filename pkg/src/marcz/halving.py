"""Randomized halving of an index multiset with certified deviation control.

One step draws fair signs over the parent J, keeps I = {i in J : sign = +1},
and accepts when |I| sits in the cardinality window
|J|/2 (1 - 1/sqrt(|J|)) <= |I| <= |J|/2 and every requested exponent's
deviation sigma_hat_p = max_f |2 ||R_I f||_p^p / ||R_J f||_p^p - 1| is at or
below its target.  p = 2 deviations are exact (generalized eigenproblem);
p < 2 are probe-based lower bounds, so acceptance there is heuristic and the
records say so.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np
import scipy.linalg

from . import kernels
from .subspace import OrthonormalSystem

RANK_RTOL = 1e-12


@dataclass(frozen=True)
class SplitProposal:
    """One attempted halving: parent, child, signs, and measurements."""

    parent: np.ndarray
    child: np.ndarray
    signs: np.ndarray
    cardinality_ok: bool
    deviations: dict = field(default_factory=dict)   # p -> sigma_hat
    targets: dict = field(default_factory=dict)      # p -> target sigma
    accepted: bool = False
    attempts_used: int = 0
    seed: Optional[int] = None

    def to_record(self) -> dict:
        return {
            "parent_size": int(self.parent.size),
            "child_size": int(self.child.size),
            "cardinality_ok": bool(self.cardinality_ok),
            "deviations": {repr(float(p)): float(v)
                           for p, v in sorted(self.deviations.items())},
            "targets": {repr(float(p)): float(v)
                        for p, v in sorted(self.targets.items())},
            "accepted": bool(self.accepted),
            "attempts_used": int(self.attempts_used),
            "seed": list(self.seed) if isinstance(self.seed, tuple) else self.seed,
        }


def cardinality_window(parent_size: int):
    """(lower, upper) bounds on |I| for a parent of the given size."""
    half = parent_size / 2.0
    return half * (1.0 - 1.0 / math.sqrt(parent_size)), half


def cardinality_ok(I, J) -> bool:
    """Whether |I| is inside the halving window of J.  I must be a
    sub-multiset of J."""
    I = np.asarray(I, dtype=np.int64)
    J = np.asarray(J, dtype=np.int64)
    if I.size:
        top = int(max(I.max(), J.max())) + 1
        if np.any(np.bincount(I, minlength=top) > np.bincount(J, minlength=top)):
            raise ValueError("I is not contained in J")
    lo, hi = cardinality_window(J.size)
    return lo <= I.size <= hi


def propose_split(J, rng_seed) -> SplitProposal:
    """Draw fair signs over J and keep the +1 positions.  rng_seed may be an
    int or a tuple of ints (the signs replay exactly for the same seed)."""
    J = np.asarray(J, dtype=np.int64)
    if J.size < 2:
        raise ValueError("parent must have at least 2 elements")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=rng_seed))
    signs = (rng.integers(0, 2, size=J.size) * 2 - 1).astype(np.int8)
    I = J[signs == 1]
    lo, hi = cardinality_window(J.size)
    return SplitProposal(parent=J, child=I, signs=signs,
                         cardinality_ok=bool(lo <= I.size <= hi),
                         seed=rng_seed)


def _collapse(system: OrthonormalSystem, I, J):
    """Unique rows of J with parent/child multiplicities; validates I <= J."""
    I = np.asarray(I, dtype=np.int64)
    J = np.asarray(J, dtype=np.int64)
    if J.size == 0:
        raise ValueError("parent must be nonempty")
    if np.any(J < 0) or np.any(J >= system.m_points):
        raise ValueError("parent indices out of range")
    u, inv = np.unique(J, return_inverse=True)
    cJ = np.bincount(inv, minlength=u.size).astype(np.float64)
    if I.size:
        if np.any(I < 0):
            raise ValueError("I is not contained in J")
        top = int(u.max()) + 1
        cI_full = np.bincount(I, minlength=top)
        in_J = np.zeros(cI_full.size, dtype=bool)
        in_J[u] = True
        cI = cI_full[u].astype(np.float64)
        if np.any(cI_full[~in_J] > 0) or np.any(cI > cJ):
            raise ValueError("I is not contained in J")
    else:
        cI = np.zeros(u.size)
    return u, cI, cJ


def measure_deviation(system: OrthonormalSystem, I, J, p: float,
                      probe_budget: int = 16, seed=0,
                      max_iter: int = kernels.MAX_SWEEPS,
                      rel_tol: float = kernels.REL_TOL,
                      step_mags=None, include_coord_starts: bool = True) -> float:
    """sigma_hat_p for the split (I, J): the worst relative deviation of the
    child's p-power sum from half the parent's, over the subspace.

    Exact for p = 2 and for one-dimensional systems; probe-based otherwise
    (a lower bound on the true deviation).
    """
    if not (1.0 <= p <= 2.0):
        raise ValueError(f"p must lie in [1, 2], got {p}")
    u, cI, cJ = _collapse(system, I, J)
    rows = system.values[u]
    n = system.dim

    if n == 1:
        v = np.abs(rows[:, 0]) ** p if p != 2.0 else rows[:, 0] ** 2
        if not np.any(v > 0.0):
            raise ValueError("parent set rank-deficient")
        if np.all(v == v[0]):
            t = 2.0 * float(cI.sum()) / float(cJ.sum())
        else:
            t = 2.0 * float(np.dot(cI, v)) / float(np.dot(cJ, v))
        return abs(t - 1.0)

    scaled = rows * np.sqrt(cJ)[:, None]
    S_J = scaled.T @ scaled
    ev = np.linalg.eigvalsh(S_J)
    if ev[-1] <= 0.0 or ev[0] <= RANK_RTOL * ev[-1]:
        raise ValueError("parent set rank-deficient")

    if p == 2.0:
        child_scaled = rows * np.sqrt(cI)[:, None]
        S_I = child_scaled.T @ child_scaled
        lam = scipy.linalg.eigh(S_I, S_J, eigvals_only=True)
        return float(max(abs(2.0 * lam[-1] - 1.0), abs(2.0 * lam[0] - 1.0)))

    starts = kernels.probe_starts(n, probe_budget, seed,
                                  coords=include_coord_starts)
    if starts.shape[0] == 0:
        raise ValueError("no probe starts: budget 0 with coordinate starts off")
    w_num = 2.0 * cI
    highs = kernels.probe_optimize(rows, w_num, cJ, p, starts, maximize=True,
                                   max_iter=max_iter, rel_tol=rel_tol,
                                   step_mags=step_mags)
    lows = kernels.probe_optimize(rows, w_num, cJ, p, starts, maximize=False,
                                  max_iter=max_iter, rel_tol=rel_tol,
                                  step_mags=step_mags)
    return max(abs(float(highs.max()) - 1.0), abs(1.0 - float(lows.min())))


@dataclass(frozen=True)
class SigmaTargets:
    """Per-exponent deviation targets for the current halving step.

    p in {1, 2} uses C5 * sqrt(K n log n / (alpha_j M)); p in (1, 2) uses
    Cp * sqrt(K n log|J| / (alpha_j M)) * log(2 + M/(Kn)).  K, n, M describe
    the ambient system and retained set; alpha_j is the scheduled mass of
    the current step.
    """

    K: float
    n: int
    M: int
    C5: float = 1.0
    Cp: float = 1.0
    alpha_j: float = 1.0

    def __post_init__(self):
        if not (self.K > 0.0 and self.n >= 1 and self.M >= 1):
            raise ValueError("K, n, M must be positive")
        if not (self.C5 > 0.0 and self.Cp > 0.0):
            raise ValueError("C5 and Cp must be positive")
        if not (0.0 < self.alpha_j <= 1.0):
            raise ValueError("alpha_j must lie in (0, 1]")

    def at(self, alpha_j: float) -> "SigmaTargets":
        return replace(self, alpha_j=alpha_j)

    def target(self, p: float, parent_size: Optional[int] = None) -> float:
        base = self.K * self.n / (self.alpha_j * self.M)
        if p in (1.0, 2.0):
            return self.C5 * math.sqrt(base * math.log(self.n))
        if 1.0 < p < 2.0:
            if parent_size is None:
                raise ValueError("parent_size required for p in (1, 2)")
            return (self.Cp * math.sqrt(base * math.log(parent_size))
                    * math.log(2.0 + self.M / (self.K * self.n)))
        raise ValueError(f"p must lie in [1, 2], got {p}")


def halve(system: OrthonormalSystem, J, ps, targets: SigmaTargets,
          max_attempts: int = 256, rng_seed: int = 0,
          probe_budget: int = 16, max_iter: int = kernels.MAX_SWEEPS,
          rel_tol: float = kernels.REL_TOL, step_mags=None,
          include_coord_starts: bool = True) -> SplitProposal:
    """Rejection-sample halvings of J until one meets the cardinality window
    and every requested deviation target; exponents are measured exact-first
    (descending p) and an attempt is abandoned at its first miss.

    Returns the first accepted proposal, or the best rejected one (smallest
    worst ratio sigma_hat/target) with accepted=False when the attempt
    budget runs out.
    """
    J = np.asarray(J, dtype=np.int64)
    if J.size < 4:
        raise ValueError("parent must have at least 4 elements")
    if max_attempts < 1:
        raise ValueError("max_attempts must be >= 1")
    ps = sorted(set(float(p) for p in ps), reverse=True)
    if not ps:
        raise ValueError("at least one exponent required")

    def measure(prop: SplitProposal, attempt: int):
        devs = {}
        tgts = {}
        ok = True
        for pi, p in enumerate(ps):
            tgt = targets.target(p, parent_size=J.size)
            sig = measure_deviation(system, prop.child, J, p,
                                    probe_budget=probe_budget,
                                    seed=(rng_seed, attempt, pi),
                                    max_iter=max_iter, rel_tol=rel_tol,
                                    step_mags=step_mags,
                                    include_coord_starts=include_coord_starts)
            devs[p] = sig
            tgts[p] = tgt
            if sig > tgt:
                ok = False
                break
        return devs, tgts, ok

    def score(devs, tgts):
        worst = 0.0
        for p, sig in devs.items():
            tgt = tgts[p]
            if tgt > 0.0:
                worst = max(worst, sig / tgt)
            elif sig > 0.0:
                worst = math.inf
        return worst

    best = None
    best_score = math.inf
    most_balanced = None
    balance_gap = math.inf
    for k in range(max_attempts):
        prop = propose_split(J, rng_seed=(rng_seed, k))
        gap = abs(prop.child.size - J.size / 2.0)
        if most_balanced is None or gap < balance_gap:
            most_balanced, balance_gap = prop, gap
        if not prop.cardinality_ok:
            continue
        devs, tgts, ok = measure(prop, k)
        prop = replace(prop, deviations=devs, targets=tgts,
                       attempts_used=k + 1)
        if ok:
            return replace(prop, accepted=True)
        s = score(devs, tgts)
        if s < best_score:
            best, best_score = prop, s
    if best is not None:
        return replace(best, attempts_used=max_attempts)
    # no attempt passed even the cardinality window; report the most
    # balanced draw with its measurements as diagnostics
    devs, tgts, _ = measure(most_balanced, max_attempts - 1)
    return replace(most_balanced, deviations=devs, targets=tgts,
                   attempts_used=max_attempts)


def sign_sum_probability(a, trials: int = 100_000, seed: int = 0,
                         method: str = "auto") -> float:
    """P(|sum_j a_j eps_j| <= 1) for fair signs, over a unit vector a.

    method 'exact' enumerates all 2^m patterns (m <= 16 only); 'mc' is a
    seeded Monte Carlo over `trials` draws; 'auto' picks exact when it can.
    """
    a = np.asarray(a, dtype=np.float64).ravel()
    m = a.size
    if m == 0 or abs(float(np.dot(a, a)) - 1.0) > 1e-9:
        raise ValueError("non-unit input vector")
    if method == "auto":
        method = "exact" if m <= 16 else "mc"
    if method == "exact":
        if m > 16:
            raise ValueError("exact enumeration limited to m <= 16")
        patterns = np.arange(1 << m, dtype=np.uint32)
        bits = ((patterns[:, None] >> np.arange(m)) & 1).astype(np.float64)
        sums = (2.0 * bits - 1.0) @ a
        return float(np.count_nonzero(np.abs(sums) <= 1.0)) / (1 << m)
    if method != "mc":
        raise ValueError(f"unknown method {method!r}")
    if trials < 1:
        raise ValueError("trials must be >= 1")
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, m)))
    # float32 accumulation keeps the m * trials sign matrix affordable;
    # rounding at the |S| = 1 boundary is far below the MC noise floor
    af = a.astype(np.float32)
    hits = 0
    done = 0
    chunk = max(1, (1 << 24) // m)
    while done < trials:
        take = min(chunk, trials - done)
        signs = rng.integers(0, 2, size=(take, m), dtype=np.int8)
        S = (2.0 * signs.astype(np.float32) - 1.0) @ af
        hits += int(np.count_nonzero(np.abs(S) <= 1.0))
        done += take
    return hits / trials
