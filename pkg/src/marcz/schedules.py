"""Deterministic bookkeeping for iterated-halving schedules.

Starting from alpha_0 = 1, each halving step multiplies the proportion of
retained points by (1 - sqrt(delta/alpha_j))/2, and the companion upper
sequence beta by (1 + sqrt(delta/alpha_j))/2.  The recursion stops at the
first index s with alpha_s >= delta/theta^2 > alpha_{s+1}.  The product
bounds on these sequences use the constants

    c1 = sqrt(2)/(sqrt(2)-1),    c2 = 2*c1,    c3 = c1 + c2,

which are tight for the geometric-sum argument behind them; they are
configuration constants here, overridable where a function takes them, with
these values as the documented defaults.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from typing import NamedTuple

import numpy as np

_SQRT2 = math.sqrt(2.0)
C1 = _SQRT2 / (_SQRT2 - 1.0)
C2 = 2.0 * C1
C3 = C1 + C2

MAX_STEPS = 10**6


def _check_domain(delta: float, theta: float) -> None:
    if not (0.0 < delta < 0.25):
        raise ValueError(f"delta must lie in (0, 1/4), got {delta}")
    if not (0.0 < theta <= 0.5):
        raise ValueError(f"theta must lie in (0, 1/2], got {theta}")
    if not (delta < theta * theta):
        raise ValueError(f"need delta < theta^2, got delta={delta}, theta^2={theta*theta}")


@dataclass(frozen=True)
class IterationSchedule:
    """Halving schedule alpha_0..alpha_{s+1} with its companion sequences.

    a_seq/b_seq are the kappa-weighted companions; for the plain schedule
    (kappa = 1) they coincide with alphas/betas.
    """

    delta: float
    theta: float
    alphas: np.ndarray
    betas: np.ndarray
    stop_index: int
    kappa: float = 1.0
    a_seq: np.ndarray = None
    b_seq: np.ndarray = None
    constants: tuple = (C1, C2, C3)

    def __post_init__(self):
        if self.a_seq is None:
            object.__setattr__(self, "a_seq", self.alphas)
        if self.b_seq is None:
            object.__setattr__(self, "b_seq", self.betas)

    @property
    def steps(self) -> int:
        """Number of halving steps the schedule prescribes (s + 1)."""
        return self.stop_index + 1


def alpha_schedule(delta: float, theta: float) -> IterationSchedule:
    """Run the halving recursion until alpha drops below delta/theta^2.

    Raises ValueError outside the domain 0 < delta < 1/4, 0 < theta <= 1/2,
    delta < theta^2, and RuntimeError if the recursion somehow fails to
    terminate within 10^6 steps (it contracts by at least 1/2 per step, so
    that cap is unreachable for valid inputs).
    """
    _check_domain(delta, theta)
    threshold = delta / (theta * theta)
    alphas = [1.0]
    betas = [1.0]
    while True:
        a = alphas[-1]
        fac = math.sqrt(delta / a)
        alphas.append(0.5 * a * (1.0 - fac))
        betas.append(0.5 * betas[-1] * (1.0 + fac))
        if alphas[-1] < threshold:
            break
        if len(alphas) > MAX_STEPS:
            raise RuntimeError("halving schedule did not terminate")
    return IterationSchedule(
        delta=delta,
        theta=theta,
        alphas=np.array(alphas),
        betas=np.array(betas),
        stop_index=len(alphas) - 2,
    )


def companion_sequences(schedule: IterationSchedule, kappa: float):
    """Companion sequences a, b driven by kappa*sqrt(delta/alpha_j).

    Requires 0 < kappa < 1/(2*theta) so the a-sequence stays positive with
    margin.  Returns (a, b) as arrays of the same length as schedule.alphas.
    """
    if not (0.0 < kappa < 1.0 / (2.0 * schedule.theta)):
        raise ValueError(
            f"kappa must lie in (0, 1/(2*theta)) = (0, {1.0/(2.0*schedule.theta)}), got {kappa}"
        )
    a = [1.0]
    b = [1.0]
    for j in range(schedule.stop_index + 1):
        fac = kappa * math.sqrt(schedule.delta / schedule.alphas[j])
        a.append(0.5 * a[-1] * (1.0 - fac))
        b.append(0.5 * b[-1] * (1.0 + fac))
    return np.array(a), np.array(b)


def with_companions(schedule: IterationSchedule, kappa: float) -> IterationSchedule:
    """Copy of the schedule carrying the kappa companions."""
    a, b = companion_sequences(schedule, kappa)
    return replace(schedule, kappa=kappa, a_seq=a, b_seq=b)


def cardinality_envelope(M: int, k: int):
    """Two-sided envelope for 2^k * m_k after k halving steps from M points:

        M - 2^(k/2) * sqrt(M) / (sqrt(2)-1)  <=  2^k * m_k  <=  M.
    """
    if M < 1:
        raise ValueError(f"M must be >= 1, got {M}")
    if k < 0:
        raise ValueError(f"k must be >= 0, got {k}")
    lower = M - (2.0 ** (k / 2.0)) * math.sqrt(M) / (_SQRT2 - 1.0)
    return lower, float(M)


class FinalWindow(NamedTuple):
    m_low: float
    m_high: float
    guaranteed: bool
    stop_index: int
    alpha_final: float


def predict_final_m(M: int, delta: float, theta: float,
                    constants: tuple = (C1, C2, C3)) -> FinalWindow:
    """A-priori window for the final retained count after the full schedule:

        alpha_{s+1} * (1-theta) * M  <=  m  <=  exp(c3*theta) * alpha_{s+1} * M.

    The lower edge is guaranteed only under delta >= 4*(sqrt(2)-1)^-2 / M;
    when that assumption fails the window is still returned with
    guaranteed=False.
    """
    sched = alpha_schedule(delta, theta)
    a_final = float(sched.alphas[-1])
    c3 = constants[2]
    m_low = a_final * (1.0 - theta) * M
    m_high = math.exp(c3 * theta) * a_final * M
    guaranteed = delta >= 4.0 / ((_SQRT2 - 1.0) ** 2 * M)
    return FinalWindow(m_low, m_high, guaranteed, sched.stop_index, a_final)


def nou_schedule(delta: float):
    """Legacy factor-5 halving schedule, kept for comparison only.

    alpha_{j+1} = alpha_j * (1 - 5*sqrt(delta/alpha_j)) / 2 for
    0 < delta < 1/100, stopping at the first L with
    25*delta <= alpha_{L+1} < 100*delta.  Returns (alphas, betas, L).
    """
    if not (0.0 < delta < 0.01):
        raise ValueError(f"delta must lie in (0, 1/100), got {delta}")
    alphas = [1.0]
    betas = [1.0]
    while True:
        a = alphas[-1]
        fac = 5.0 * math.sqrt(delta / a)
        alphas.append(0.5 * a * (1.0 - fac))
        betas.append(0.5 * betas[-1] * (1.0 + fac))
        if alphas[-1] < 100.0 * delta:
            break
        if len(alphas) > MAX_STEPS:
            raise RuntimeError("legacy schedule did not terminate")
    L = len(alphas) - 2
    return np.array(alphas), np.array(betas), L


def schedule_to_csv(schedule: IterationSchedule) -> str:
    """CSV with columns (j, alpha_j, beta_j, a_j, b_j)."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["j", "alpha_j", "beta_j", "a_j", "b_j"])
    for j in range(len(schedule.alphas)):
        w.writerow([
            j,
            repr(float(schedule.alphas[j])),
            repr(float(schedule.betas[j])),
            repr(float(schedule.a_seq[j])),
            repr(float(schedule.b_seq[j])),
        ])
    return buf.getvalue()


def schedule_from_csv(text: str) -> dict:
    """Parse schedule_to_csv output back into column arrays."""
    rows = list(csv.reader(io.StringIO(text)))
    header, body = rows[0], rows[1:]
    cols = {name: [] for name in header}
    for row in body:
        for name, val in zip(header, row):
            cols[name].append(float(val))
    return {name: np.array(vals) for name, vals in cols.items()}
