"""End-to-end discretization runs: preliminary random subsample, scheduled
halving with deviation targets, final certification, and budget reporting.

Two modes.  mt1 covers p in {1, 2} with target epsilon split as
eps0 = kappa1 * eps (preliminary accuracy) and theta = kappa2 * eps
(halving overhead).  mt2 covers p in (1, 2), runs the L_p and L_2 legs
jointly, and certifies L_2 at the sharpened eps_n = eps / log log(2Kn).
The split constants must satisfy

    (1 - kappa1 eps) e^{-c3 kappa2 eps} >= 1 - eps
    (1 + kappa1 eps) (1 - kappa2 eps)^{-1} e^{c3 kappa2 eps} <= 1 + eps

which is checked before any work; kappa2 defaults to the largest feasible
value found by bisection.  c3 defaults to the proof-grade accounting
constant, which is conservative enough that small runs stop before any
halving; pass a smaller c3 to let desk-scale runs halve.  The reported
final-size window always uses the proof constant, so it remains a valid
statement about the schedule that actually ran.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from . import kernels, schedules
from .certificates import certify
from .halving import SigmaTargets, SplitProposal, halve, measure_deviation
from .parallel import det_map
from .subspace import OrthonormalSystem, christoffel, restrict_system


def _child_seed(*parts) -> int:
    """Deterministic derived integer seed for a named sub-stream."""
    ss = np.random.SeedSequence(entropy=tuple(int(x) for x in parts))
    return int(ss.generate_state(1, dtype=np.uint64)[0])


def _as_tuple(seed):
    return (int(seed),) if isinstance(seed, (int, np.integer)) else tuple(seed)


def _loglog(x: float) -> float:
    if x <= 1.0:
        raise ValueError(f"log log needs argument > 1, got {x}")
    return math.log(math.log(x))


@dataclass(frozen=True)
class PipelineConfig:
    """Knobs for one pipeline run.

    The probe-quality knobs (budgets, sweep caps, tolerances, step grid)
    trade estimate sharpness for time; they never touch the exact spectral
    legs.  epsilon and mode are overridden by the run_* entry points.
    """

    epsilon: float = 0.25
    mode: str = "mt1"
    kappa1: float = 0.5
    kappa2: Optional[float] = None      # None: largest feasible, by bisection
    c3: Optional[float] = None          # None: proof constant schedules.C3
    C5: float = 1.0
    Cp: float = 1.0
    delta_override: Optional[float] = None
    initial_m: Optional[int] = None     # None: ceil(4 n log(n+1) / eps0^2)
    growth: float = 2.0
    max_retries: int = 8
    max_attempts: int = 256
    certify_budget: int = 32
    certify_max_iter: int = kernels.MAX_SWEEPS
    certify_rel_tol: float = kernels.REL_TOL
    sigma_budget: int = 16
    sigma_max_iter: int = kernels.MAX_SWEEPS
    sigma_rel_tol: float = kernels.REL_TOL
    sigma_coord_starts: bool = True
    step_mag_count: Optional[int] = None  # None: kernel default grid
    seed: int = 0

    def __post_init__(self):
        if not (0.0 < self.epsilon < 1.0):
            raise ValueError("epsilon must lie in (0, 1)")
        if self.mode not in ("mt1", "mt2"):
            raise ValueError(f"mode must be 'mt1' or 'mt2', got {self.mode!r}")
        if not (0.0 < self.kappa1 < 1.0):
            raise ValueError("kappa1 must lie in (0, 1)")
        if self.kappa2 is not None and not (0.0 < self.kappa2 < 1.0):
            raise ValueError("kappa2 must lie in (0, 1)")
        if self.c3 is not None and self.c3 < 0.0:
            raise ValueError("c3 must be nonnegative")
        if self.growth <= 1.0:
            raise ValueError("growth must exceed 1")
        if self.max_retries < 1 or self.max_attempts < 1:
            raise ValueError("retry and attempt budgets must be >= 1")

    @property
    def c3_value(self) -> float:
        return schedules.C3 if self.c3 is None else self.c3

    def split_holds(self, kappa2: float) -> bool:
        """Whether (kappa1, kappa2) satisfies the accounting inequalities at
        this config's epsilon and c3."""
        e, k1, c3 = self.epsilon, self.kappa1, self.c3_value
        x = kappa2 * e
        if x >= 1.0:
            return False
        lower = (1.0 - k1 * e) * math.exp(-c3 * x) >= 1.0 - e
        upper = (1.0 + k1 * e) / (1.0 - x) * math.exp(c3 * x) <= 1.0 + e
        return lower and upper

    def resolve_kappa2(self) -> float:
        """The configured kappa2 (validated) or the bisection default."""
        if self.kappa2 is not None:
            if not self.split_holds(self.kappa2):
                raise ValueError(
                    "config invariant violated: (kappa1, kappa2) = "
                    f"({self.kappa1}, {self.kappa2}) fails the accounting "
                    f"inequalities at epsilon = {self.epsilon}")
            return self.kappa2
        lo, hi = 0.0, 1.0 - 1e-12
        if not self.split_holds(1e-12):
            raise ValueError(
                f"config invariant violated: kappa1 = {self.kappa1} leaves "
                f"no feasible kappa2 at epsilon = {self.epsilon}")
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            if self.split_holds(mid):
                lo = mid
            else:
                hi = mid
        k2 = lo * (1.0 - 1e-9)
        if k2 <= 0.0 or not self.split_holds(k2):
            raise ValueError("no feasible kappa2 found by bisection")
        return k2

    def step_mags(self):
        if self.step_mag_count is None:
            return None
        return np.logspace(-7.0, 0.0, self.step_mag_count)


@dataclass(frozen=True)
class PipelineResult:
    """Everything a run produced, precise enough to replay and re-check."""

    mode: str
    epsilon: float
    seed: int
    n: int
    K: float
    final_indices: np.ndarray
    achieved_m: int
    status: str                          # certified | probe_passed | failed
    certificates: dict                   # p -> DiscretizationCertificate
    trajectory: list = field(default_factory=list)
    prelim_rounds: list = field(default_factory=list)  # (m, all_passed)
    retained_M: int = 0
    K_restricted: float = 0.0
    delta: float = 0.0
    theta: float = 0.0
    eps0: float = 0.0
    eps_n: Optional[float] = None
    p: Optional[float] = None            # mt2 exponent
    kappa: Optional[float] = None        # mt2 log factor
    schedule: Optional[schedules.IterationSchedule] = None
    window: Optional[schedules.FinalWindow] = None
    window_applicable: bool = False
    m_in_window: Optional[bool] = None
    theoretical_m: float = 0.0
    fit_constant: Optional[float] = None
    halted_reason: Optional[str] = None

    def to_dict(self) -> dict:
        sched = None
        if self.schedule is not None:
            sched = {
                "delta": self.schedule.delta,
                "theta": self.schedule.theta,
                "stop_index": self.schedule.stop_index,
                "alphas": [float(a) for a in self.schedule.alphas],
            }
        win = None
        if self.window is not None:
            win = {"m_low": self.window.m_low, "m_high": self.window.m_high,
                   "guaranteed": self.window.guaranteed,
                   "stop_index": self.window.stop_index,
                   "alpha_final": self.window.alpha_final}
        return {
            "mode": self.mode,
            "epsilon": self.epsilon,
            "seed": self.seed,
            "n": self.n,
            "K": self.K,
            "achieved_m": self.achieved_m,
            "status": self.status,
            "certificates": {repr(float(q)): c.to_dict()
                             for q, c in sorted(self.certificates.items())},
            "trajectory": [t.to_record() for t in self.trajectory],
            "prelim_rounds": [[int(m), bool(ok)]
                              for m, ok in self.prelim_rounds],
            "retained_M": self.retained_M,
            "K_restricted": self.K_restricted,
            "delta": self.delta,
            "theta": self.theta,
            "eps0": self.eps0,
            "eps_n": self.eps_n,
            "p": self.p,
            "kappa": self.kappa,
            "schedule": sched,
            "window": win,
            "window_applicable": self.window_applicable,
            "m_in_window": self.m_in_window,
            "theoretical_m": self.theoretical_m,
            "fit_constant": self.fit_constant,
            "halted_reason": self.halted_reason,
        }


TRAJECTORY_COLUMNS = ("step", "parent_size", "child_size", "sigma2_measured",
                      "sigma2_target", "sigmap_measured", "sigmap_target",
                      "accepted")


def trajectory_rows(result: PipelineResult) -> list:
    """Trajectory flattened to the fixed CSV column order.  The sigmap
    columns carry the non-2 exponent and stay blank when only p = 2 ran."""
    rows = []
    for step, prop in enumerate(result.trajectory):
        other = [q for q in sorted(prop.deviations) if q != 2.0]
        po = other[0] if other else None
        rows.append({
            "step": step,
            "parent_size": int(prop.parent.size),
            "child_size": int(prop.child.size),
            "sigma2_measured": prop.deviations.get(2.0, ""),
            "sigma2_target": prop.targets.get(2.0, ""),
            "sigmap_measured": prop.deviations.get(po, "") if po is not None else "",
            "sigmap_target": prop.targets.get(po, "") if po is not None else "",
            "accepted": prop.accepted,
        })
    return rows


def trajectory_csv(result: PipelineResult) -> str:
    buf = io.StringIO()
    buf.write(",".join(TRAJECTORY_COLUMNS) + "\n")
    for row in trajectory_rows(result):
        cells = []
        for col in TRAJECTORY_COLUMNS:
            v = row[col]
            if isinstance(v, bool):
                cells.append("true" if v else "false")
            elif isinstance(v, float):
                cells.append(repr(float(v)))
            else:
                cells.append(str(v))
        buf.write(",".join(cells) + "\n")
    return buf.getvalue()


def preliminary_subsample(system: OrthonormalSystem, ps, eps0: float,
                          config: PipelineConfig, seed,
                          power_of_two: bool = False):
    """Grow-and-certify i.i.d. subsample.

    Draws m points from the domain measure with replacement (duplicates
    kept as a multiset), certifies every requested exponent at eps0, and
    multiplies m by the growth factor on failure.  Returns (indices,
    rounds, certificates, success) where rounds lists (m, all_passed) per
    attempt and the certificates belong to the last attempt.
    """
    if not (0.0 < eps0 < 0.25):
        raise ValueError(f"eps0 must lie in (0, 1/4), got {eps0}")
    n = system.dim
    m = config.initial_m
    if m is None:
        m = math.ceil(4.0 * n * math.log(n + 1.0) / (eps0 * eps0))
    if m < 1:
        raise ValueError("initial subsample size must be >= 1")
    if power_of_two:
        m = 1 << max(0, int(m - 1).bit_length())
    weights = system.domain.weights
    rounds = []
    certs = {}
    idx = None
    for attempt in range(config.max_retries):
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=(*_as_tuple(seed), attempt)))
        idx = rng.choice(weights.size, size=m, replace=True, p=weights)
        idx = np.asarray(np.sort(idx), dtype=np.int64)
        certs = {}
        ok = True
        for pi, q in enumerate(sorted({float(v) for v in ps}, reverse=True)):
            cert = certify(
                system, idx, q, epsilon=eps0,
                probe_budget=config.certify_budget,
                seed=_child_seed(*_as_tuple(seed), attempt, pi),
                max_iter=config.certify_max_iter,
                rel_tol=config.certify_rel_tol,
                step_mags=config.step_mags())
            certs[q] = cert
            if not cert.passed:
                ok = False
                break
        rounds.append((m, ok))
        if ok:
            return idx, rounds, certs, True
        m = 2 * m if power_of_two else math.ceil(m * config.growth)
    return idx, rounds, certs, False


def _status_from(certs: dict) -> str:
    if not certs:
        return "failed"
    if any(c.passed is not True for c in certs.values()):
        return "failed"
    if all(c.exactness.endswith("exact") for c in certs.values()):
        return "certified"
    return "probe_passed"


def _final_certificates(system, final_idx, ps, epsilon_by_p, config, seed):
    certs = {}
    for pi, q in enumerate(sorted({float(v) for v in ps}, reverse=True)):
        certs[q] = certify(
            system, final_idx, q, epsilon=epsilon_by_p[q],
            probe_budget=config.certify_budget,
            seed=_child_seed(*_as_tuple(seed), 3, pi),
            max_iter=config.certify_max_iter,
            rel_tol=config.certify_rel_tol,
            step_mags=config.step_mags())
    return certs


def _degenerate_halvings(system, idx, ps, config):
    """n = 1: every exact half split has zero deviation for every p, so
    halve freely down to one point (the preliminary size is a power of two
    here).  Returns (position indices kept, trajectory)."""
    trajectory = []
    J = np.arange(idx.size)
    step = 0
    while J.size >= 2 and J.size % 2 == 0:
        rng = np.random.default_rng(
            np.random.SeedSequence(entropy=(config.seed, 2, step)))
        perm = rng.permutation(J.size)
        child = np.sort(J[perm[: J.size // 2]])
        signs = np.full(J.size, -1, dtype=np.int8)
        signs[np.searchsorted(J, child)] = 1
        devs = {q: measure_deviation(system, idx[child], idx[J], q)
                for q in ps}
        prop = SplitProposal(parent=J.copy(), child=child, signs=signs,
                             cardinality_ok=True, deviations=devs,
                             targets={q: 0.0 for q in ps},
                             accepted=all(v == 0.0 for v in devs.values()),
                             attempts_used=1, seed=(config.seed, 2, step))
        trajectory.append(prop)
        if not prop.accepted:
            break
        J = child
        step += 1
    return J, trajectory


def run_mt1(system: OrthonormalSystem, epsilon: float,
            config: Optional[PipelineConfig] = None) -> PipelineResult:
    """Discretize for p in {1, 2} at target accuracy epsilon.

    Stages: (i) preliminary subsample certified at eps0 = kappa1*epsilon;
    (ii) delta = C5^2 K n log(n) / M over the retained set and theta =
    kappa2*epsilon, stopping immediately when delta >= theta^2; (iii)
    scheduled halvings against the sigma targets for both exponents; (iv)
    final certificates at epsilon on the original system.
    """
    cfg = replace(config or PipelineConfig(), epsilon=float(epsilon),
                  mode="mt1")
    kappa2 = cfg.resolve_kappa2()
    return _run_common(system, cfg, kappa2, p_extra=1.0)


def run_mt2(system: OrthonormalSystem, p: float, epsilon: float,
            config: Optional[PipelineConfig] = None) -> PipelineResult:
    """Discretize for one p strictly between 1 and 2, running the L_p and
    L_2 legs jointly; the final L_2 certificate targets the sharpened
    eps_n = epsilon / log log(2Kn)."""
    if not (1.0 < p < 2.0):
        raise ValueError(f"mt2 requires p strictly inside (1, 2), got {p}")
    cfg = replace(config or PipelineConfig(), epsilon=float(epsilon),
                  mode="mt2")
    kappa2 = cfg.resolve_kappa2()
    return _run_common(system, cfg, kappa2, p_extra=float(p))


def _run_common(system, cfg, kappa2, p_extra):
    eps = cfg.epsilon
    n = system.dim
    K = christoffel(system).nikolskii_K
    mt2 = cfg.mode == "mt2"
    ps = (p_extra, 2.0) if p_extra != 2.0 else (2.0,)

    if mt2:
        if 2.0 * K * n <= math.e:
            raise ValueError(
                f"mt2 needs log log(2Kn) > 0, got 2Kn = {2.0 * K * n}")
        eps0 = cfg.kappa1 * eps / _loglog(4.0 * K * n)
        eps_n = eps / _loglog(2.0 * K * n)
    else:
        eps0 = cfg.kappa1 * eps
        eps_n = None
    epsilon_by_p = {q: eps for q in ps}
    if mt2:
        epsilon_by_p[2.0] = eps_n

    theoretical = 0.0
    if n > 1:
        theoretical = theoretical_budget("MT2" if mt2 else "MT1",
                                         K=K, n=n, epsilon=eps)
    base = dict(mode=cfg.mode, epsilon=eps, seed=cfg.seed, n=n, K=K,
                eps0=eps0, eps_n=eps_n, p=(p_extra if mt2 else None),
                theoretical_m=theoretical)

    idx, rounds, prelim_certs, prelim_ok = preliminary_subsample(
        system, ps, eps0, cfg, (cfg.seed, 1), power_of_two=(n == 1))
    base["prelim_rounds"] = [(m, ok) for m, ok in rounds]

    if not prelim_ok:
        return PipelineResult(final_indices=np.asarray(idx, dtype=np.int64),
                              achieved_m=int(idx.size), status="failed",
                              certificates=prelim_certs,
                              retained_M=int(idx.size),
                              halted_reason="preliminary_exhausted", **base)

    if n == 1:
        J, trajectory = _degenerate_halvings(system, idx, ps, cfg)
        final_idx = np.asarray(idx[J], dtype=np.int64)
        certs = _final_certificates(system, final_idx, ps, epsilon_by_p,
                                    cfg, (cfg.seed,))
        rsys = restrict_system(system, idx)
        return PipelineResult(final_indices=final_idx,
                              achieved_m=int(final_idx.size),
                              status=_status_from(certs), certificates=certs,
                              trajectory=trajectory,
                              retained_M=int(idx.size),
                              K_restricted=christoffel(rsys).nikolskii_K,
                              delta=0.0, theta=kappa2 * eps, **base)

    M_ret = int(idx.size)
    rsys = restrict_system(system, idx)
    K_res = christoffel(rsys).nikolskii_K

    if mt2:
        C = max(cfg.C5, cfg.Cp)
        delta = C * C * K_res * n * math.log(M_ret) / M_ret
        kap = math.log(2.0 + M_ret / (K_res * n))
        theta = kappa2 * eps / kap
        if kap * theta >= 0.5:
            raise ValueError("config invariant violated: kappa*theta >= 1/2")
    else:
        delta = cfg.C5 * cfg.C5 * K_res * n * math.log(n) / M_ret
        kap = None
        theta = kappa2 * eps
    if cfg.delta_override is not None:
        delta = cfg.delta_override
    base.update(retained_M=M_ret, K_restricted=K_res, delta=delta,
                theta=theta, kappa=kap)

    if delta >= theta * theta:
        final_idx = np.asarray(idx, dtype=np.int64)
        certs = _final_certificates(system, final_idx, ps, epsilon_by_p,
                                    cfg, (cfg.seed,))
        return PipelineResult(final_indices=final_idx,
                              achieved_m=int(final_idx.size),
                              status=_status_from(certs), certificates=certs,
                              halted_reason="already_small",
                              fit_constant=_fit_constant(
                                  cfg.mode, final_idx.size, eps, K, n),
                              **base)

    sched = schedules.alpha_schedule(delta, theta)
    if mt2:
        sched = schedules.with_companions(sched, kap)
    targets0 = SigmaTargets(K=K_res, n=n, M=M_ret, C5=cfg.C5, Cp=cfg.Cp)
    J = np.arange(M_ret)
    trajectory = []
    halted = None
    for step in range(sched.steps):
        prop = halve(rsys, J, ps=ps,
                     targets=targets0.at(float(sched.alphas[step])),
                     max_attempts=cfg.max_attempts,
                     rng_seed=(cfg.seed, 2, step),
                     probe_budget=cfg.sigma_budget,
                     max_iter=cfg.sigma_max_iter,
                     rel_tol=cfg.sigma_rel_tol,
                     step_mags=cfg.step_mags(),
                     include_coord_starts=cfg.sigma_coord_starts)
        trajectory.append(prop)
        if not prop.accepted:
            halted = "split_rejected"
            break
        J = prop.child

    final_idx = np.asarray(np.sort(idx[J]), dtype=np.int64)
    certs = _final_certificates(system, final_idx, ps, epsilon_by_p,
                                cfg, (cfg.seed,))
    status = _status_from(certs)
    if halted is not None:
        status = "failed"
    window = schedules.predict_final_m(M_ret, delta, theta)
    applicable = halted is None and window.guaranteed
    m_in = None
    if applicable:
        m_in = bool(window.m_low <= final_idx.size <= window.m_high)
    return PipelineResult(final_indices=final_idx,
                          achieved_m=int(final_idx.size), status=status,
                          certificates=certs, trajectory=trajectory,
                          schedule=sched, window=window,
                          window_applicable=applicable, m_in_window=m_in,
                          halted_reason=halted,
                          fit_constant=_fit_constant(
                              cfg.mode, final_idx.size, eps, K, n),
                          **base)


def _fit_constant(mode, m, eps, K, n):
    if n <= 1:
        return None
    if mode == "mt1":
        return m / (eps ** -2 * K * n * math.log(n))
    return m / theoretical_budget("MT2", K=K, n=n, epsilon=eps)


def theoretical_budget(theorem: str, K: float, n: float, epsilon: float,
                       C: float = 1.0) -> float:
    """Point-count budgets of the headline statements, evaluated literally
    with a caller-chosen constant C (the true absolute constants are
    ineffective).  n may be any real >= 1."""
    if K <= 0.0 or n < 1 or epsilon <= 0.0:
        raise ValueError("need K > 0, n >= 1, epsilon > 0")
    if theorem == "MT1":
        return C * epsilon ** -2 * K * n * math.log(n)
    if theorem == "MT2":
        kn = K * n
        if kn <= 1.0:
            raise ValueError("MT2 budget needs Kn > 1")
        li = math.log(1.0 / epsilon)
        return (C * epsilon ** -2 * kn * (math.log(kn) + li)
                * (li + _loglog(kn)) ** 2)
    if theorem == "prelim_L63":
        return (C * K * epsilon ** -2 * math.log(2.0 / epsilon)
                * n * n * math.log(n))
    raise ValueError(f"unknown theorem {theorem!r}")


@dataclass(frozen=True)
class ScalingRow:
    n: int
    rep: int
    achieved_m: int
    fit_constant: Optional[float]
    status: str
    result: PipelineResult


@dataclass(frozen=True)
class ScalingTable:
    rows: list
    fitted_constant: Optional[float]
    epsilon: float
    mode: str

    def to_csv(self) -> str:
        buf = io.StringIO()
        buf.write("n,rep,achieved_m,fit_constant,status\n")
        for r in self.rows:
            fc = "" if r.fit_constant is None else repr(r.fit_constant)
            buf.write(f"{r.n},{r.rep},{r.achieved_m},{fc},{r.status}\n")
        return buf.getvalue()


def scaling_study(system_builder, dims, epsilon: float, repetitions: int = 1,
                  seed: int = 0, mode: str = "mt1", p: float = 1.5,
                  config: Optional[PipelineConfig] = None) -> ScalingTable:
    """Run the pipeline across dimensions and fit the achieved counts
    against the shape epsilon^-2 n log(n) by least squares through the
    origin (rows that failed or have n = 1 are excluded from the fit but
    kept in the table).

    system_builder(n) must return a system of dimension n.  Each row gets
    its own derived seed, so the table is identical for any worker count.
    """
    dims = list(dims)
    if not dims:
        raise ValueError("dims must be nonempty")
    if repetitions < 1:
        raise ValueError("repetitions must be >= 1")
    cfg = config or PipelineConfig()
    jobs = [(i, n_dim, r) for i, n_dim in enumerate(dims)
            for r in range(repetitions)]

    def one(job):
        i, n_dim, r = job
        row_cfg = replace(cfg, seed=_child_seed(seed, i, r))
        system = system_builder(n_dim)
        if mode == "mt1":
            res = run_mt1(system, epsilon, row_cfg)
        else:
            res = run_mt2(system, p, epsilon, row_cfg)
        return ScalingRow(n=n_dim, rep=r, achieved_m=res.achieved_m,
                          fit_constant=res.fit_constant, status=res.status,
                          result=res)

    rows = det_map(one, jobs)
    xs, ys = [], []
    for row in rows:
        if row.status != "failed" and row.n > 1:
            xs.append(epsilon ** -2 * row.n * math.log(row.n))
            ys.append(row.achieved_m)
    fit = None
    if xs:
        xa, ya = np.asarray(xs), np.asarray(ys)
        fit = float(np.dot(xa, ya) / np.dot(xa, xa))
    return ScalingTable(rows=list(rows), fitted_constant=fit,
                        epsilon=epsilon, mode=mode)


def talagrand_rudelson_probe(system: OrthonormalSystem, p: float,
                             sign_draws: int = 16, seed: int = 0,
                             probe_budget: int = 2, max_iter: int = 40,
                             rel_tol: float = 1e-8, step_mags=None):
    """Monte Carlo estimate of E sup |sum_i eps_i mu_i |f(x_i)|^p| over f
    in the span with weighted p-norm at most 1, plus the matching decay
    envelope for constant fitting.

    The inner sup is exact for p = 2 (symmetric eigenvalue problem; the
    system's orthonormality makes the constraint Gram the identity) and
    probe-based for p in (1, 2), where the objective is a ratio of
    weighted power sums because the functional is p-homogeneous.  Returns
    (estimate, envelope, per-draw values).
    """
    if not (1.0 <= p <= 2.0):
        raise ValueError(f"p must lie in [1, 2], got {p}")
    n = system.dim
    M = system.m_points
    K = christoffel(system).nikolskii_K
    Phi = system.values
    mu = system.domain.weights

    def one_draw(t):
        rng = np.random.default_rng(np.random.SeedSequence(entropy=(seed, t)))
        signs = rng.integers(0, 2, size=M) * 2.0 - 1.0
        if p == 2.0:
            G = Phi.T @ ((mu * signs)[:, None] * Phi)
            ev = np.linalg.eigvalsh(G)
            return float(max(abs(ev[0]), abs(ev[-1])))
        starts = kernels.probe_starts(n, probe_budget, (seed, t))
        hi = kernels.probe_optimize(Phi, mu * signs, mu, p, starts,
                                    maximize=True, max_iter=max_iter,
                                    rel_tol=rel_tol, step_mags=step_mags)
        lo = kernels.probe_optimize(Phi, mu * signs, mu, p, starts,
                                    maximize=False, max_iter=max_iter,
                                    rel_tol=rel_tol, step_mags=step_mags)
        return float(max(hi.max(), -lo.min()))

    vals = np.array(det_map(one_draw, list(range(sign_draws))))
    estimate = float(vals.mean())
    if p in (1.0, 2.0):
        envelope = math.sqrt(K * n * math.log(max(n, 2)) / M)
    else:
        envelope = (math.sqrt(K * n * math.log(M) / M)
                    * math.log(M / (K * n) + 2.0))
    return estimate, envelope, vals
