"""Command-line experiment runner.

One invocation runs the discretization pipeline for a family of systems
over one or more dimensions and writes, per run, the selected points
(points.txt), the full run record (result.json), and the halving log
(trajectory.csv) under --out.  With several rows (multiple dims or
repetitions) each row gets a subdirectory plus a summary.json at the top.
--verify re-certifies a previously exported point file instead of running.

Exit codes: 0 all rows succeeded, 2 at least one row (or verification)
failed with partial outputs written, 1 configuration or usage error before
any work.  Every run is fully determined by (flags, seed); MARCZ_THREADS
only changes wall time, never output bytes.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
import tempfile

import numpy as np

from . import pipeline as pl
from .certificates import certify
from .parallel import det_map
from .subspace import build_domain, build_system, load_system

FAMILIES = ("trig", "chebyshev", "legendre", "random", "file")


class UsageError(Exception):
    """Bad flags or config: reported on stderr, exit code 1."""


class _Parser(argparse.ArgumentParser):
    def error(self, message):
        raise UsageError(message)


def _write_atomic(path: str, text: str) -> None:
    """Write via a temp file in the target directory plus rename, so a
    crash never leaves a half-written artifact."""
    directory = os.path.dirname(os.path.abspath(path))
    os.makedirs(directory, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".part_")
    try:
        with os.fdopen(fd, "w") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        try:
            os.unlink(tmp)
        except OSError:
            pass
        raise


def _parse_floats(text: str):
    vals = [float(tok) for tok in str(text).split(",") if tok.strip()]
    if not vals:
        raise UsageError("empty number list")
    return vals


def _parse_ints(text: str):
    return [int(round(v)) for v in _parse_floats(text)]


def _parse_bool(text: str) -> bool:
    low = str(text).strip().lower()
    if low in ("true", "1", "yes", "on"):
        return True
    if low in ("false", "0", "no", "off"):
        return False
    raise UsageError(f"expected a boolean, got {text!r}")


def load_config_file(path: str) -> dict:
    """Flat key=value lines; blank lines and full-line # comments allowed.
    Keys use the flag names with - or _ interchangeably."""
    table = {}
    try:
        with open(path) as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise UsageError(f"cannot read config file: {exc}")
    for ln, raw in enumerate(lines, 1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        if "=" not in line:
            raise UsageError(f"{path}:{ln}: expected key=value, got {line!r}")
        key, val = line.split("=", 1)
        table[key.strip().lower().replace("-", "_")] = val.strip()
    return table


def build_parser() -> _Parser:
    p = _Parser(prog="marcz", description=__doc__.split("\n")[0],
                add_help=True)
    p.add_argument("--config", help="flat key=value file; flags override it")
    p.add_argument("--family", choices=FAMILIES)
    p.add_argument("--degree", type=int)
    p.add_argument("--dim", help="comma list of dimensions")
    p.add_argument("--grid", type=int)
    p.add_argument("--system-file", help="system file for --family file")
    p.add_argument("--p", dest="p_list", help="comma list of exponents")
    p.add_argument("--epsilon", type=float)
    p.add_argument("--mode", choices=("mt1", "mt2"))
    p.add_argument("--seed", type=int)
    p.add_argument("--reps", type=int)
    p.add_argument("--out")
    p.add_argument("--verify", help="re-certify a points.txt instead of running")
    # theorem knobs (one flag per config field)
    p.add_argument("--c5", type=float)
    p.add_argument("--cp", type=float)
    p.add_argument("--c3", type=float)
    p.add_argument("--kappa1", type=float)
    p.add_argument("--kappa2", type=float)
    p.add_argument("--delta-override", type=float)
    p.add_argument("--initial-m", type=int)
    p.add_argument("--growth", type=float)
    p.add_argument("--max-retries", type=int)
    p.add_argument("--max-attempts", type=int)
    p.add_argument("--probe-budget", type=int,
                   help="probe starts per certificate")
    p.add_argument("--certify-max-iter", type=int)
    p.add_argument("--certify-rel-tol", type=float)
    p.add_argument("--sigma-budget", type=int)
    p.add_argument("--sigma-max-iter", type=int)
    p.add_argument("--sigma-rel-tol", type=float)
    p.add_argument("--sigma-coord-starts")
    p.add_argument("--step-mag-count", type=int)
    return p


_CASTS = {
    "degree": int, "grid": int, "seed": int, "reps": int,
    "epsilon": float, "c5": float, "cp": float, "c3": float,
    "kappa1": float, "kappa2": float, "delta_override": float,
    "initial_m": int, "growth": float, "max_retries": int,
    "max_attempts": int, "probe_budget": int, "certify_max_iter": int,
    "certify_rel_tol": float, "sigma_budget": int, "sigma_max_iter": int,
    "sigma_rel_tol": float, "step_mag_count": int,
    "sigma_coord_starts": _parse_bool,
}


class Settings:
    """Flags merged over the config file (flags win)."""

    def __init__(self, args, table):
        self.args = vars(args)
        self.table = table

    def get(self, name, fallback=None):
        v = self.args.get(name)
        if v is not None:
            return v
        if name in self.table:
            raw = self.table[name]
            cast = _CASTS.get(name)
            try:
                return cast(raw) if cast else raw
            except ValueError:
                raise UsageError(f"config key {name}: bad value {raw!r}")
        return fallback


def pipeline_config(s: Settings, seed: int) -> pl.PipelineConfig:
    kw = dict(seed=seed)
    for name in ("kappa1", "kappa2", "c3", "delta_override", "initial_m",
                 "growth", "max_retries", "max_attempts",
                 "certify_max_iter", "certify_rel_tol", "sigma_budget",
                 "sigma_max_iter", "sigma_rel_tol", "step_mag_count"):
        v = s.get(name)
        if v is not None:
            kw[name] = v
    if s.get("c5") is not None:
        kw["C5"] = s.get("c5")
    if s.get("cp") is not None:
        kw["Cp"] = s.get("cp")
    if s.get("probe_budget") is not None:
        kw["certify_budget"] = s.get("probe_budget")
    coord = s.get("sigma_coord_starts")
    if coord is not None:
        kw["sigma_coord_starts"] = (coord if isinstance(coord, bool)
                                    else _parse_bool(coord))
    try:
        return pl.PipelineConfig(**kw)
    except (TypeError, ValueError) as exc:
        raise UsageError(str(exc))


def build_cli_system(s: Settings, dim: int, sys_seed: int):
    family = s.get("family")
    if family is None:
        raise UsageError("--family is required")
    if family == "file":
        path = s.get("system_file")
        if not path:
            raise UsageError("--family file needs --system-file")
        try:
            with open(path) as fh:
                return load_system(fh)
        except (OSError, ValueError) as exc:
            raise UsageError(f"cannot load system: {exc}")
    grid = s.get("grid")
    if grid is None:
        raise UsageError(f"--family {family} needs --grid")
    try:
        if family == "trig":
            if dim % 2 != 1:
                raise UsageError(
                    f"trig dimensions are odd (2*degree + 1), got {dim}")
            dom = build_domain(grid=grid)
            return build_system(dom, "trigonometric", degree=(dim - 1) // 2)
        if family in ("chebyshev", "legendre"):
            dom = build_domain(grid=grid, interval=(-1.0, 1.0))
            return build_system(dom, family, dim=dim)
        dom = build_domain(grid=grid)
        return build_system(dom, "random_orthonormal", dim=dim,
                            seed=sys_seed)
    except ValueError as exc:
        raise UsageError(str(exc))


def resolve_dims(s: Settings) -> list:
    dim_text = s.get("dim")
    degree = s.get("degree")
    if dim_text is not None:
        dims = _parse_ints(dim_text)
        if any(d < 1 for d in dims):
            raise UsageError("dimensions must be >= 1")
        return dims
    if degree is not None:
        family = s.get("family")
        if family in ("trig", None):
            return [2 * degree + 1]
        raise UsageError(f"--degree applies to trig; use --dim for {family}")
    if s.get("family") == "file":
        return [0]  # placeholder, the file fixes the dimension
    raise UsageError("need --dim or --degree")


def resolve_exponents(s: Settings, mode: str):
    """Returns (p list for records, mt2 exponent or None)."""
    text = s.get("p_list")
    if text is None:
        ps = [1.0, 2.0] if mode == "mt1" else [1.5, 2.0]
    else:
        ps = sorted(set(_parse_floats(text)))
    if mode == "mt1":
        if any(q not in (1.0, 2.0) for q in ps):
            raise UsageError("mt1 covers p in {1, 2}; use --mode mt2 for "
                             "intermediate exponents")
        return [1.0, 2.0], None
    inner = [q for q in ps if 1.0 < q < 2.0]
    if len(inner) != 1 or any(q not in (2.0,) for q in ps if q not in inner):
        raise UsageError("mt2 needs exactly one exponent strictly between "
                         "1 and 2 (2 itself is always included)")
    return sorted(set(inner + [2.0])), inner[0]


def _fmt_p(q: float) -> str:
    return f"{q:g}"


def points_text(result: pl.PipelineResult, ps, seed: int) -> str:
    head = (f"# m={result.achieved_m} p={','.join(_fmt_p(q) for q in ps)} "
            f"epsilon={result.epsilon:g} seed={seed}")
    body = "\n".join(str(int(i)) for i in result.final_indices)
    return head + "\n" + body + ("\n" if body else "")


def parse_points_text(text: str) -> np.ndarray:
    lines = [ln.strip() for ln in text.splitlines()]
    lines = [ln for ln in lines if ln and not ln.startswith("#")]
    if not lines:
        raise UsageError("point file holds no indices")
    try:
        return np.array([int(ln) for ln in lines], dtype=np.int64)
    except ValueError:
        raise UsageError("point file is malformed: expected one integer per line")


def _row_record(result: pl.PipelineResult, dim: int, rep: int,
                row_seed: int) -> dict:
    rec = result.to_dict()
    rec["row"] = {"n": dim, "rep": rep, "row_seed": row_seed}
    return rec


def run_rows(s: Settings) -> int:
    out = s.get("out")
    if not out:
        raise UsageError("--out is required")
    mode = s.get("mode", "mt1")
    eps = s.get("epsilon")
    if eps is None:
        raise UsageError("--epsilon is required")
    seed = s.get("seed", 0)
    reps = s.get("reps", 1)
    if reps < 1:
        raise UsageError("--reps must be >= 1")
    dims = resolve_dims(s)
    ps, p_inner = resolve_exponents(s, mode)

    jobs = [(i, dim, r) for i, dim in enumerate(dims) for r in range(reps)]
    single = len(jobs) == 1

    def one(job):
        i, dim, r = job
        row_seed = seed if single else pl._child_seed(seed, i, r)
        cfg = pipeline_config(s, row_seed)
        system = build_cli_system(s, dim, pl._child_seed(seed, 101, dim))
        if mode == "mt1":
            res = pl.run_mt1(system, eps, cfg)
        else:
            res = pl.run_mt2(system, p_inner, eps, cfg)
        return job, row_seed, res

    # config errors must surface before any files are written
    probe_cfg = pipeline_config(s, seed)
    probe_cfg.resolve_kappa2()

    results = det_map(one, jobs)
    failed = 0
    summary_rows = []
    for (i, dim, r), row_seed, res in results:
        row_dir = out if single else os.path.join(out, f"n{dim}_rep{r}")
        _write_atomic(os.path.join(row_dir, "points.txt"),
                      points_text(res, ps, row_seed))
        _write_atomic(os.path.join(row_dir, "result.json"),
                      json.dumps(_row_record(res, dim, r, row_seed),
                                 sort_keys=True, indent=2) + "\n")
        _write_atomic(os.path.join(row_dir, "trajectory.csv"),
                      pl.trajectory_csv(res))
        if res.status == "failed":
            failed += 1
        summary_rows.append({
            "n": res.n, "rep": r, "seed": row_seed, "m": res.achieved_m,
            "status": res.status, "fit_constant": res.fit_constant,
            "theoretical_m": res.theoretical_m,
            "dir": os.path.basename(row_dir) if not single else ".",
        })

    if not single:
        xs = [r["theoretical_m"] for r in summary_rows
              if r["status"] != "failed" and r["theoretical_m"] > 0]
        ys = [r["m"] for r in summary_rows
              if r["status"] != "failed" and r["theoretical_m"] > 0]
        fitted = None
        if xs:
            xa, ya = np.asarray(xs), np.asarray(ys)
            fitted = float(np.dot(xa, ya) / np.dot(xa, xa))
        summary = {"mode": mode, "epsilon": eps, "seed": seed,
                   "rows": summary_rows, "fitted_constant": fitted}
        _write_atomic(os.path.join(out, "summary.json"),
                      json.dumps(summary, sort_keys=True, indent=2) + "\n")
    return 2 if failed else 0


def run_verify(s: Settings) -> int:
    path = s.get("verify")
    eps = s.get("epsilon")
    if eps is None:
        raise UsageError("--verify needs --epsilon")
    try:
        with open(path) as fh:
            idx = parse_points_text(fh.read())
    except OSError as exc:
        raise UsageError(f"cannot read point file: {exc}")
    mode = s.get("mode", "mt1")
    ps, _ = resolve_exponents(s, mode)
    dims = resolve_dims(s)
    if len(dims) != 1:
        raise UsageError("--verify checks one system: pass a single dimension")
    system = build_cli_system(s, dims[0], pl._child_seed(s.get("seed", 0),
                                                         101, dims[0]))
    if np.any(idx < 0) or np.any(idx >= system.m_points):
        raise UsageError("point file indices fall outside the grid")
    all_passed = True
    for q in ps:
        cert = certify(system, idx, q, epsilon=eps,
                       probe_budget=s.get("probe_budget", 32),
                       seed=s.get("seed", 0))
        print(f"p={_fmt_p(q)} A={cert.A!r} B={cert.B!r} "
              f"passed={'true' if cert.passed else 'false'} {cert.exactness}")
        all_passed = all_passed and cert.passed
    return 0 if all_passed else 2


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        table = load_config_file(args.config) if args.config else {}
        s = Settings(args, table)
        if s.get("verify"):
            return run_verify(s)
        return run_rows(s)
    except UsageError as exc:
        sys.stderr.write(f"marcz: error: {exc}\n")
        sys.stderr.write(parser.format_usage())
        return 1
    except ValueError as exc:
        sys.stderr.write(f"marcz: error: {exc}\n")
        return 1


if __name__ == "__main__":
    sys.exit(main())
