"""Finite weighted domains and orthonormal systems on them.

A domain is a finite point set with a probability measure; a system is an
evaluation matrix Phi (M x n) whose columns are orthonormal in L_2(mu).
Families provide raw basis evaluations which are passed through a Gram-based
re-orthonormalization against diag(mu), so every constructed system satisfies
the orthonormality contract regardless of the family's native weight.
"""

from __future__ import annotations

import io
import math
from dataclasses import dataclass

import numpy as np

ORTHO_TOL = 1e-10
RANK_RTOL = 1e-10


@dataclass(frozen=True)
class Domain:
    """Finite point set with a probability measure.

    points holds coordinates when the domain lives on a line (used by the
    polynomial and trigonometric families); index-only domains pass None.
    """

    weights: np.ndarray
    points: np.ndarray = None

    def __post_init__(self):
        w = np.asarray(self.weights, dtype=np.float64)
        if w.ndim != 1 or w.size < 1:
            raise ValueError("weights must be a nonempty 1-d array")
        if np.any(w < 0.0) or not np.all(np.isfinite(w)):
            raise ValueError("weights must be finite and nonnegative")
        total = w.sum()
        if total <= 0.0:
            raise ValueError("measure must have positive total mass")
        object.__setattr__(self, "weights", w / total)
        if self.points is not None:
            pts = np.asarray(self.points, dtype=np.float64)
            if pts.shape[0] != w.shape[0]:
                raise ValueError("points and weights must have equal length")
            object.__setattr__(self, "points", pts)

    @property
    def size(self) -> int:
        return int(self.weights.shape[0])

    @property
    def has_zero_weights(self) -> bool:
        """Atoms of zero measure are kept but flagged as removable."""
        return bool(np.any(self.weights == 0.0))


def build_domain(grid: int = None, points=None, weights=None,
                 interval=None) -> Domain:
    """Uniform periodic grid (grid=M on [0, 2*pi)) or explicit points/weights.

    With `points` given, `weights` defaults to uniform.  `interval=(a, b)`
    with `grid` lays out M equispaced points on [a, b] inclusive (the
    non-periodic variant used by the polynomial families).
    """
    if grid is not None:
        if points is not None:
            raise ValueError("pass either grid or points, not both")
        if grid < 1:
            raise ValueError(f"grid size must be >= 1, got {grid}")
        if interval is None:
            pts = 2.0 * math.pi * np.arange(grid) / grid
        else:
            a, b = float(interval[0]), float(interval[1])
            pts = np.linspace(a, b, grid)
        w = np.full(grid, 1.0 / grid)
        return Domain(weights=w, points=pts)
    if points is None:
        raise ValueError("need grid or points")
    pts = np.asarray(points, dtype=np.float64)
    if weights is None:
        weights = np.full(pts.shape[0], 1.0 / pts.shape[0])
    return Domain(weights=np.asarray(weights, dtype=np.float64), points=pts)


@dataclass(frozen=True)
class OrthonormalSystem:
    """Evaluation matrix Phi (M x n) with mu-orthonormal columns."""

    domain: Domain
    values: np.ndarray

    def __post_init__(self):
        v = np.ascontiguousarray(self.values, dtype=np.float64)
        if v.ndim != 2 or v.shape[0] != self.domain.size:
            raise ValueError("values must be (M, n) over the domain")
        object.__setattr__(self, "values", v)

    @property
    def m_points(self) -> int:
        return int(self.values.shape[0])

    @property
    def dim(self) -> int:
        return int(self.values.shape[1])

    def gram(self) -> np.ndarray:
        return self.values.T @ (self.domain.weights[:, None] * self.values)

    def orthonormality_defect(self) -> float:
        g = self.gram()
        return float(np.max(np.abs(g - np.eye(self.dim))))


def _raw_family(family: str, domain: Domain, degree=None, dim=None,
                seed=None, matrix=None) -> np.ndarray:
    if family == "trigonometric":
        if degree is None or degree < 0:
            raise ValueError("trigonometric family needs degree >= 0")
        x = domain.points
        if x is None:
            raise ValueError("trigonometric family needs point coordinates")
        M = domain.size
        n = 2 * degree + 1
        if M < n:
            raise ValueError(f"grid of {M} points cannot carry 2*{degree}+1 = {n} functions")
        # uniform periodic grid expected; exact discrete orthogonality then holds
        ref = 2.0 * math.pi * np.arange(M) / M
        if np.max(np.abs(x - ref)) > 1e-9 or np.max(np.abs(domain.weights - 1.0 / M)) > 1e-15:
            raise ValueError("trigonometric family needs the uniform periodic grid")
        cols = [np.ones(M)]
        for k in range(1, degree + 1):
            cols.append(math.sqrt(2.0) * np.cos(k * x))
            cols.append(math.sqrt(2.0) * np.sin(k * x))
        return np.column_stack(cols)
    if family == "chebyshev":
        if dim is None or dim < 1:
            raise ValueError("chebyshev family needs dim >= 1")
        if domain.points is None:
            raise ValueError("chebyshev family needs point coordinates")
        return np.polynomial.chebyshev.chebvander(domain.points, dim - 1)
    if family == "legendre":
        if dim is None or dim < 1:
            raise ValueError("legendre family needs dim >= 1")
        if domain.points is None:
            raise ValueError("legendre family needs point coordinates")
        return np.polynomial.legendre.legvander(domain.points, dim - 1)
    if family == "random_orthonormal":
        if dim is None or dim < 1:
            raise ValueError("random family needs dim >= 1")
        if seed is None:
            raise ValueError("random family needs a seed")
        rng = np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), 0xA5)))
        return rng.standard_normal((domain.size, dim))
    if family == "explicit":
        if matrix is None:
            raise ValueError("explicit family needs matrix")
        return np.asarray(matrix, dtype=np.float64)
    raise ValueError(f"unknown family {family!r}")


def build_system(domain: Domain, family: str, degree=None, dim=None,
                 seed=None, matrix=None) -> OrthonormalSystem:
    """Build a family's raw evaluations and re-orthonormalize against mu.

    The re-orthonormalization right-multiplies by the inverse symmetric
    square root of the weighted Gram matrix, so it is the identity (up to
    roundoff) on an already orthonormal input.  Raises ValueError when the
    weighted evaluations are numerically rank deficient (smallest singular
    value below 1e-10 times the largest).
    """
    raw = _raw_family(family, domain, degree=degree, dim=dim, seed=seed, matrix=matrix)
    if raw.ndim != 2 or raw.shape[0] != domain.size:
        raise ValueError("family evaluations must be (M, n) over the domain")
    g = raw.T @ (domain.weights[:, None] * raw)
    evals, evecs = np.linalg.eigh(g)
    svals = np.sqrt(np.maximum(evals, 0.0))
    if svals[0] < RANK_RTOL * svals[-1] or svals[-1] == 0.0:
        raise ValueError("family evaluations are rank deficient under the measure")
    inv_root = (evecs / svals[None, :]) @ evecs.T
    return OrthonormalSystem(domain=domain, values=raw @ inv_root)


def restrict_system(system: OrthonormalSystem, indices) -> OrthonormalSystem:
    """System re-orthonormalized on the uniform measure over the given index
    multiset (duplicates become repeated points of the restricted domain)."""
    idx = np.asarray(indices, dtype=np.int64)
    sub = Domain(weights=np.full(idx.shape[0], 1.0 / idx.shape[0]))
    return build_system(sub, "explicit", matrix=system.values[idx])


@dataclass(frozen=True)
class ChristoffelProfile:
    """Pointwise squared amplitude w(x_i)^2 = sum_j u_j(x_i)^2 and the
    uniform-norm constant K = max_i w(x_i)^2 / n."""

    values: np.ndarray
    nikolskii_K: float
    dim: int

    @property
    def sup_bound(self) -> float:
        """sup_{f in X_n} ||f||_inf / ||f||_2 equals sqrt(K*n)."""
        return math.sqrt(self.nikolskii_K * self.dim)


def christoffel(system: OrthonormalSystem) -> ChristoffelProfile:
    """Christoffel profile of the system; checks the trace identity
    sum_i mu_i w(x_i)^2 = n to 1e-8 relative."""
    vals = np.einsum("ij,ij->i", system.values, system.values)
    n = system.dim
    trace = float(np.dot(system.domain.weights, vals))
    if abs(trace - n) > 1e-8 * n:
        raise ValueError(f"trace identity violated: sum mu*w^2 = {trace}, dim = {n}")
    K = float(vals.max()) / n
    if not system.domain.has_zero_weights and K * n < 1.0 - 1e-12:
        raise ValueError("sup of w^2 below 1 is impossible on a full-support measure")
    return ChristoffelProfile(values=vals, nikolskii_K=K, dim=n)


def save_system(system: OrthonormalSystem, stream) -> None:
    """Text format: first line 'M n', then M rows of weight followed by the
    n basis values at that point, 17 significant digits."""
    close = False
    if isinstance(stream, (str, bytes)):
        stream = open(stream, "w")
        close = True
    try:
        M, n = system.values.shape
        stream.write(f"{M} {n}\n")
        for i in range(M):
            row = [f"{system.domain.weights[i]:.17g}"]
            row.extend(f"{v:.17g}" for v in system.values[i])
            stream.write(" ".join(row) + "\n")
    finally:
        if close:
            stream.close()


def load_system(stream) -> OrthonormalSystem:
    """Parse save_system output; re-validates orthonormality to 1e-10."""
    close = False
    if isinstance(stream, (str, bytes)):
        stream = open(stream, "r")
        close = True
    try:
        header = stream.readline().split()
        if len(header) != 2:
            raise ValueError("system header must be 'M n'")
        M, n = int(header[0]), int(header[1])
        data = np.loadtxt(io.StringIO(stream.read()), ndmin=2)
        if data.shape != (M, n + 1):
            raise ValueError(f"expected {M} rows of weight plus {n} values")
    finally:
        if close:
            stream.close()
    dom = Domain(weights=data[:, 0])
    system = OrthonormalSystem(domain=dom, values=data[:, 1:])
    defect = system.orthonormality_defect()
    if defect > ORTHO_TOL:
        raise ValueError(f"loaded system is not orthonormal (defect {defect:.3e})")
    return system
