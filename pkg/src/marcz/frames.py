"""Projection kernels of the spanned subspace and the frame constants they
induce.

The kernel D(x, y) = sum_k u_k(x) u_k(y) depends only on the span, not on
the basis chosen for it, reproduces every member of the span under the
domain measure, and turns a discretization certificate for a point set into
p-frame constants for the kernel translates at those points: without
weights (A, B) = m * (A_disc, B_disc); with user weights the weighted
power-sum extremes are the frame constants themselves.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional

import numpy as np

from .certificates import certify
from .subspace import OrthonormalSystem


def kernel_matrix(system: OrthonormalSystem, rows=None, cols=None) -> np.ndarray:
    """Kernel entries D(x_i, x_j) for the given row and column indices
    (defaults: all points).  The full matrix is values @ values.T."""
    Phi = system.values
    R = Phi if rows is None else Phi[np.asarray(rows, dtype=np.int64)]
    C = Phi if cols is None else Phi[np.asarray(cols, dtype=np.int64)]
    return R @ C.T


@dataclass(frozen=True)
class DirichletKernel:
    """On-demand view of the subspace kernel for one system."""

    system: OrthonormalSystem

    def entry(self, i: int, j: int) -> float:
        return float(np.dot(self.system.values[i], self.system.values[j]))

    def matrix(self, rows=None, cols=None) -> np.ndarray:
        return kernel_matrix(self.system, rows, cols)

    def diagonal(self) -> np.ndarray:
        """D(x_i, x_i), which is the squared amplitude profile w(x_i)^2."""
        v = self.system.values
        return np.einsum("ij,ij->i", v, v)


def random_orthogonal(n: int, seed: int = 0) -> np.ndarray:
    """Seeded Haar-ish orthogonal matrix: QR of a Gaussian matrix with the
    sign convention that makes the factorization unique."""
    rng = np.random.default_rng(np.random.SeedSequence(entropy=(int(seed), 0x0F)))
    q, r = np.linalg.qr(rng.standard_normal((n, n)))
    return q * np.sign(np.diag(r))[None, :]


def basis_invariance_defect(system: OrthonormalSystem,
                            orthogonal: np.ndarray) -> float:
    """Largest entry change of the kernel after re-expressing the basis
    through the given matrix.  Zero (to roundoff) iff the matrix is
    orthogonal, because the kernel is a property of the span alone."""
    base = kernel_matrix(system)
    rotated = system.values @ orthogonal
    return float(np.max(np.abs(rotated @ rotated.T - base)))


def basis_invariance_check(system: OrthonormalSystem, rotation_seed: int = 0,
                           tol: float = 1e-10,
                           orthogonal: Optional[np.ndarray] = None) -> bool:
    """Whether the kernel survives a basis change within tol.  A seeded
    random orthogonal matrix is drawn unless one is supplied."""
    if orthogonal is None:
        orthogonal = random_orthogonal(system.dim, rotation_seed)
    return basis_invariance_defect(system, orthogonal) <= tol


def reproducing_defect(system: OrthonormalSystem, values) -> float:
    """max_i |sum_j mu_j D(x_i, x_j) g(x_j) - g(x_i)|.

    The kernel integrates members of the span to themselves; anything else
    is mapped to its projection, so the defect measures distance from the
    span in that sense.
    """
    g = np.asarray(values, dtype=np.float64)
    if g.shape != (system.m_points,):
        raise ValueError("values must be given on the full grid")
    Phi = system.values
    projected = Phi @ (Phi.T @ (system.domain.weights * g))
    return float(np.max(np.abs(projected - g)))


def reproducing_check(system: OrthonormalSystem, coefficients=None,
                      values=None, tol: float = 1e-12) -> bool:
    """Whether the kernel reproduces the given function within tol.

    Pass coefficients for a member of the span, or raw grid values for an
    arbitrary function (which fails the check unless it already lies in
    the span).
    """
    if (coefficients is None) == (values is None):
        raise ValueError("pass exactly one of coefficients or values")
    if coefficients is not None:
        c = np.asarray(coefficients, dtype=np.float64)
        if c.shape != (system.dim,):
            raise ValueError("coefficients must have one entry per basis function")
        values = system.values @ c
    return reproducing_defect(system, values) <= tol


@dataclass(frozen=True)
class FrameReport:
    """Frame constants A <= sum |<f, kernel translate>|^p <= B for unit f,
    tied to the point set (and weights) that produced them."""

    points: np.ndarray
    p: float
    frame_lower: float
    frame_upper: float
    derivation: str                      # from_discretization | direct
    weights: Optional[np.ndarray] = None

    def __post_init__(self):
        if not (0.0 <= self.frame_lower <= self.frame_upper):
            raise ValueError("need 0 <= lower <= upper")
        if self.derivation not in ("from_discretization", "direct"):
            raise ValueError(f"unknown derivation {self.derivation!r}")

    @property
    def m(self) -> int:
        return int(self.points.size)

    def to_record(self) -> str:
        lines = [
            f"p={self.p!r}",
            f"m={self.m}",
            f"frame_lower={self.frame_lower!r}",
            f"frame_upper={self.frame_upper!r}",
            f"derivation={self.derivation}",
            f"weighted={'true' if self.weights is not None else 'false'}",
        ]
        return "\n".join(lines) + "\n"

    def to_dict(self) -> dict:
        return {
            "p": self.p,
            "m": self.m,
            "frame_lower": self.frame_lower,
            "frame_upper": self.frame_upper,
            "derivation": self.derivation,
            "weighted": self.weights is not None,
        }


def frame_constants(system: OrthonormalSystem, points, p: float,
                    weights=None, certificate=None, **certify_options) -> FrameReport:
    """Frame constants of the kernel translates at the given points.

    Unweighted: certify the point set and scale by its size, which is exact
    for members of the span because testing f against a kernel translate
    just evaluates f there.  Weighted: the weighted power-sum extremes are
    already the frame constants.  A precomputed certificate for the same
    points/weights/p can be passed to skip the certify call.
    """
    idx = np.asarray(points, dtype=np.int64)
    if idx.size == 0:
        raise ValueError("points must be nonempty")
    if weights is not None:
        weights = np.asarray(weights, dtype=np.float64)
        if np.any(weights < 0.0):
            raise ValueError("weights must be nonnegative")
    if certificate is None:
        certificate = certify(system, idx, p, weights=weights,
                              **certify_options)
    if certificate.p != p or certificate.m != idx.size:
        raise ValueError("certificate does not match the point set")
    if weights is None:
        return FrameReport(points=idx, p=p,
                           frame_lower=certificate.A * idx.size,
                           frame_upper=certificate.B * idx.size,
                           derivation="from_discretization")
    return FrameReport(points=idx, p=p,
                       frame_lower=certificate.A,
                       frame_upper=certificate.B,
                       derivation="direct", weights=weights)
