"""Tests for domains, orthonormal systems, and the Christoffel profile.

Core claims:
    - build_domain normalizes measures and rejects invalid ones
    - every family comes out mu-orthonormal to 1e-10 (Gram defect)
    - re-orthonormalization is idempotent on an orthonormal input (<= 1e-12
      per entry) and rejects rank-deficient inputs
    - the trigonometric family on a uniform grid is exactly orthonormal
    - christoffel satisfies the trace identity and the sup bound sqrt(K n)
      dominates |f(x_i)|/||f||_2 over random coefficients
    - text serialization round-trips at 17 significant digits
"""

import io
import math

import numpy as np
import pytest

from marcz.subspace import (
    ChristoffelProfile,
    Domain,
    OrthonormalSystem,
    build_domain,
    build_system,
    christoffel,
    load_system,
    restrict_system,
    save_system,
)


def test_domain_normalizes_and_validates():
    d = build_domain(points=[0.0, 1.0, 2.0], weights=[2.0, 2.0, 4.0])
    assert d.weights.sum() == pytest.approx(1.0)
    assert d.weights[2] == pytest.approx(0.5)
    assert not d.has_zero_weights
    with pytest.raises(ValueError, match="nonnegative"):
        build_domain(points=[0.0, 1.0], weights=[0.5, -0.5])
    with pytest.raises(ValueError, match="positive total"):
        build_domain(points=[0.0, 1.0], weights=[0.0, 0.0])
    with pytest.raises(ValueError, match="equal length"):
        build_domain(points=[0.0, 1.0], weights=[1.0])
    with pytest.raises(ValueError):
        build_domain()


def test_zero_weight_atoms_kept_but_flagged():
    d = build_domain(points=[0.0, 1.0, 2.0], weights=[1.0, 0.0, 1.0])
    assert d.size == 3
    assert d.has_zero_weights


def test_trigonometric_exact_orthogonality():
    dom = build_domain(grid=16)
    sys5 = build_system(dom, "trigonometric", degree=2)
    assert sys5.dim == 5
    assert sys5.orthonormality_defect() < 1e-14
    # constant column first, then sqrt(2) cos/sin pairs
    assert np.allclose(sys5.values[:, 0], 1.0)
    assert sys5.values[:, 1] == pytest.approx(math.sqrt(2.0) * np.cos(dom.points), abs=1e-12)


def test_trigonometric_grid_requirements():
    dom = build_domain(grid=4)
    with pytest.raises(ValueError, match="grid of 4"):
        build_system(dom, "trigonometric", degree=2)
    skew = build_domain(points=np.linspace(0.0, 1.0, 8))
    with pytest.raises(ValueError, match="uniform periodic"):
        build_system(skew, "trigonometric", degree=1)


@pytest.mark.parametrize("family,kw", [
    ("chebyshev", dict(dim=6)),
    ("legendre", dict(dim=6)),
])
def test_polynomial_families_orthonormalized(family, kw):
    dom = build_domain(grid=64, interval=(-1.0, 1.0))
    system = build_system(dom, family, **kw)
    assert system.dim == 6
    assert system.orthonormality_defect() < 1e-10


def test_random_orthonormal_gram():
    dom = build_domain(points=np.arange(16.0))
    system = build_system(dom, "random_orthonormal", dim=4, seed=7)
    assert system.orthonormality_defect() < 1e-10
    # same seed reproduces, different seed does not
    again = build_system(dom, "random_orthonormal", dim=4, seed=7)
    assert np.array_equal(system.values, again.values)
    other = build_system(dom, "random_orthonormal", dim=4, seed=8)
    assert not np.allclose(system.values, other.values)


def test_reorthonormalization_idempotent():
    dom = build_domain(grid=32)
    system = build_system(dom, "trigonometric", degree=3)
    redone = build_system(dom, "explicit", matrix=system.values)
    assert np.max(np.abs(redone.values - system.values)) <= 1e-12


def test_rank_deficiency_rejected():
    dom = build_domain(points=np.arange(8.0))
    mat = np.ones((8, 2))  # two identical columns
    with pytest.raises(ValueError, match="rank deficient"):
        build_system(dom, "explicit", matrix=mat)


def test_rank_check_ignores_zero_weight_rows():
    # the second column is supported only on a zero-weight atom
    w = np.array([1.0, 1.0, 0.0])
    mat = np.array([[1.0, 0.0], [1.0, 0.0], [0.0, 5.0]])
    dom = Domain(weights=w, points=np.arange(3.0))
    with pytest.raises(ValueError, match="rank deficient"):
        build_system(dom, "explicit", matrix=mat)


def test_restrict_system_uniform_and_orthonormal():
    dom = build_domain(grid=32)
    system = build_system(dom, "trigonometric", degree=2)
    sub = restrict_system(system, [0, 2, 4, 6, 8, 10, 12, 14, 3, 3])
    assert sub.m_points == 10
    assert sub.orthonormality_defect() < 1e-10
    assert sub.domain.weights[0] == pytest.approx(0.1)


def test_christoffel_trig_is_flat():
    dom = build_domain(grid=64)
    system = build_system(dom, "trigonometric", degree=2)
    prof = christoffel(system)
    # sum of squares of the trig system is identically n
    assert prof.values == pytest.approx(np.full(64, 5.0), abs=1e-12)
    assert prof.nikolskii_K == pytest.approx(1.0, abs=1e-13)
    assert prof.sup_bound == pytest.approx(math.sqrt(5.0), rel=1e-12)


def test_christoffel_probe_oracle():
    # max_i |f(x_i)| / ||f||_2 over random unit coefficients never beats sqrt(K n)
    dom = build_domain(points=np.arange(16.0))
    system = build_system(dom, "random_orthonormal", dim=4, seed=11)
    prof = christoffel(system)
    rng = np.random.default_rng(5)
    C = rng.standard_normal((100_000, 4))
    C /= np.linalg.norm(C, axis=1)[:, None]
    sup2 = np.max((C @ system.values.T) ** 2)
    assert sup2 <= prof.nikolskii_K * 4 + 1e-9
    # and the bound is attained at the argmax point up to sampling slack
    assert sup2 >= 0.9 * prof.nikolskii_K * 4


def test_trace_identity_weighted_domain():
    rng = np.random.default_rng(3)
    w = rng.uniform(0.1, 2.0, size=40)
    dom = build_domain(points=np.linspace(-1, 1, 40), weights=w)
    system = build_system(dom, "chebyshev", dim=5)
    prof = christoffel(system)
    assert float(np.dot(dom.weights, prof.values)) == pytest.approx(5.0, rel=1e-12)


def test_text_round_trip():
    dom = build_domain(grid=12)
    system = build_system(dom, "trigonometric", degree=1)
    buf = io.StringIO()
    save_system(system, buf)
    text = buf.getvalue()
    assert text.splitlines()[0] == "12 3"
    loaded = load_system(io.StringIO(text))
    assert loaded.dim == 3
    assert np.max(np.abs(loaded.values - system.values)) < 1e-15
    assert np.max(np.abs(loaded.domain.weights - dom.weights)) < 1e-15


def test_load_rejects_garbage():
    with pytest.raises(ValueError, match="header"):
        load_system(io.StringIO("just one token\nrow\n"))
    bad = "2 2\n0.5 1.0 0.0\n0.5 1.0 0.0\n"  # duplicate rows: not orthonormal
    with pytest.raises(ValueError, match="not orthonormal"):
        load_system(io.StringIO(bad))
