import math

import numpy as np
import pytest

from marcz import frames
from marcz import pipeline as pl
from marcz.certificates import certify
from marcz.subspace import build_domain, build_system, christoffel


def trig(M, degree):
    return build_system(build_domain(grid=M), "trigonometric", degree=degree)


def test_kernel_matrix_basics():
    one = trig(8, 0)
    assert np.allclose(frames.kernel_matrix(one), 1.0, atol=1e-15)

    system = trig(16, 2)
    D = frames.kernel_matrix(system)
    assert D.shape == (16, 16)
    assert np.max(np.abs(D - D.T)) < 1e-14
    prof = christoffel(system)
    assert np.max(np.abs(np.diag(D) - prof.values)) < 1e-12

    sub = frames.kernel_matrix(system, rows=[0, 3], cols=[1, 2, 5])
    assert sub.shape == (2, 3)
    assert sub[1, 2] == pytest.approx(D[3, 5], abs=1e-15)

    k = frames.DirichletKernel(system)
    assert k.entry(3, 5) == pytest.approx(D[3, 5], abs=1e-15)
    assert np.max(np.abs(k.diagonal() - prof.values)) < 1e-12
    assert np.array_equal(k.matrix(), D)


def test_kernel_reproduces_basis_rows():
    system = trig(8, 1)
    D = frames.kernel_matrix(system)
    mu = system.domain.weights
    # integrating any basis function against a kernel row returns its value
    reproduced = D @ (mu[:, None] * system.values)
    assert np.max(np.abs(reproduced - system.values)) < 1e-12


def test_kernel_psd_rank_and_trace():
    system = trig(64, 2)  # n = 5 on 64 points
    D = frames.kernel_matrix(system)
    ev = np.linalg.eigvalsh(D)
    assert ev[0] >= -1e-10 * ev[-1]
    assert int(np.sum(ev > 1e-8 * ev[-1])) == system.dim
    mu = system.domain.weights
    assert float(np.dot(mu, np.diag(D))) == pytest.approx(system.dim, abs=1e-8)


def test_basis_invariance():
    system = trig(32, 1)
    assert frames.basis_invariance_defect(system, np.eye(3)) == 0.0

    two = build_system(build_domain(grid=32),
                       "random_orthonormal", dim=2, seed=8)
    quarter_turn = np.array([[0.0, -1.0], [1.0, 0.0]])
    assert frames.basis_invariance_defect(two, quarter_turn) < 1e-12
    assert frames.basis_invariance_check(two, orthogonal=quarter_turn)

    # a shear is not orthogonal, so the kernel moves and the check says no
    shear = np.array([[1.0, 0.7], [0.0, 1.0]])
    assert not frames.basis_invariance_check(two, orthogonal=shear)


def test_basis_invariance_random_sample():
    system = build_system(build_domain(grid=64),
                          "random_orthonormal", dim=6, seed=17)
    for s in range(50):
        assert frames.basis_invariance_check(system, rotation_seed=s,
                                             tol=1e-10)
    # seeded transforms replay exactly
    O1 = frames.random_orthogonal(6, seed=4)
    O2 = frames.random_orthogonal(6, seed=4)
    assert np.array_equal(O1, O2)
    assert np.max(np.abs(O1.T @ O1 - np.eye(6))) < 1e-13


def test_reproducing_check():
    system = trig(32, 2)
    e1 = np.zeros(system.dim)
    e1[0] = 1.0
    assert frames.reproducing_check(system, coefficients=e1)

    rng = np.random.default_rng(np.random.SeedSequence(entropy=(21,)))
    for _ in range(100):
        c = rng.standard_normal(system.dim)
        assert frames.reproducing_check(system, coefficients=c, tol=1e-12)

    # an indicator is not in a low trig span: the kernel projects it away
    spike = np.zeros(32)
    spike[7] = 1.0
    assert not frames.reproducing_check(system, values=spike, tol=1e-12)
    assert frames.reproducing_defect(system, spike) > 0.1

    with pytest.raises(ValueError, match="exactly one"):
        frames.reproducing_check(system)
    with pytest.raises(ValueError, match="exactly one"):
        frames.reproducing_check(system, coefficients=e1, values=spike)
    with pytest.raises(ValueError, match="full grid"):
        frames.reproducing_check(system, values=np.ones(5))


def test_frame_constants_scale_certificates():
    system = trig(16, 1)
    subset = np.arange(0, 16, 2)
    cert = certify(system, subset, 2.0)
    report = frames.frame_constants(system, subset, 2.0, certificate=cert)
    assert report.derivation == "from_discretization"
    assert report.m == 8
    assert report.frame_lower == cert.A * 8
    assert report.frame_upper == cert.B * 8
    assert report.weights is None

    # without a precomputed certificate the same numbers come out
    again = frames.frame_constants(system, subset, 2.0)
    assert again.frame_lower == report.frame_lower
    assert again.frame_upper == report.frame_upper

    rec = report.to_record()
    assert "derivation=from_discretization" in rec
    assert "weighted=false" in rec
    assert f"frame_lower={report.frame_lower!r}" in rec
    d = report.to_dict()
    assert d["m"] == 8 and d["p"] == 2.0


def test_frame_constants_weighted_parseval():
    system = trig(16, 2)
    mu = system.domain.weights
    report = frames.frame_constants(system, np.arange(16), 2.0, weights=mu)
    assert report.derivation == "direct"
    assert report.frame_lower == pytest.approx(1.0, abs=1e-12)
    assert report.frame_upper == pytest.approx(1.0, abs=1e-12)
    assert "weighted=true" in report.to_record()

    with pytest.raises(ValueError, match="nonnegative"):
        frames.frame_constants(system, np.arange(16), 2.0, weights=-mu)
    with pytest.raises(ValueError, match="nonempty"):
        frames.frame_constants(system, [], 2.0)
    with pytest.raises(ValueError, match="does not match"):
        frames.frame_constants(system, np.arange(4), 2.0,
                               certificate=certify(system, np.arange(8), 2.0))


def test_frame_constants_on_pipeline_output():
    system = trig(1024, 2)
    cfg = pl.PipelineConfig(c3=0.25, certify_budget=4, certify_max_iter=25,
                            certify_rel_tol=1e-6, sigma_budget=3,
                            sigma_max_iter=20, sigma_rel_tol=1e-6,
                            sigma_coord_starts=False, step_mag_count=8,
                            seed=2)
    res = pl.run_mt1(system, 0.25, cfg)
    pts = res.final_indices
    m = pts.size

    for q in (1.0, 2.0):
        cert = certify(system, pts, q, probe_budget=4, seed=9,
                       max_iter=25, rel_tol=1e-6)
        report = frames.frame_constants(system, pts, q, certificate=cert)
        assert report.frame_lower == pytest.approx(cert.A * m, rel=1e-12)
        assert report.frame_upper == pytest.approx(cert.B * m, rel=1e-12)
        assert report.frame_lower <= report.frame_upper
