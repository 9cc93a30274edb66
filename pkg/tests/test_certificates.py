"""Certifier checks against closed forms and brute-force sphere sweeps.

Core claims:
  * p=2 extremes are spectral and match hand-computed Gram eigenvalues.
  * probe extremes for p in [1, 2] land on the brute-force oracle values
    for dim-2 systems, with one-sided semantics (A_est >= A_true - tiny,
    B_est <= B_true + tiny).
  * multisets and explicit quadrature weights agree where they should.
  * certificates round-trip through their text record.
"""

import math

import numpy as np
import pytest

from marcz import certificates as ct
from marcz import kernels
from marcz.subspace import build_domain, build_system

SQ2 = math.sqrt(2.0)


def cos_pair_system(M=8):
    """Span{1, sqrt(2) cos x} on the uniform M-point circle grid."""
    dom = build_domain(grid=M)
    raw = np.column_stack([np.ones(M), SQ2 * np.cos(dom.points)])
    return build_system(dom, family="explicit", matrix=raw)

HALF = np.arange(4)          # first half of the 8-grid, biased toward x=0
EVENS = np.arange(0, 8, 2)   # exact sub-grid

# Brute-force oracle values on the 8-grid (resolution 1e6 sweeps; the p=1
# entries also follow from piecewise-linear analysis: extremes at kinks).
ORACLE = {
    ("half", 1.0): (0.75, 1.25),
    ("half", 1.5): (0.6976000730611679, 1.3023999269388322),
    ("evens", 1.0): (2.0 * (SQ2 - 1.0), 1.0938363213560542),
    ("evens", 1.5): (0.9135727662741102, 1.0309202751732738),
}
SUBSETS = {"half": HALF, "evens": EVENS}


def test_discrete_norm_basics():
    v = np.ones(10)
    for p in (1.0, 1.5, 2.0, 7.0):
        assert ct.discrete_norm(v, p=p) == pytest.approx(1.0)
    assert ct.discrete_norm(v, p=math.inf) == 1.0
    w = np.array([3.0, -4.0])
    assert ct.discrete_norm(w, p=2.0, normalization="sum") == pytest.approx(5.0)
    assert ct.discrete_norm(w, p=2.0) == pytest.approx(5.0 / SQ2)
    assert ct.discrete_norm(w, subset=[1], p=math.inf) == 4.0
    with pytest.raises(ValueError, match="p must be"):
        ct.discrete_norm(w, p=0.5)
    with pytest.raises(ValueError, match="normalization"):
        ct.discrete_norm(w, p=1.0, normalization="median")


def test_restricted_norm_wrapper():
    rn = ct.RestrictedNorm(subset=np.array([0, 2]), exponent=1.0)
    assert rn.of(np.array([2.0, 9.0, 4.0])) == pytest.approx(3.0)
    with pytest.raises(ValueError, match="nonempty"):
        ct.RestrictedNorm(subset=np.array([], dtype=int), exponent=1.0)
    with pytest.raises(ValueError, match="exponent"):
        ct.RestrictedNorm(subset=np.array([0]), exponent=0.3)


def test_spectral_half_grid_closed_form():
    sys2 = cos_pair_system()
    A, B = ct.ratio_extremes_l2(sys2, HALF)
    # Gram of the half subset is [[1, sqrt(2)/4], [sqrt(2)/4, 1]]
    assert A == pytest.approx(1.0 - SQ2 / 4.0, abs=1e-12)
    assert B == pytest.approx(1.0 + SQ2 / 4.0, abs=1e-12)


def test_spectral_even_subgrid_is_exact_quadrature():
    sys2 = cos_pair_system()
    A, B = ct.ratio_extremes_l2(sys2, EVENS)
    assert A == pytest.approx(1.0, abs=1e-12)
    assert B == pytest.approx(1.0, abs=1e-12)


@pytest.mark.parametrize("name", ["half", "evens"])
@pytest.mark.parametrize("p", [1.0, 1.5])
def test_probe_hits_oracle(name, p):
    sys2 = cos_pair_system()
    A_true, B_true = ORACLE[(name, p)]
    A_est, B_est = ct.ratio_extremes_lp(sys2, SUBSETS[name], p,
                                        probe_budget=64, seed=17)
    # one-sided up to oracle sweep resolution
    assert A_est >= A_true - 1e-9
    assert B_est <= B_true + 1e-9
    assert A_est == pytest.approx(A_true, abs=1e-6)
    assert B_est == pytest.approx(B_true, abs=1e-6)


def test_brute_force_matches_frozen_values():
    sys2 = cos_pair_system()
    for (name, p), (A_true, B_true) in ORACLE.items():
        A, B = ct.brute_force_extremes(sys2, SUBSETS[name], p, resolution=100_000)
        assert A == pytest.approx(A_true, abs=5e-5)
        assert B == pytest.approx(B_true, abs=5e-5)


def test_probe_agrees_with_spectral_at_p2():
    sys2 = cos_pair_system()
    A2, B2 = ct.ratio_extremes_l2(sys2, HALF)
    Ap, Bp = ct.ratio_extremes_lp(sys2, HALF, 2.0, probe_budget=16, seed=3)
    assert Ap == pytest.approx(A2, abs=1e-8)
    assert Bp == pytest.approx(B2, abs=1e-8)


def test_complement_symmetry_p15():
    # mean-normalized p-power ratios of a half and its complement sum to 2,
    # and this fixture's halves share extremes, so A = 2 - B
    A, B = ORACLE[("half", 1.5)]
    assert A + B == pytest.approx(2.0, abs=1e-12)
    sys2 = cos_pair_system()
    A_c, B_c = ct.ratio_extremes_lp(sys2, np.arange(4, 8), 1.5,
                                    probe_budget=32, seed=5)
    assert A_c == pytest.approx(A, abs=1e-6)
    assert B_c == pytest.approx(B, abs=1e-6)


def test_multiset_equals_aggregated_weights():
    sys2 = cos_pair_system()
    Am, Bm = ct.ratio_extremes_l2(sys2, np.array([0, 0, 1]))
    Aw, Bw = ct.ratio_extremes_l2(sys2, np.array([0, 1]),
                                  weights=np.array([2.0 / 3.0, 1.0 / 3.0]))
    assert Am == pytest.approx(Aw, abs=1e-14)
    assert Bm == pytest.approx(Bw, abs=1e-14)


def test_uniform_weights_match_plain_mean():
    sys2 = cos_pair_system()
    for p in (1.0, 2.0):
        fn = ct.ratio_extremes_l2 if p == 2.0 else (
            lambda s, sub, w=None: ct.ratio_extremes_lp(s, sub, 1.0, 16, 2, w))
        plain = fn(sys2, HALF)
        weighted = fn(sys2, HALF, np.full(4, 0.25))
        assert plain == pytest.approx(weighted, abs=1e-12)


def test_certify_modes_and_pass_fail():
    sys2 = cos_pair_system()
    good = ct.certify(sys2, EVENS, 2.0, epsilon=0.1)
    assert good.exactness == "spectral_exact"
    assert good.passed is True and good.m == 4
    bad = ct.certify(sys2, HALF, 2.0, epsilon=0.1)
    assert bad.passed is False
    probe = ct.certify(sys2, HALF, 1.0, epsilon=0.3, probe_budget=32, seed=9)
    assert probe.exactness == "probe_estimate"
    assert probe.passed is True and probe.probe_budget == 32
    oracle = ct.certify(sys2, HALF, 1.0, epsilon=0.2, mode="oracle",
                        resolution=5000)
    assert oracle.exactness == "oracle_exact"
    assert oracle.passed is False  # A = 0.75 < 0.8
    neutral = ct.certify(sys2, EVENS, 2.0)
    assert neutral.passed is None and neutral.epsilon is None


def test_certify_validation_errors():
    sys2 = cos_pair_system()
    with pytest.raises(ValueError, match="spectral route"):
        ct.certify(sys2, HALF, 1.5, mode="spectral")
    with pytest.raises(ValueError, match="epsilon"):
        ct.certify(sys2, HALF, 2.0, epsilon=0.0)
    with pytest.raises(ValueError, match="mode"):
        ct.certify(sys2, HALF, 2.0, mode="psychic")
    with pytest.raises(ValueError, match="out of range"):
        ct.ratio_extremes_l2(sys2, np.array([0, 99]))
    with pytest.raises(ValueError, match="nonempty"):
        ct.ratio_extremes_l2(sys2, np.array([], dtype=int))
    with pytest.raises(ValueError, match="nonnegative"):
        ct.ratio_extremes_l2(sys2, HALF, weights=np.array([1.0, 1.0, 1.0, -0.1]))
    with pytest.raises(ValueError, match="match the subset"):
        ct.ratio_extremes_l2(sys2, HALF, weights=np.ones(3))
    with pytest.raises(ValueError, match="p must lie"):
        ct.ratio_extremes_lp(sys2, HALF, 2.5)
    dom = build_domain(grid=16)
    sys5 = build_system(dom, family="trigonometric", degree=2)
    with pytest.raises(ValueError, match="dim <= 3"):
        ct.brute_force_extremes(sys5, np.arange(8), 1.0)
    sys3 = build_system(dom, family="trigonometric", degree=1)
    with pytest.raises(ValueError, match="resolution"):
        ct.brute_force_extremes(sys3, np.arange(8), 1.0, resolution=100_000)


def test_certificate_record_roundtrip():
    cert = ct.DiscretizationCertificate(
        p=1.5, m=37, A=0.8123456789012345, B=1.1987654321098765,
        exactness="probe_estimate", epsilon=0.25, passed=True,
        probe_budget=64, seed=123)
    back = ct.certificate_from_record(cert.to_record())
    assert back == cert
    minimal = ct.DiscretizationCertificate(
        p=2.0, m=4, A=1.0, B=1.0, exactness="spectral_exact")
    assert ct.certificate_from_record(minimal.to_record()) == minimal


def test_backend_paths_agree():
    sys2 = cos_pair_system()
    w_num = np.bincount(HALF, minlength=8) / 4.0
    w_den = sys2.domain.weights
    c0 = np.array([0.6, 0.8])
    np_mod = kernels.get_backend("numpy")
    v_np, _ = kernels.refine_ratio(sys2.values, w_num, w_den, 1.5, c0,
                                   maximize=True, impl=np_mod)
    v_def, _ = kernels.refine_ratio(sys2.values, w_num, w_den, 1.5, c0,
                                    maximize=True)
    assert v_def == pytest.approx(v_np, rel=1e-9)
    if kernels.HAVE_COMPILED:
        comp = kernels.get_backend("compiled")
        v_c, _ = kernels.refine_ratio(sys2.values, w_num, w_den, 1.5, c0,
                                      maximize=True, impl=comp)
        assert v_c == pytest.approx(v_np, rel=1e-9)
