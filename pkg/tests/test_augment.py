import json

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from scipy.spatial import Delaunay

from nngmix.augment import (KINDS, FROM_A, FROM_H, GeneratorConfig, cut_mask, gen_ablation,
                            gen_cutmix, gen_cutout, gen_gaussian, gen_mixup, gen_nng_mix, generate)
from nngmix.dataset import TWO_BLOB_CLUSTERS, load_csv, make_synthetic_clusters
from nngmix.errors import ConfigError, DataError
from nngmix.randgen import RngStream
from oracles import partner_rows

GEN_KINDS = [k for k in KINDS if k != "none"]


def two_blob_AH(seed=0):
    ds = make_synthetic_clusters(TWO_BLOB_CLUSTERS, seed)
    return ds.features[ds.labels == 1], ds.features[ds.labels == 0]


def test_config_defaults_and_validation():
    c = GeneratorConfig()
    assert (c.alpha, c.k, c.sigma, c.mask_ratio_range) == (0.2, 10, 0.01, (0.1, 0.3))
    for bad in ({"kind": "npos"}, {"alpha": 0}, {"k": 0}, {"sigma": -1},
                {"mask_ratio_range": (0.3, 0.1)}, {"mask_ratio_range": (0.0, 0.5)}, {"multiplier": -1}):
        with pytest.raises(ConfigError):
            GeneratorConfig(**bad)
    assert GeneratorConfig.from_dict(c.to_dict()) == c


# -- mixup ----------------------------------------------------------------------

def test_mixup_formula_from_provenance():
    A = np.array([[0.0, 0.0], [1.0, 1.0]])
    s = gen_mixup(A, GeneratorConfig(kind="mixup"), 200, RngStream(0))
    p = s.provenance
    want = p.lam[:, None] * A[p.parent] + (1 - p.lam[:, None]) * A[p.partner]
    assert np.array_equal(s.samples, want)
    # a1=(0,0), a2=(1,1), lambda=0.3 -> (0.7, 0.7)
    lam = 0.3
    np.testing.assert_allclose(lam * A[0] + (1 - lam) * A[1], [0.7, 0.7])


def test_mixup_single_anomaly():
    A = np.array([[2.0, -1.0, 3.0]])
    s = gen_mixup(A, GeneratorConfig(kind="mixup"), 50, RngStream(1))
    np.testing.assert_allclose(s.samples, np.repeat(A, 50, axis=0), atol=1e-12)


def test_mixup_inside_convex_hull():
    r = np.random.default_rng(5)
    A = r.normal(size=(12, 2))
    s = gen_mixup(A, GeneratorConfig(kind="mixup"), 2000, RngStream(2))
    hull = Delaunay(A)
    # tolerance for points on the hull boundary (lambda at 0 or 1)
    assert np.all(hull.find_simplex(s.samples, tol=1e-9) >= 0)


# -- cutout -------------------------------------------------------------------------

def test_cutout_mask_example():
    a = np.arange(1.0, 11.0)
    np.testing.assert_array_equal(cut_mask(10, 0.3, 2) * a, [1, 2, 0, 0, 0, 6, 7, 8, 9, 10])


def test_cut_mask_bounds():
    with pytest.raises(ValueError):
        cut_mask(10, 0.3, 8)
    assert cut_mask(1, 0.2, 0).tolist() == [0.0]


def test_cutout_single_feature_zeroed():
    s = gen_cutout(np.array([[5.0], [7.0]]), GeneratorConfig(kind="cutout"), 20, RngStream(0))
    assert np.all(s.samples == 0.0)


def test_cutout_rows_match_provenance():
    r = np.random.default_rng(6)
    A = r.normal(size=(4, 13))
    s = gen_cutout(A, GeneratorConfig(kind="cutout"), 300, RngStream(3))
    p = s.provenance
    for i in range(s.n):
        start, run = p.mask_start[i, 0], p.mask_len[i, 0]
        assert 1 <= run and start + run <= 13
        want = A[p.parent[i]].copy()
        want[start:start + run] = 0
        assert np.array_equal(s.samples[i], want)


def test_cutout_mean_zeroed_fraction():
    d = 10
    A = np.ones((3, d))
    s = gen_cutout(A, GeneratorConfig(kind="cutout"), 10_000, RngStream(4))
    frac = np.mean(s.samples == 0.0)
    # Monte Carlo oracle: round(U(0.1,0.3) * 10) / 10, independent draws
    r = np.random.default_rng(0)
    oracle = np.mean(np.clip(np.floor(r.uniform(0.1, 0.3, 10**6) * d + 0.5), 1, d) / d)
    assert 0.18 <= frac <= 0.22
    assert abs(frac - oracle) < 0.005


def test_start_positions_cover_range():
    s = gen_cutout(np.ones((1, 10)), GeneratorConfig(kind="cutout"), 5000, RngStream(5))
    p = s.provenance
    for run in (1, 2, 3):
        starts = p.mask_start[p.mask_len[:, 0] == run, 0]
        assert set(starts.tolist()) == set(range(0, 10 - run + 1))


def test_multiple_runs():
    cfg = GeneratorConfig(kind="cutout", n_runs=3)
    s = gen_cutout(np.ones((2, 20)), cfg, 100, RngStream(6))
    assert s.provenance.mask_start.shape == (100, 3)
    zeros = (s.samples == 0).sum(axis=1)
    assert np.all(zeros <= s.provenance.mask_len.sum(axis=1))
    assert np.all(zeros >= s.provenance.mask_len.max(axis=1))


# -- cutmix ------------------------------------------------------------------------------

def test_cutmix_splice_example():
    a1, a2 = np.ones(4), np.full(4, 9.0)
    m = cut_mask(4, 0.5, 1)
    np.testing.assert_array_equal(m * a1 + (1 - m) * a2, [1, 9, 9, 1])


def test_cutmix_identity_when_parents_equal():
    A = np.array([[1.0, 2.0, 3.0, 4.0]])
    s = gen_cutmix(A, GeneratorConfig(kind="cutmix"), 40, RngStream(0))
    assert np.all(s.samples == A)


def test_cutmix_coordinates_come_from_parents():
    r = np.random.default_rng(7)
    A = r.normal(size=(6, 9))
    s = gen_cutmix(A, GeneratorConfig(kind="cutmix"), 500, RngStream(1))
    p = s.provenance
    a1, a2 = A[p.parent], A[p.partner]
    assert np.all((s.samples == a1) | (s.samples == a2))
    for i in range(s.n):
        st_, run = p.mask_start[i, 0], p.mask_len[i, 0]
        assert np.array_equal(s.samples[i, st_:st_ + run], a2[i, st_:st_ + run])


# -- gaussian ------------------------------------------------------------------------

def test_gaussian_zero_sigma_copies():
    A = np.array([[1.0, 2.0], [3.0, 4.0]])
    s = gen_gaussian(A, GeneratorConfig(kind="gaussian", sigma=0.0), 30, RngStream(0))
    assert np.array_equal(s.samples, A[s.provenance.parent])


def test_gaussian_deviation_statistics():
    A = np.zeros((5, 1))
    s = gen_gaussian(A, GeneratorConfig(kind="gaussian"), 10**5, RngStream(1))
    dev = s.samples - A[s.provenance.parent]
    # half-normal mean sigma * sqrt(2 / pi) = 0.0079788
    assert 0.0079 <= np.abs(dev).mean() <= 0.0081
    assert abs(dev.std(ddof=1) - 0.01) < 1e-4


def test_gaussian_stays_near_parent():
    r = np.random.default_rng(8)
    A = r.normal(size=(10, 6))
    s = gen_gaussian(A, GeneratorConfig(kind="gaussian"), 20_000, RngStream(2))
    # max |eps_j| over 1.2e5 normal coordinates stays below 6 sigma (p ~ 2e-4)
    assert np.max(np.abs(s.samples - A[s.provenance.parent])) < 6 * 0.01


# -- nng-mix --------------------------------------------------------------------------

def test_nng_segment_example():
    A = np.array([[10.0, 0.0]])
    H = np.array([[2.0, 0.0]])
    s = gen_nng_mix(A, H, GeneratorConfig(sigma=0.0), 100, RngStream(0))
    p = s.provenance
    np.testing.assert_allclose(s.samples[:, 0], 2.0 + 8.0 * p.lam, atol=1e-12)
    assert np.all(s.samples[:, 1] == 0.0)
    # the single anomaly has no distinct A-neighbor: every A-pool draw falls back
    assert np.all(p.partner_source == FROM_H)
    assert p.fallback.sum() > 0
    np.testing.assert_allclose(0.5 * A[0] + 0.5 * H[0], [6.0, 0.0])


def test_nng_sigma_zero_on_neighbor_segments():
    r = np.random.default_rng(9)
    A, H = r.normal(size=(30, 3)), r.normal(size=(200, 3))
    cfg = GeneratorConfig(sigma=0.0, k=5)
    s = gen_nng_mix(A, H, cfg, 5000, RngStream(3))
    p = s.provenance
    a1 = A[p.parent]
    a2 = partner_rows(A, H, p)
    resid = s.samples - (p.lam[:, None] * a1 + (1 - p.lam[:, None]) * a2)
    assert np.max(np.abs(resid)) < 1e-10
    # partner really is among the parent's k nearest neighbors in its pool
    for i in range(0, 5000, 37):
        pool = s.neighbor_pools["A" if p.partner_source[i] == FROM_A else "H"][p.parent[i]]
        assert p.partner[i] in pool and len(pool) <= 5
        oracle = np.argsort(np.linalg.norm((A if p.partner_source[i] == FROM_A else H) - A[p.parent[i]], axis=1),
                            kind="stable")
        if p.partner_source[i] == FROM_A:
            oracle = oracle[oracle != p.parent[i]]
        assert set(pool.tolist()) == set(oracle[:5].tolist())


def test_nng_noise_added_before_mixing():
    r = np.random.default_rng(10)
    A, H = r.normal(size=(8, 4)), r.normal(size=(40, 4))
    s = gen_nng_mix(A, H, GeneratorConfig(sigma=0.1), 500, RngStream(4))
    p = s.provenance
    a2 = partner_rows(A, H, p)
    want = p.lam[:, None] * (A[p.parent] + p.noise_a) + (1 - p.lam[:, None]) * (a2 + p.noise_b)
    np.testing.assert_allclose(s.samples, want, atol=1e-12)


def test_nng_pool_choice_frequency():
    A, H = two_blob_AH()
    s = gen_nng_mix(A, H, GeneratorConfig(), 10**5, RngStream(5))
    frac_a = np.mean(s.provenance.partner_source == FROM_A)
    assert 0.49 <= frac_a <= 0.51


def test_nng_reduces_to_neighbor_mixup():
    A = np.array([[0.0, 0.0], [1.0, 0.0], [3.0, 0.0]])
    H = np.array([[50.0, 50.0]])
    s = gen_nng_mix(A, H, GeneratorConfig(sigma=0.0, k=len(A) - 1), 3000, RngStream(6))
    p = s.provenance
    from_a = p.partner_source == FROM_A
    # A-pool rows are plain mixup of two distinct labeled anomalies
    assert np.all(p.partner[from_a] != p.parent[from_a])
    assert np.all(s.samples[from_a, 1] == 0.0)
    assert np.all((s.samples[from_a, 0] >= 0) & (s.samples[from_a, 0] <= 3))


def test_nng_no_cross_cluster_mixing_on_two_blobs():
    A, H = two_blob_AH()
    s = gen_nng_mix(A, H, GeneratorConfig(), 500, RngStream(7))
    p = s.provenance
    from_a = p.partner_source == FROM_A
    assert from_a.sum() > 100
    assert np.all(np.sign(A[p.parent[from_a], 0]) == np.sign(A[p.partner[from_a], 0]))
    assert np.all(np.linalg.norm(s.samples[from_a], axis=1) > 2.0)


def test_nng_errors():
    with pytest.raises(DataError):
        gen_nng_mix(np.empty((0, 2)), np.ones((3, 2)), GeneratorConfig(), 5, RngStream(0))
    with pytest.raises(DataError):
        gen_nng_mix(np.ones((3, 2)), np.empty((0, 2)), GeneratorConfig(), 5, RngStream(0))
    with pytest.raises(DataError):
        gen_nng_mix(np.ones((3, 2)), np.ones((3, 3)), GeneratorConfig(), 5, RngStream(0))


# -- ablations --------------------------------------------------------------------------

def test_mixup_all_partners_span_both_sets():
    A, H = two_blob_AH()
    s = gen_ablation(A, H, GeneratorConfig(kind="mixup_all"), 4000, RngStream(8))
    p = s.provenance
    pool_a = p.partner_source == FROM_A
    a2 = partner_rows(A, H, p)
    want = p.lam[:, None] * A[p.parent] + (1 - p.lam[:, None]) * a2
    np.testing.assert_allclose(s.samples, want, atol=1e-12)
    # partner drawn uniformly over |A| + |H| = 550 rows
    assert abs(pool_a.mean() - 50 / 550) < 0.02
    # lambda = 0.5 with an H partner gives the midpoint
    np.testing.assert_allclose(0.5 * A[0] + 0.5 * H[0], (A[0] + H[0]) / 2)


def test_nng_no_gn_is_noise_free():
    A, H = two_blob_AH()
    cfg = GeneratorConfig(kind="nng_no_gn")
    s = gen_ablation(A, H, cfg, 3000, RngStream(9))
    ref = gen_nng_mix(A, H, GeneratorConfig(kind="nng_no_gn", sigma=0.0), 3000, RngStream(9))
    assert np.array_equal(s.samples, ref.samples)
    p = s.provenance
    a2 = partner_rows(A, H, p)
    np.testing.assert_allclose(s.samples, p.lam[:, None] * A[p.parent] + (1 - p.lam[:, None]) * a2, atol=1e-12)
    # lambda in {0, 1} returns a parent exactly
    for lam, parent in ((1.0, A[p.parent[0]]), (0.0, a2[0])):
        assert np.array_equal(lam * A[p.parent[0]] + (1 - lam) * a2[0], parent)


def test_ablation_rejects_other_kinds():
    with pytest.raises(ConfigError):
        gen_ablation(np.ones((2, 2)), np.ones((2, 2)), GeneratorConfig(kind="mixup"), 3, RngStream(0))


# -- shared contracts --------------------------------------------------------------------

@pytest.mark.parametrize("kind", GEN_KINDS)
def test_count_labels_determinism(kind):
    A, H = two_blob_AH(1)
    A = A[:7]
    cfg = GeneratorConfig(kind=kind, multiplier=5)
    s1 = generate(A, H, cfg, RngStream(3, "generate"))
    s2 = generate(A, H, cfg, RngStream(3, "generate"))
    assert s1.n == 5 * 7
    assert np.all(s1.labels == 1)
    assert np.all(np.isfinite(s1.samples))
    assert s1.samples.tobytes() == s2.samples.tobytes()
    assert s1.provenance_dict() == s2.provenance_dict()
    s3 = generate(A, H, cfg, RngStream(4, "generate"))
    assert s3.samples.tobytes() != s1.samples.tobytes() or kind in ("cutout",)


def test_none_and_zero_multiplier_are_empty():
    A, H = two_blob_AH()
    assert generate(A, H, GeneratorConfig(kind="none"), RngStream(0)).n == 0
    assert generate(A, H, GeneratorConfig(kind="mixup", multiplier=0), RngStream(0)).n == 0


@settings(max_examples=30, deadline=None)
@given(kind=st.sampled_from(GEN_KINDS), n_a=st.integers(1, 12), M=st.integers(1, 8),
       d=st.integers(1, 5), seed=st.integers(0, 2**32))
def test_count_contract_property(kind, n_a, M, d, seed):
    r = np.random.default_rng(seed)
    A, H = r.normal(size=(n_a, d)), r.normal(size=(15, d))
    s = generate(A, H, GeneratorConfig(kind=kind, multiplier=M), RngStream(seed))
    assert s.samples.shape == (M * n_a, d)
    assert np.all(np.isfinite(s.samples))


def test_exports(tmp_path):
    A, H = two_blob_AH()
    s = generate(A, H, GeneratorConfig(multiplier=2), RngStream(0))
    back = load_csv(s.to_csv(tmp_path / "d.csv"))
    assert back.n == s.n and np.all(back.labels == 1)
    np.testing.assert_array_equal(back.features, s.samples)
    prov = json.loads(s.write_provenance(tmp_path / "p.json").read_text())
    assert prov["n"] == s.n and len(prov["rows"]) == s.n
    row = prov["rows"][0]
    assert {"parent", "partner", "partner_source", "lambda", "pool_rank", "fallback"} <= set(row)
    assert len(prov["neighbor_pools"]["A"]) == len(A)


def test_label_lists_only_non_default_settings():
    assert GeneratorConfig(kind="mixup", multiplier=3).label() == "mixup"
    assert GeneratorConfig(kind="nng_mix", k=3, sigma=0.1).label() == "nng_mix[k=3,sigma=0.1]"
