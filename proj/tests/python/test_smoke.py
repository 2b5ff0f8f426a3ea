import math

import numpy as np
import pytest

import divscale


def test_losses():
    assert divscale.mse(np.array([1.0, 2.0]), np.array([1.0, 4.0])) == 2.0
    assert divscale.mae(np.array([1.0, 2.0]), np.array([1.0, 4.0])) == 1.0
    with pytest.raises(divscale.DimensionError):
        divscale.mse(np.zeros(2), np.zeros(3))


def test_similarity_errors():
    assert divscale.cosine_similarity(np.array([1.0, 0.0]), np.array([0.0, 1.0])) == 0.0
    with pytest.raises(divscale.UndefinedSimilarity):
        divscale.cosine_similarity(np.zeros(3), np.zeros(3))


def test_golden_seed():
    assert divscale.derive_seed(0, "cand", 0) == 0xF421B95E4D1DF3FF


def test_decomposition_adds_back():
    rng = np.random.default_rng(0)
    x = np.sin(np.arange(200) * 2 * np.pi / 24) + 0.1 * rng.standard_normal(200)
    trend, seasonal, residual = divscale.stl_decompose(x, 24)
    np.testing.assert_allclose(trend + seasonal + residual, x, atol=1e-9)
    with pytest.raises(divscale.InsufficientLength):
        divscale.stl_decompose(x[:40], 24)


def test_perturb_prefix_length():
    x = np.linspace(0.0, 1.0, 64)
    out, sim = divscale.perturb(x, "prefix", seed=3, intensity=10)
    assert out.shape == (74, 1)
    np.testing.assert_array_equal(out[10:, 0], x)
    assert sim == pytest.approx(1.0)


def test_aggregators_match_numpy():
    rng = np.random.default_rng(1)
    cands = rng.standard_normal((9, 5))
    truth = rng.standard_normal(5)
    em = divscale.exact_match(cands, truth, [1, 4, 9])
    losses = ((cands - truth) ** 2).mean(axis=1)
    assert em[9] == (losses.min(), int(losses.argmin()))
    mv = divscale.majority_vote(cands, [4, 9])
    np.testing.assert_array_equal(mv[4][:, 0], np.median(cands[:4], axis=0))


def test_seasonal_ar_pool_shape():
    ctx = np.sin(np.arange(96) * 2 * np.pi / 24) + 5
    pool = divscale.sample_seasonal_ar(ctx, horizon=12, n=8, seed=1)
    assert pool.shape == (8, 12, 1)
    same = divscale.sample_seasonal_ar(ctx, horizon=12, n=8, seed=1, perturbation="none")
    np.testing.assert_array_equal(pool, same)


def test_theory():
    assert divscale.critical_threshold(0.3, 0.5, 2.0, 1.0) == pytest.approx(math.log(3) / math.log(10 / 7))
    assert divscale.expected_min_em(0.3, 0.5, 2.0, 4) == pytest.approx(0.860150, abs=1e-6)
    mean, se = divscale.mc_expected_min(0.3, 0.5, 2.0, 4, trials=50000, seed=2)
    assert abs(mean - 0.860150) <= 3 * se
    assert divscale.empirical_crossover(0.3, 0.5, 2.0, 1.0, trials=50000) == 4
