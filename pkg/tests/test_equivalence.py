import math

import numpy as np
import pytest

from xfid.alignment import match_effects
from xfid.dataset import Dataset, kmeans, sample_dataset
from xfid.equivalence import (adjust, background_expectation, coefficients_to_contributions,
                              group_sums, lime_unnormalize, pdp_center, reference_expectations,
                              shap_add_expectation, zero_tolerance_filter)
from xfid.explainers import explain_kernelshap, explain_lime, explain_pdp
from xfid.expr import AdditiveModel, Apply, Effect, Leaf, eval_effects, linear_model
from xfid.generate import GenParams, generate_model
from xfid.ground_truth import GroundTruthExplanation, explain_ground_truth
from xfid.metrics import comparison_matrices


def test_unnormalize_identity():
    t0, t = lime_unnormalize(0.7, [1.0, -2.0], [0, 0], [1, 1])
    assert t0 == 0.7 and t.tolist() == [1.0, -2.0]


def test_unnormalize_example():
    t0, t = lime_unnormalize(1.0, [2.0], [3.0], [2.0])
    assert t.tolist() == [1.0] and t0 == -2.0


def test_unnormalize_prediction_invariance():
    rng = np.random.default_rng(0)
    mu, sigma = rng.normal(size=3), rng.uniform(0.5, 2, size=3)
    theta0, theta = 0.3, rng.normal(size=3)
    r0, r = lime_unnormalize(theta0, theta, mu, sigma)
    X = rng.normal(size=(100, 3))
    z_pred = theta0 + ((X - mu) / sigma) @ theta
    assert np.max(np.abs(z_pred - (r0 + X @ r))) <= 1e-12


def test_coefficients_to_contributions():
    X = np.array([[0.5, 0.5], [1.0, -2.0]])
    assert np.all(coefficients_to_contributions([0, 0], X) == 0)
    assert np.array_equal(coefficients_to_contributions([1, 1], X), X.T)
    assert coefficients_to_contributions([2, -1], X[:1])[:, 0].tolist() == [1.0, -0.5]


def _gt(effects, expected):
    n = 1
    return GroundTruthExplanation(effects, np.zeros((len(effects), n)), np.asarray(expected))


def test_shap_add_back_rules():
    match = match_effects([(0,), (1,)], [(0,)])
    sums = np.array([[0.4], [0.0]])
    assert np.array_equal(shap_add_expectation(sums, match, _gt([(0,), (1,)], [0, 0])), sums)
    out = shap_add_expectation(sums, match, _gt([(0,), (1,)], [0.5, 0.25]))
    assert out[:, 0].tolist() == [0.9, 0.25]  # silent group gets E[C] only


def test_shap_linear_closed_form():
    # 2*x0 with background mean 0.1: phi = 2(x - 0.1), E[C] = 0.2
    bg = np.array([[0.1 - 0.3], [0.1 + 0.3]])
    data = Dataset.from_array(bg)
    m = linear_model([2.0])
    x = np.array([[0.7]])
    expl = explain_kernelshap(m, data, x, bg)
    assert expl.values[0, 0] == pytest.approx(2 * (0.7 - 0.1))
    gt = GroundTruthExplanation([(0,)], 2 * x.T, np.array([0.2]))
    match = match_effects([(0,)], [(0,)])
    _, Vhat = comparison_matrices(match, gt, adjust(expl, data))
    assert Vhat[0, 0] == pytest.approx(1.4)


def test_background_expectation_weighted():
    m = AdditiveModel(1, (Effect.of(Apply("square", (Leaf(0),))),))
    bg = np.array([[1.0], [2.0]])
    assert background_expectation(m, bg, [3, 1])[0] == pytest.approx((3 * 1 + 4) / 4)


def test_shap_main_effects_exact_after_correction():
    data = sample_dataset(4, 0)
    m = generate_model(GenParams(4, 0, 1.5, seed=3), data=data.X)
    gt = explain_ground_truth(m, data)
    bg, counts, _ = kmeans(data.X, 20, 1)
    idx = np.arange(10)
    expl = explain_kernelshap(m, data, data.X[idx], bg, background_weights=counts,
                              sample_indices=idx)
    ref = reference_expectations(m, expl, gt)
    match = match_effects(gt.effects, expl.effects)
    V, Vhat = comparison_matrices(match, ref, adjust(expl, data))
    assert np.max(np.abs(V - Vhat)) < 1e-10


def test_pdp_centering():
    data = sample_dataset(1, 1)
    grid = np.percentile(data.X, np.linspace(0, 100, 10), axis=0).T
    flat = np.full_like(grid, 3.0)
    assert np.all(pdp_center(np.full((1, 5), 3.0), data, grid, flat) == 0)
    ident = explain_pdp(AdditiveModel(1, (Effect.of(Leaf(0)),)), data, data.X[:50])
    centered = pdp_center(ident.values.T, data, ident.pd_grid, ident.pd_curve)
    se = data.X[:, 0].std() / math.sqrt(data.n)
    assert np.all(np.abs(centered[0] - data.X[:50, 0]) <= 3 * se)


def test_pdp_centered_matches_centered_effects():
    data = sample_dataset(3, 2)
    m = AdditiveModel(3, (Effect.of(Apply("exp", (Leaf(0),))),
                          Effect.of(Apply("square", (Leaf(1),))),
                          Effect.of(Apply("sin", (Leaf(2),)))))
    expl = explain_pdp(m, data, data.X[:200], sample_indices=np.arange(200))
    adj = adjust(expl, data)
    C = eval_effects(m, data.X[:200])
    truth = C - eval_effects(m, data.X).mean(axis=1, keepdims=True)
    for j in range(3):
        q1, q3 = np.quantile(truth[j], [0.25, 0.75])
        assert np.sqrt(np.mean((adj.contributions[j] - truth[j]) ** 2)) / (q3 - q1) <= 0.05


def test_lime_adjusted_linear():
    data = sample_dataset(3, 4)
    coefs = [1.0, -0.5, 2.0]
    expl = explain_lime(linear_model(coefs), data, data.X[:5], ridge=1e-6)
    adj = adjust(expl, data)
    assert adj.contributions == pytest.approx((data.X[:5] * coefs).T, abs=1e-3)
    assert adj.prediction == pytest.approx(data.X[:5] @ coefs, abs=1e-3)


def test_zero_tolerance_filter():
    C = np.array([[0.0, 0.0], [1e-3, 0.0], [5e-9, -5e-9]])
    assert zero_tolerance_filter(C).tolist() == [False, True, False]
    assert zero_tolerance_filter(C, atol=1e-10).tolist() == [False, True, True]


def test_group_sums():
    data = sample_dataset(2, 0)
    expl = explain_pdp(linear_model([1, 1]), data, data.X[:3])
    adj = adjust(expl, data)
    match = match_effects([(0, 1)], [(0,), (1,)])
    assert np.allclose(group_sums(adj, match)[0], adj.contributions.sum(0))
