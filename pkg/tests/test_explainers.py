import math

import numpy as np
import pytest

from xfid.dataset import Dataset, kmeans, sample_dataset
from xfid.errors import (DegeneratePD, NonFiniteValueFunction, SingularSystem, TaskTimeout,
                         TooFewValidSamples)
from xfid.explainers import (ExplainerExplanation, explain_kernelshap, explain_lime,
                             explain_pdp, weighted_least_squares)
from xfid.explainers.kernelshap import all_coalitions, sample_coalitions, shapley_kernel
from xfid.explainers.pdp import interp_extrap
from xfid.expr import AdditiveModel, Apply, Effect, Leaf, linear_model
from xfid.generate import GenParams, generate_model

from oracles import permutation_shapley


# --- weighted least squares -------------------------------------------------

def test_wls_examples():
    assert weighted_least_squares(np.eye(2), [3, 4], [1, 1]) == pytest.approx([3, 4])
    A = [[1.0], [1.0]]
    assert weighted_least_squares(A, [0, 2], [1, 1]) == pytest.approx([1.0])
    assert weighted_least_squares(A, [0, 2], [3, 1]) == pytest.approx([0.5])


def test_wls_intercept_not_penalized():
    A = np.array([[1.0, 0.0], [1.0, 0.0]])
    theta = weighted_least_squares(A, [5.0, 5.0], [1, 1], ridge=10.0, intercept=0)
    assert theta == pytest.approx([5.0, 0.0])
    shrunk = weighted_least_squares(A, [5.0, 5.0], [1, 1], ridge=10.0)
    assert shrunk[0] < 5.0


def test_wls_matches_lstsq():
    rng = np.random.default_rng(1)
    A = rng.normal(size=(40, 4))
    b = rng.normal(size=40)
    w = rng.uniform(0.1, 2, size=40)
    ref = np.linalg.lstsq(A * np.sqrt(w)[:, None], b * np.sqrt(w), rcond=None)[0]
    assert weighted_least_squares(A, b, w) == pytest.approx(ref, abs=1e-10)


def test_wls_singular():
    with pytest.raises(SingularSystem):
        weighted_least_squares([[np.nan]], [1.0], [1.0])
    # rank deficiency alone is rescued by the jitter
    assert np.all(np.isfinite(weighted_least_squares(np.zeros((3, 2)), [1, 2, 3], [1, 1, 1])))


# --- KernelSHAP --------------------------------------------------------------

def test_kernel_and_coalitions():
    masks = all_coalitions(4)
    assert masks.shape == (14, 4)
    assert len({m.tobytes() for m in masks}) == 14
    assert shapley_kernel(4, [1, 2, 3]) == pytest.approx([3 / 12, 3 / 24, 3 / 12])
    s = sample_coalitions(10, 100, np.random.default_rng(0))
    assert s.shape == (100, 10)
    assert np.all(s[0::2] == ~s[1::2])
    assert np.all((s.sum(1) > 0) & (s.sum(1) < 10))


@pytest.mark.parametrize("seed", range(6))
def test_exact_shap_matches_permutation_oracle(seed):
    d = 2 + seed % 4
    data = sample_dataset(d, seed)
    m = generate_model(GenParams(d, 0, 1.0, 0.5, 2, seed), data=data.X)
    bg, counts, _ = kmeans(data.X, 8, seed)
    pts = data.X[:3]
    expl = explain_kernelshap(m, data, pts, bg, mode="exact", background_weights=counts)
    for s in range(3):
        ref = permutation_shapley(m, pts[s], bg, counts)
        assert expl.values[s] == pytest.approx(ref, abs=1e-8)
    assert expl.values.sum(1) + expl.base_value == pytest.approx(m(pts), abs=1e-10)


def test_linear_closed_form_and_dummy():
    coefs = [1.5, 0.0, -2.0, 0.7]
    m = linear_model(coefs)
    data = sample_dataset(4, 0)
    bg = data.X[:50]
    expl = explain_kernelshap(m, data, data.X[100:110], bg, mode="exact")
    want = (data.X[100:110] - bg.mean(0)) * np.array(coefs)
    assert np.max(np.abs(expl.values - want)) < 1e-10
    assert np.max(np.abs(expl.values[:, 1])) < 1e-10


def test_symmetric_players():
    m = AdditiveModel(2, (Effect.of(Leaf(0)), Effect.of(Leaf(1))))
    bg = np.array([[-0.5, -0.5], [0.5, 0.5], [0.2, 0.2]])
    data = Dataset.from_array(bg)
    expl = explain_kernelshap(m, data, [[0.3, 0.3]], bg, mode="exact")
    assert expl.values[0, 0] == pytest.approx(expl.values[0, 1], abs=1e-14)


def test_sampled_mode_linear_is_exact():
    coefs = np.linspace(-1, 1, 14)
    m = linear_model(coefs)
    data = sample_dataset(14, 3)
    bg = data.X[:30]
    expl = explain_kernelshap(m, data, data.X[40:42], bg, mode="auto", seed=5,
                              sample_indices=[40, 41])
    assert expl.diagnostics["mode"] == "sampled"
    want = (data.X[40:42] - bg.mean(0)) * coefs
    assert np.max(np.abs(expl.values - want)) < 1e-8
    again = explain_kernelshap(m, data, data.X[40:42], bg, seed=5, sample_indices=[40, 41])
    assert np.array_equal(expl.values, again.values)


def test_single_feature():
    m = AdditiveModel(1, (Effect.of(Apply("exp", (Leaf(0),))),))
    data = sample_dataset(1, 0)
    expl = explain_kernelshap(m, data, data.X[:4], data.X[:20])
    assert expl.values[:, 0] == pytest.approx(m(data.X[:4]) - m(data.X[:20]).mean())


def test_shap_failures():
    data = sample_dataset(2, 0)
    nan = lambda Z: np.full(len(Z), np.nan)
    with pytest.raises(NonFiniteValueFunction):
        explain_kernelshap(nan, data, data.X[:1], data.X[:5])
    with pytest.raises(TaskTimeout):
        explain_kernelshap(linear_model([1, 1]), data, data.X[:3], data.X[:5], deadline=0.0)


# --- LIME --------------------------------------------------------------------

def test_lime_constant_model():
    data = sample_dataset(3, 1)
    f = lambda Z: np.full(len(Z), 2.5)
    expl = explain_lime(f, data, data.X[:3], num_samples=500)
    assert np.max(np.abs(expl.values)) <= 1e-6
    assert expl.intercept == pytest.approx([2.5] * 3)


@pytest.mark.parametrize("seed", range(3))
def test_lime_linear_recovery(seed):
    rng = np.random.default_rng(seed)
    coefs = rng.uniform(-2, 2, size=5)
    data = sample_dataset(5, seed)
    expl = explain_lime(linear_model(coefs), data, data.X[:4], ridge=1e-6, seed=seed)
    raw = expl.values / expl.sigma
    assert np.max(np.abs(raw - coefs) / np.abs(coefs)) < 1e-3


def test_lime_deterministic_and_instance_row():
    data = sample_dataset(3, 2)
    m = generate_model(GenParams(3, 0, 1.0, seed=4), data=data.X)
    a = explain_lime(m, data, data.X[:2], num_samples=300, seed=9, sample_indices=[0, 1])
    b = explain_lime(m, data, data.X[:2], num_samples=300, seed=9, sample_indices=[0, 1])
    assert np.array_equal(a.values, b.values) and np.array_equal(a.intercept, b.intercept)
    assert a.diagnostics["kernel_width"] == pytest.approx(0.75 * math.sqrt(3))


def test_lime_too_few_valid():
    data = sample_dataset(2, 0)
    with pytest.raises(TooFewValidSamples):
        explain_lime(lambda Z: np.full(len(Z), np.nan), data, data.X[:1], num_samples=100)


# --- PDP ---------------------------------------------------------------------

def test_pdp_identity():
    data = sample_dataset(1, 0)
    m = AdditiveModel(1, (Effect.of(Leaf(0)),))
    expl = explain_pdp(m, data, data.X[:20])
    assert np.allclose(expl.pd_curve[0], expl.pd_grid[0], atol=1e-15)
    assert np.allclose(expl.values[:, 0], data.X[:20, 0], atol=1e-14)


def test_pdp_additive_marginal():
    data = sample_dataset(2, 1)
    m = AdditiveModel(2, (Effect.of(Leaf(0)), Effect.of(Leaf(1))))
    expl = explain_pdp(m, data, data.X[:5])
    assert np.allclose(expl.pd_curve[0], expl.pd_grid[0] + data.X[:, 1].mean(), atol=1e-12)


def test_pdp_product_near_zero():
    data = sample_dataset(2, 2)
    m = AdditiveModel(2, (Effect.of(Apply("mul", (Leaf(0), Leaf(1)))),))
    expl = explain_pdp(m, data, data.X[:5])
    col = data.X[:, 1]
    se = col.std() / math.sqrt(len(col))
    assert np.all(np.abs(expl.pd_curve[0]) <= 3 * se * np.abs(expl.pd_grid[0]) + 1e-15)


def test_pdp_degenerate():
    data = sample_dataset(2, 0)
    with pytest.raises(DegeneratePD):
        explain_pdp(lambda Z: np.full(len(Z), np.nan), data, data.X[:1])


def test_interp_extrap():
    xp, fp = np.array([0.0, 1.0, 2.0]), np.array([0.0, 2.0, 3.0])
    out = interp_extrap([-1.0, 0.5, 1.5, 3.0], xp, fp)
    assert out == pytest.approx([-2.0, 1.0, 2.5, 4.0])


# --- serialization -------------------------------------------------------------

def test_explanation_json_round_trip():
    data = sample_dataset(2, 0)
    for expl in (explain_pdp(linear_model([1, 2]), data, data.X[:3], sample_indices=[0, 1, 2]),
                 explain_lime(linear_model([1, 2]), data, data.X[:3], num_samples=200)):
        back = ExplainerExplanation.from_json(expl.to_json())
        assert back.kind == expl.kind
        assert np.array_equal(back.values, expl.values)
        assert back.to_json() == expl.to_json()
