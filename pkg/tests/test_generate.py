import math

import numpy as np
import pytest

from xfid.dataset import sample_dataset
from xfid.errors import GenerationFailed
from xfid.expr import (OPERATORS, Apply, Leaf, eval_effects, eval_model, iter_nodes,
                       model_to_json, validate_domain)
from xfid.generate import GRID, GenParams, bin_counts, generate_model, parameter_grid


def unary_depth(node):
    depth = 0
    while isinstance(node, Apply):
        assert OPERATORS[node.op].arity == 1
        depth += 1
        node = node.children[0]
    assert isinstance(node, Leaf)
    return depth


@pytest.mark.parametrize("seed", range(5))
def test_all_linear_with_dummies(seed):
    m = generate_model(GenParams(d=4, n_dummy=2, seed=seed))
    assert m.m == 2
    assert all(isinstance(e.expr, Leaf) for e in m.effects)
    assert len(m.dummy_features) == 2


@pytest.mark.parametrize("seed", range(5))
def test_nonlinear_binning(seed):
    m = generate_model(GenParams(d=2, pct_nonlinear=2.0, seed=seed))
    assert m.m == 2
    assert sorted(e.features for e in m.effects) == [(0,), (1,)]
    assert [unary_depth(e.expr) for e in m.effects] == [2, 2]


@pytest.mark.parametrize("seed", range(5))
def test_linear_pairwise_interaction(seed):
    m = generate_model(GenParams(d=4, pct_interact=0.5, order_interact=2, seed=seed))
    pairs = [e for e in m.effects if len(e.features) == 2]
    assert len(pairs) == 2  # round(0.5 * 4)
    for e in pairs:
        ops = {n.op for n in iter_nodes(e.expr) if isinstance(n, Apply)}
        assert ops and ops <= {"mul", "div"}


def test_bin_counts():
    assert bin_counts(4, 2) == [2, 2]
    assert bin_counts(5, 3) == [2, 2, 1]
    assert bin_counts(0, 3) == [0, 0, 0]
    assert sum(bin_counts(17, 5)) == 17


def test_interaction_order_and_count():
    p = GenParams(d=16, pct_nonlinear=0.75, pct_interact=0.333, order_interact=3, seed=9)
    m = generate_model(p)
    inter = [e for e in m.effects if len(e.features) > 1]
    assert len(inter) == p.n_interactions == round(0.333 * 16)
    assert all(len(e.features) == 3 for e in inter)
    assert len({e.features for e in inter}) == len(inter)
    assert GenParams(d=3, pct_interact=0.5, order_interact=3).n_interactions == 1


def test_same_seed_same_model_and_valid_on_data():
    p = GenParams(d=7, n_dummy=1, pct_nonlinear=1.5, pct_interact=0.5, order_interact=2, seed=42)
    data = sample_dataset(7, 1)
    a = generate_model(p, data=data.X)
    b = generate_model(p, data=data.X)
    assert model_to_json(a) == model_to_json(b)
    assert validate_domain(a, data.X)
    assert np.isfinite(eval_model(a, data.X)).all()
    assert np.isfinite(eval_effects(a, data.X)).all()


def test_generation_failed_after_budget():
    # no model can be finite on NaN data
    p = GenParams(d=1, pct_nonlinear=1.0, seed=0)
    bad = np.full((5, 1), np.nan)
    with pytest.raises(GenerationFailed):
        generate_model(p, data=bad, max_rounds=3)


def test_full_grid_count_and_coupling():
    rows = parameter_grid()
    assert len(rows) == 10 * 5 * 5 * (1 + 3 * 2)
    assert all(r.pct_interact == 0 for r in rows if r.order_interact == 1)
    assert all(r.pct_interact > 0 for r in rows if r.order_interact > 1)
    small = parameter_grid(d=[2], n_dummy=[0.95], pct_nonlinear=[0.0], order_interact=[1])
    assert [r.n_dummy for r in small] == [math.floor(1.9)] == [1]


def test_grid_values():
    assert GRID["d"][0] == 2 and GRID["d"][-1] == 1024
    assert GRID["order_interact"] == (1, 2, 3)


@pytest.mark.parametrize("kw", [dict(d=0), dict(d=2, n_dummy=2), dict(d=2, pct_interact=0.7),
                                dict(d=2, pct_nonlinear=-1)])
def test_bad_params(kw):
    with pytest.raises(ValueError):
        GenParams(**kw)
