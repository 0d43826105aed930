import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from xfid.errors import ConfigInvalid
from xfid.expr import (BINARY_LINEAR, BINARY_NONLINEAR, OPERATORS, UNARY_NONLINEAR,
                       AdditiveModel, Apply, Const, Effect, Leaf, eval_effects, eval_expr,
                       eval_model, linear_model, model_from_json, model_to_json,
                       sum_effects, validate_domain)

from oracles import four_effect_model


def test_leaf_const_and_division_guard():
    assert eval_expr(Leaf(0), [0.5, 0.1]) == 0.5
    assert eval_expr(Apply("log", (Const(1.0),)), [0.0]) == 0.0
    x = np.array([0.0, 0.2, 0.3, 0.7])
    assert not math.isfinite(eval_expr(Apply("div", (Leaf(3), Leaf(0))), x))


def test_four_effect_model_values():
    m = four_effect_model()
    assert eval_model(m, [1, 0.3, -0.2, 1]) == pytest.approx(2 + math.e, abs=1e-12)
    assert not math.isfinite(eval_model(m, [1, 0.3, -0.2, 0]))
    one = AdditiveModel(1, (Effect.of(Leaf(0)),))
    assert eval_model(one, [0.3]) == 0.3


def test_operator_table():
    assert len(UNARY_NONLINEAR) == 19
    assert {op.name for op in BINARY_LINEAR} == {"add", "mul", "div"}
    assert {op.name for op in BINARY_NONLINEAR} == {"min", "max"}
    assert OPERATORS["mul"].weight == 0.8 and OPERATORS["div"].weight == 0.2
    assert OPERATORS["add"].weight == 0
    light = [op for op in UNARY_NONLINEAR if op.weight == 0.015]
    heavy = [op for op in UNARY_NONLINEAR if op.weight == 0.133]
    assert len(light) == 13 and len(heavy) == 6


def test_special_points():
    z = np.zeros((1, 1))
    assert eval_expr(Apply("sinc", (Leaf(0),)), z)[0] == 1.0
    for pole in ("cot", "acot", "csc"):
        assert not np.isfinite(eval_expr(Apply(pole, (Leaf(0),)), z)[0])
    assert eval_expr(Apply("sech", (Leaf(0),)), z)[0] == 1.0


@settings(max_examples=200, deadline=None)
@given(st.sampled_from(sorted(OPERATORS)),
       st.floats(-1e6, 1e6, allow_nan=False), st.floats(-1e6, 1e6, allow_nan=False))
def test_operator_closure(name, a, b):
    op = OPERATORS[name]
    kids = (Const(a),) if op.arity == 1 else (Const(a), Const(b))
    val = eval_expr(Apply(name, kids), [0.0])
    assert isinstance(val, float)


def test_validate_domain():
    sq = AdditiveModel(1, (Effect.of(Apply("square", (Leaf(0),))),))
    assert validate_domain(sq, np.linspace(-1, 1, 50)[:, None])
    lg = AdditiveModel(1, (Effect.of(Apply("log", (Leaf(0),))),))
    assert not validate_domain(lg, np.array([[0.5], [-0.1]]))

    ratio = AdditiveModel(2, (Effect.of(Apply("div", (Leaf(1), Leaf(0)))),))
    rng = np.random.default_rng(3)
    X = rng.uniform(-1, 1, size=(1000, 2))
    assert validate_domain(ratio, X) == (not np.any(X[:, 0] == 0))
    X[17, 0] = 0.0
    assert not validate_domain(ratio, X)


def test_additivity_exact():
    m = four_effect_model()
    X = np.random.default_rng(0).uniform(0.1, 1, size=(200, 4))
    assert np.array_equal(sum_effects(eval_effects(m, X)), eval_model(m, X))
    assert np.array_equal(eval_model(m, X), eval_model(m, X.copy()))


def test_effect_features_must_match_leaves():
    with pytest.raises(ValueError):
        Effect((0, 1), Leaf(0))
    with pytest.raises(ValueError):
        Apply("exp", (Leaf(0), Leaf(1)))
    with pytest.raises(ValueError):
        AdditiveModel(2, (Effect.of(Leaf(0)),), dummy_features=())


def test_dummy_features_computed():
    m = linear_model([1.0, 0.0, 2.0])
    assert m.dummy_features == (1,)
    assert m.m == 2


def test_json_round_trip_byte_stable():
    m = four_effect_model()
    text = model_to_json(m)
    assert model_from_json(text) == m
    assert model_to_json(model_from_json(text)) == text
    assert '"expr":["log",["mul",["leaf",0],["leaf",3]]]' in text


@pytest.mark.parametrize("bad, field", [
    ('{"d": 2, "effects": [{"features": [0], "expr": ["nope", ["leaf", 0]]}]}', "effects[0].expr"),
    ('{"d": 2, "effects": [{"features": [0], "expr": ["exp"]}]}', "effects[0].expr"),
    ('{"effects": []}', "d"),
    ('{"d": 2', "JSON"),
])
def test_json_errors_name_the_field(bad, field):
    with pytest.raises(ConfigInvalid) as err:
        model_from_json(bad)
    assert field in str(err.value)
