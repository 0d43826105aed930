"""Expression trees, the operator vocabulary and additive white-box models.

Every model is a sum of effects. Each effect owns an expression tree over a
subset of the input features, so the contribution of each effect to the model
output is known exactly.

Evaluation is vectorized over rows: a tree evaluated on an ``(n, d)`` matrix
returns ``n`` values. Domain violations (``log(-1)``, ``1/0``, overflow) never
raise; they surface as NaN or infinity in the output.
"""
from __future__ import annotations

import json
from dataclasses import dataclass, field
from typing import Callable, Iterator, Sequence, Union

import numpy as np

from .errors import ConfigInvalid

__all__ = [
    "Operator", "OPERATORS", "UNARY_NONLINEAR", "BINARY_LINEAR",
    "BINARY_NONLINEAR", "Leaf", "Const", "Apply", "ExprNode", "Effect",
    "AdditiveModel", "eval_expr", "eval_model", "eval_effects",
    "validate_domain", "leaf_features", "format_expr", "model_to_json",
    "model_from_json", "model_to_dict", "model_from_dict",
]


@dataclass(frozen=True)
class Operator:
    name: str
    arity: int
    nonlinear: bool
    weight: float
    fn: Callable[..., np.ndarray] = field(repr=False, compare=False)
    symbol: str = ""


def _sinc(x):
    out = np.ones_like(x)
    nz = x != 0
    out[nz] = np.sin(x[nz]) / x[nz]
    return out


def _cot(x):
    return np.cos(x) / np.sin(x)


def _acot(x):
    # arctan(1/x); x = 0 is treated as a pole like cot and csc
    return np.where(x == 0, np.nan, np.arctan(1.0 / x))


def _csc(x):
    return 1.0 / np.sin(x)


def _sech(x):
    return 1.0 / np.cosh(x)


def _u(name, weight, fn):
    return Operator(name, 1, True, weight, fn)


# Weights of the generator's sampling classes. Each class is normalized
# separately when drawn from.
_OPS = [
    _u("cos", 0.015, np.cos),
    _u("cosh", 0.015, np.cosh),
    _u("sin", 0.015, np.sin),
    _u("sinh", 0.015, np.sinh),
    _u("asinh", 0.015, np.arcsinh),
    _u("tan", 0.015, np.tan),
    _u("tanh", 0.015, np.tanh),
    _u("atan", 0.015, np.arctan),
    _u("cot", 0.015, _cot),
    _u("acot", 0.015, _acot),
    _u("csc", 0.015, _csc),
    _u("sech", 0.015, _sech),
    _u("sinc", 0.015, _sinc),
    _u("abs", 0.133, np.abs),
    _u("sqrt", 0.133, np.sqrt),
    _u("square", 0.133, np.square),
    _u("cube", 0.133, lambda x: x * x * x),
    _u("exp", 0.133, np.exp),
    _u("log", 0.133, np.log),
    Operator("mul", 2, False, 0.8, np.multiply, "*"),
    Operator("div", 2, False, 0.2, np.divide, "/"),
    # never drawn by the generator: a bare sum would split the effect apart
    Operator("add", 2, False, 0.0, np.add, "+"),
    Operator("min", 2, True, 0.5, np.minimum),
    Operator("max", 2, True, 0.5, np.maximum),
]

OPERATORS: dict[str, Operator] = {op.name: op for op in _OPS}
UNARY_NONLINEAR = tuple(op for op in _OPS if op.arity == 1)
BINARY_LINEAR = tuple(op for op in _OPS if op.arity == 2 and not op.nonlinear)
BINARY_NONLINEAR = tuple(op for op in _OPS if op.arity == 2 and op.nonlinear)


@dataclass(frozen=True)
class Leaf:
    feature: int


@dataclass(frozen=True)
class Const:
    value: float


@dataclass(frozen=True)
class Apply:
    op: str
    children: tuple

    def __post_init__(self):
        if self.op not in OPERATORS:
            raise ValueError(f"unknown operator {self.op!r}")
        object.__setattr__(self, "children", tuple(self.children))
        arity = OPERATORS[self.op].arity
        if len(self.children) != arity:
            raise ValueError(
                f"operator {self.op!r} takes {arity} children, "
                f"got {len(self.children)}")


ExprNode = Union[Leaf, Const, Apply]


def iter_nodes(node: ExprNode) -> Iterator[ExprNode]:
    stack = [node]
    while stack:
        cur = stack.pop()
        yield cur
        if isinstance(cur, Apply):
            stack.extend(reversed(cur.children))


def leaf_features(node: ExprNode) -> tuple[int, ...]:
    """Sorted distinct feature indices referenced by the tree."""
    return tuple(sorted({n.feature for n in iter_nodes(node)
                         if isinstance(n, Leaf)}))


@dataclass(frozen=True)
class Effect:
    features: tuple[int, ...]
    expr: ExprNode

    def __post_init__(self):
        feats = tuple(sorted(set(int(i) for i in self.features)))
        object.__setattr__(self, "features", feats)
        if not feats:
            raise ValueError("an effect must use at least one feature")
        if feats != leaf_features(self.expr):
            raise ValueError(
                f"effect features {feats} do not match the leaves "
                f"{leaf_features(self.expr)} of its expression")

    @classmethod
    def of(cls, expr: ExprNode) -> "Effect":
        return cls(leaf_features(expr), expr)


@dataclass(frozen=True)
class AdditiveModel:
    """A white box ``F(x) = sum_j f_j(x[D_j])`` with explicit effects."""

    d: int
    effects: tuple[Effect, ...]
    dummy_features: tuple[int, ...] = None

    def __post_init__(self):
        object.__setattr__(self, "effects", tuple(self.effects))
        if self.d < 1:
            raise ValueError("d must be positive")
        if not self.effects:
            raise ValueError("a model needs at least one effect")
        used = set()
        for eff in self.effects:
            used.update(eff.features)
        if max(used) >= self.d or min(used) < 0:
            raise ValueError(f"effect feature index out of range for d={self.d}")
        unused = tuple(i for i in range(self.d) if i not in used)
        if self.dummy_features is None:
            object.__setattr__(self, "dummy_features", unused)
        else:
            given = tuple(sorted(int(i) for i in self.dummy_features))
            if given != unused:
                raise ValueError(
                    f"dummy_features {given} must be exactly the unused "
                    f"features {unused}")
            object.__setattr__(self, "dummy_features", given)

    @property
    def m(self) -> int:
        return len(self.effects)

    @property
    def effect_features(self) -> list[tuple[int, ...]]:
        return [e.features for e in self.effects]

    def __call__(self, X) -> np.ndarray:
        return eval_model(self, X)

    def __str__(self):
        return " + ".join(format_expr(e.expr) for e in self.effects)


# --------------------------------------------------------------------------
# evaluation

def _eval(node: ExprNode, X: np.ndarray) -> np.ndarray:
    if isinstance(node, Leaf):
        return X[:, node.feature]
    if isinstance(node, Const):
        return np.full(X.shape[0], float(node.value))
    args = [_eval(c, X) for c in node.children]
    return OPERATORS[node.op].fn(*args)


def _as_rows(x) -> tuple[np.ndarray, bool]:
    X = np.asarray(x, dtype=float)
    if X.ndim == 1:
        return X[None, :], True
    if X.ndim != 2:
        raise ValueError("expected a d-vector or an (n, d) matrix")
    return X, False


def eval_expr(node: ExprNode, x):
    """Evaluate a tree at one point (returns a float) or at every row."""
    X, single = _as_rows(x)
    with np.errstate(all="ignore"):
        out = np.asarray(_eval(node, X), dtype=float)
    if out.shape != (X.shape[0],):
        out = np.broadcast_to(out, (X.shape[0],)).copy()
    return float(out[0]) if single else out


def eval_effects(model: AdditiveModel, x) -> np.ndarray:
    """Per-effect values, shape ``(m, n)`` (or ``(m,)`` for a single point)."""
    X, single = _as_rows(x)
    out = np.empty((model.m, X.shape[0]))
    for j, eff in enumerate(model.effects):
        out[j] = eval_expr(eff.expr, X)
    return out[:, 0] if single else out


def sum_effects(contributions: np.ndarray) -> np.ndarray:
    """Sum effect rows in ascending effect order.

    Both the model output and the ground-truth reconstruction go through this
    function so that the two agree bit for bit.
    """
    total = np.zeros(contributions.shape[1:])
    for row in contributions:
        total = total + row
    return total


def eval_model(model: AdditiveModel, x):
    X, single = _as_rows(x)
    if X.shape[1] != model.d:
        raise ValueError(f"expected {model.d} features, got {X.shape[1]}")
    with np.errstate(all="ignore"):
        out = sum_effects(eval_effects(model, X))
    return float(out[0]) if single else out


def validate_domain(model: AdditiveModel, samples) -> bool:
    """True iff every effect and the model are finite at every sample row."""
    X, _ = _as_rows(samples)
    contrib = eval_effects(model, X)
    if not np.isfinite(contrib).all():
        return False
    with np.errstate(all="ignore"):
        return bool(np.isfinite(sum_effects(contrib)).all())


# --------------------------------------------------------------------------
# display and serialization

def format_expr(node: ExprNode) -> str:
    if isinstance(node, Leaf):
        return f"x{node.feature}"
    if isinstance(node, Const):
        return repr(float(node.value))
    op = OPERATORS[node.op]
    args = [format_expr(c) for c in node.children]
    if op.symbol:
        return f"({args[0]} {op.symbol} {args[1]})"
    if node.op == "square":
        return f"({args[0]})**2"
    if node.op == "cube":
        return f"({args[0]})**3"
    return f"{node.op}({', '.join(args)})"


def expr_to_list(node: ExprNode) -> list:
    if isinstance(node, Leaf):
        return ["leaf", node.feature]
    if isinstance(node, Const):
        return ["const", float(node.value)]
    return [node.op, *(expr_to_list(c) for c in node.children)]


def expr_from_list(obj, path: str = "expr") -> ExprNode:
    if not isinstance(obj, list) or not obj or not isinstance(obj[0], str):
        raise ConfigInvalid(f"{path}: expected a prefix array like ['op', ...]")
    head, rest = obj[0], obj[1:]
    if head == "leaf":
        if len(rest) != 1 or not isinstance(rest[0], int) or isinstance(rest[0], bool):
            raise ConfigInvalid(f"{path}: leaf needs one integer feature index")
        return Leaf(rest[0])
    if head == "const":
        if len(rest) != 1 or not isinstance(rest[0], (int, float)):
            raise ConfigInvalid(f"{path}: const needs one number")
        return Const(float(rest[0]))
    if head not in OPERATORS:
        raise ConfigInvalid(f"{path}: unknown operator {head!r}")
    if len(rest) != OPERATORS[head].arity:
        raise ConfigInvalid(
            f"{path}: operator {head!r} takes {OPERATORS[head].arity} arguments")
    return Apply(head, tuple(expr_from_list(c, f"{path}[{i + 1}]")
                             for i, c in enumerate(rest)))


def model_to_dict(model: AdditiveModel) -> dict:
    return {
        "d": model.d,
        "dummy_features": list(model.dummy_features),
        "effects": [{"features": list(e.features), "expr": expr_to_list(e.expr)}
                    for e in model.effects],
    }


def model_from_dict(obj) -> AdditiveModel:
    if not isinstance(obj, dict):
        raise ConfigInvalid("model: expected a JSON object")
    for key in ("d", "effects"):
        if key not in obj:
            raise ConfigInvalid(f"model: missing field {key!r}")
    d = obj["d"]
    if not isinstance(d, int) or isinstance(d, bool) or d < 1:
        raise ConfigInvalid("d: expected a positive integer")
    if not isinstance(obj["effects"], list) or not obj["effects"]:
        raise ConfigInvalid("effects: expected a non-empty list")
    effects = []
    for j, e in enumerate(obj["effects"]):
        path = f"effects[{j}]"
        if not isinstance(e, dict) or "expr" not in e or "features" not in e:
            raise ConfigInvalid(f"{path}: expected {{'features': [...], 'expr': [...]}}")
        expr = expr_from_list(e["expr"], f"{path}.expr")
        try:
            effects.append(Effect(tuple(e["features"]), expr))
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid(f"{path}.features: {exc}") from None
    try:
        return AdditiveModel(d, tuple(effects), obj.get("dummy_features"))
    except (TypeError, ValueError) as exc:
        raise ConfigInvalid(f"dummy_features: {exc}") from None


def model_to_json(model: AdditiveModel) -> str:
    """Canonical JSON: sorted keys, compact separators."""
    return json.dumps(model_to_dict(model), sort_keys=True, separators=(",", ":"))


def model_from_json(text: str) -> AdditiveModel:
    try:
        obj = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ConfigInvalid(f"model: invalid JSON ({exc})") from None
    return model_from_dict(obj)


def linear_model(coefs: Sequence[float], d: int | None = None) -> AdditiveModel:
    """``sum_i coefs[i] * x_i`` with one main effect per nonzero coefficient."""
    d = len(coefs) if d is None else d
    effects = [Effect.of(Apply("mul", (Const(float(a)), Leaf(i))))
               for i, a in enumerate(coefs) if a != 0]
    return AdditiveModel(d, tuple(effects))
