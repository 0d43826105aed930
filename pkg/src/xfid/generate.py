"""Random generation of additive white-box models.

Generation runs in four phases, in this order: nonlinear main effects, linear
main effects, nonlinear interaction effects, linear interaction effects. Every
phase draws from its own child stream of a ``numpy.random.SeedSequence`` so
the output is a pure function of the parameters.

Each operator application is checked on a validation sample (a Latin
hypercube probe over [-1, 1]^d, plus any data passed in). Operators that make
the partial expression non-finite are discarded and redrawn from the remaining
candidates of the same class; if a class runs dry the whole model is drawn
again from ``seed + round``.
"""
from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, replace

import numpy as np

from .errors import GenerationFailed
from .expr import (BINARY_LINEAR, BINARY_NONLINEAR, UNARY_NONLINEAR,
                   AdditiveModel, Apply, Effect, Leaf, Operator,
                   validate_domain)

__all__ = ["GenParams", "generate_model", "parameter_grid", "probe_points",
           "bin_counts", "GRID"]

# model generation grid; n_dummy entries are fractions of d, rounded down
GRID = {
    "d": (2, 4, 7, 16, 32, 64, 127, 256, 512, 1024),
    "n_dummy": (0.0, 0.2375, 0.475, 0.7125, 0.95),
    "pct_nonlinear": (0.0, 0.375, 0.75, 1.125, 1.5),
    "pct_interact": (0.0, 0.167, 0.333, 0.5),
    "order_interact": (1, 2, 3),
}

# child stream indices; append new phases at the end
_FEATURES, _NL_MAIN, _LIN_MAIN, _INTERACT, _NL_INTER, _LIN_INTER, _PROBE = range(7)
_N_STREAMS = 7


@dataclass(frozen=True)
class GenParams:
    d: int
    n_dummy: int = 0
    pct_nonlinear: float = 0.0
    pct_interact: float = 0.0
    order_interact: int = 1
    seed: int = 0

    def __post_init__(self):
        if self.d < 1:
            raise ValueError("d must be >= 1")
        if not 0 <= self.n_dummy < self.d:
            raise ValueError("need 0 <= n_dummy < d")
        if self.pct_nonlinear < 0:
            raise ValueError("pct_nonlinear must be nonnegative")
        if not 0 <= self.pct_interact <= 0.5:
            raise ValueError("pct_interact must lie in [0, 0.5]")
        if self.order_interact < 1:
            raise ValueError("order_interact must be >= 1")

    @property
    def n_used(self) -> int:
        return self.d - self.n_dummy

    @property
    def effective_pct_interact(self) -> float:
        return 0.0 if self.order_interact == 1 else self.pct_interact

    @property
    def n_interactions(self) -> int:
        if self.order_interact < 2:
            return 0
        want = _round_half_up(self.pct_interact * self.n_used)
        return min(want, math.comb(self.n_used, self.order_interact))


def _round_half_up(x: float) -> int:
    return int(math.floor(x + 0.5))


def bin_counts(n_items: int, n_bins: int) -> list[int]:
    """Spread items over bins as evenly as possible, extras to the lowest bins."""
    if n_bins == 0:
        return []
    base, extra = divmod(n_items, n_bins)
    return [base + (i < extra) for i in range(n_bins)]


def probe_points(d: int, rng: np.random.Generator, per_dim: int = 10) -> np.ndarray:
    """Latin hypercube of ``per_dim * d`` points in [-1, 1]^d."""
    n = per_dim * d
    strata = np.argsort(rng.random((n, d)), axis=0)
    u = rng.random((n, d))
    return -1.0 + 2.0 * (strata + u) / n


class _Reject(Exception):
    pass


def _draw(rng, ops: tuple[Operator, ...], ok) -> Operator:
    """Weighted draw among ``ops``, redrawing until ``ok(op)`` holds."""
    cands = list(ops)
    while cands:
        w = np.array([op.weight for op in cands])
        i = int(rng.choice(len(cands), p=w / w.sum()))
        if ok(cands[i]):
            return cands[i]
        del cands[i]
    raise _Reject


class _Builder:
    """Grows expression trees while tracking their values on a probe set."""

    def __init__(self, V: np.ndarray):
        self.V = V

    def leaf(self, i):
        return Leaf(int(i)), self.V[:, i]

    def unary(self, rng, term):
        node, vals = term
        out = {}

        def ok(op):
            with np.errstate(all="ignore"):
                v = op.fn(vals)
            out[op.name] = v
            return bool(np.isfinite(v).all())

        op = _draw(rng, UNARY_NONLINEAR, ok)
        return Apply(op.name, (node,)), out[op.name]

    def binary(self, rng, ops, left, right):
        out = {}

        def ok(op):
            with np.errstate(all="ignore"):
                v = op.fn(left[1], right[1])
            out[op.name] = v
            return bool(np.isfinite(v).all())

        op = _draw(rng, ops, ok)
        return Apply(op.name, (left[0], right[0])), out[op.name]


def _interaction_sets(rng, used, order, count):
    total = math.comb(len(used), order)
    if count == 0:
        return []
    if total <= 20000:
        combos = list(itertools.combinations(used, order))
        pick = rng.choice(len(combos), size=count, replace=False)
        return [combos[i] for i in pick]
    seen, out = set(), []
    while len(out) < count:
        c = tuple(sorted(int(i) for i in rng.choice(used, size=order, replace=False)))
        if c not in seen:
            seen.add(c)
            out.append(c)
    return out


def _nonlinear_interaction(rng, b: _Builder, feats, n_ops):
    order = len(feats)
    feats = [int(f) for f in rng.permutation(feats)]
    n_unary_w = sum(op.weight for op in UNARY_NONLINEAR)
    n_binary_w = sum(op.weight for op in BINARY_NONLINEAR)
    p_binary = n_binary_w / (n_unary_w + n_binary_w)
    n_bin_nl = 0
    n_unary = 0
    for _ in range(n_ops):
        # binary operators only serve as bridges, so at most order - 1 of them
        if n_bin_nl < order - 1 and rng.random() < p_binary:
            n_bin_nl += 1
        else:
            n_unary += 1
    bridge_nl = [True] * n_bin_nl + [False] * (order - 1 - n_bin_nl)
    bridge_nl = [bridge_nl[i] for i in rng.permutation(order - 1)]
    # slots 0..order-1 wrap a leaf; slot order+k wraps the k-th bridge result
    slots = rng.integers(0, 2 * order - 1, size=n_unary)

    def wrap(term, slot):
        for _ in range(int(np.sum(slots == slot))):
            term = b.unary(rng, term)
        return term

    expr = wrap(b.leaf(feats[0]), 0)
    for k in range(order - 1):
        right = wrap(b.leaf(feats[k + 1]), k + 1)
        ops = BINARY_NONLINEAR if bridge_nl[k] else _LINEAR_BRIDGES
        expr = wrap(b.binary(rng, ops, expr, right), order + k)
    return expr[0]


_LINEAR_BRIDGES = tuple(op for op in BINARY_LINEAR if op.weight > 0)


def _linear_interaction(rng, b: _Builder, feats):
    feats = [int(f) for f in rng.permutation(feats)]
    expr = b.leaf(feats[0])
    for f in feats[1:]:
        expr = b.binary(rng, _LINEAR_BRIDGES, expr, b.leaf(f))
    return expr[0]


def _generate_once(p: GenParams, seed: int, data) -> AdditiveModel:
    streams = [np.random.default_rng(s)
               for s in np.random.SeedSequence(seed).spawn(_N_STREAMS)]
    V = probe_points(p.d, streams[_PROBE])
    if data is not None:
        V = np.vstack([np.asarray(data, dtype=float), V])
    b = _Builder(V)
    effects = []

    rng = streams[_FEATURES]
    used = np.sort(rng.permutation(p.d)[:p.n_used])

    # phase 1: nonlinear main effects
    rng = streams[_NL_MAIN]
    n_ops = _round_half_up(p.pct_nonlinear * p.n_used)
    n_nl = min(n_ops, p.n_used)
    nl_feats = rng.permutation(used)[:n_nl]
    for feat, count in zip(nl_feats, bin_counts(n_ops, n_nl)):
        term = b.leaf(feat)
        for _ in range(count):
            term = b.unary(rng, term)
        effects.append(Effect.of(term[0]))

    # phase 2: linear main effects for every remaining used feature
    nl_set = set(int(f) for f in nl_feats)
    for feat in used:
        if int(feat) not in nl_set:
            effects.append(Effect.of(Leaf(int(feat))))

    # interactions are picked once, then split into nonlinear and linear
    combos = _interaction_sets(streams[_INTERACT], [int(u) for u in used],
                               p.order_interact, p.n_interactions)

    # phase 3: nonlinear interaction effects
    rng = streams[_NL_INTER]
    n_ops_i = _round_half_up(p.pct_nonlinear * len(combos))
    n_nl_i = min(n_ops_i, len(combos))
    for feats, count in zip(combos[:n_nl_i], bin_counts(n_ops_i, n_nl_i)):
        effects.append(Effect.of(_nonlinear_interaction(rng, b, feats, count)))

    # phase 4: linear interaction effects
    rng = streams[_LIN_INTER]
    for feats in combos[n_nl_i:]:
        effects.append(Effect.of(_linear_interaction(rng, b, feats)))

    model = AdditiveModel(p.d, tuple(effects))
    if not validate_domain(model, V):
        raise _Reject
    return model


def generate_model(params: GenParams, data=None, max_rounds: int = 50) -> AdditiveModel:
    """Generate a model whose effects are finite on the probe set and ``data``.

    Round ``r`` (0-based) draws from seed ``params.seed + r``.
    """
    for r in range(max_rounds):
        try:
            return _generate_once(params, (params.seed + r) % 2**64, data)
        except _Reject:
            continue
    raise GenerationFailed(f"no valid model for {params} after {max_rounds} rounds")


def parameter_grid(d=None, n_dummy=None, pct_nonlinear=None, pct_interact=None,
                   order_interact=None, seed: int = 0) -> list[GenParams]:
    """Cross product of the generation grid, optionally restricted.

    Each keyword restricts one axis to the given values (``n_dummy`` as
    fractions of ``d``). Order 1 is paired only with ``pct_interact = 0`` and
    orders 2 and 3 only with nonzero values.
    """
    def axis(name, sel):
        return GRID[name] if sel is None else tuple(sel)

    rows = []
    inter = [(1, 0.0)] + [(o, pi) for o in (2, 3) for pi in GRID["pct_interact"] if pi > 0]
    inter = [(o, pi) for o, pi in inter
             if (order_interact is None or o in order_interact)
             and (pct_interact is None or pi in pct_interact)]
    for dd in axis("d", d):
        for frac in axis("n_dummy", n_dummy):
            for nl in axis("pct_nonlinear", pct_nonlinear):
                for order, pi in inter:
                    rows.append(GenParams(int(dd), int(math.floor(frac * dd)),
                                          float(nl), float(pi), int(order), seed))
    return rows


def with_seed(params: GenParams, seed: int) -> GenParams:
    return replace(params, seed=int(seed))
