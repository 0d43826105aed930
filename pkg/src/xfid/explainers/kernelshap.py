"""Kernel SHAP with a marginal (feature-independent) value function."""
from __future__ import annotations

import math

import numpy as np

from ..dataset import Dataset
from ..errors import NonFiniteValueFunction
from .base import (SHAPLEY, BlackBox, ExplainerExplanation, as_points,
                   check_deadline, sample_rng, singleton_effects)
from .solvers import weighted_least_squares

EXACT_MAX_D = 12
_CHUNK = 4_000_000


def default_budget(d: int) -> int:
    return 2048 + 2 * d


def shapley_kernel(d: int, sizes) -> np.ndarray:
    sizes = np.asarray(sizes)
    comb = np.array([math.comb(d, int(s)) for s in sizes], dtype=float)
    return (d - 1) / (comb * sizes * (d - sizes))


def all_coalitions(d: int) -> np.ndarray:
    """Every proper, non-empty coalition as a boolean ``(2^d - 2, d)`` mask."""
    codes = np.arange(1, 2 ** d - 1)
    return ((codes[:, None] >> np.arange(d)) & 1).astype(bool)


def sample_coalitions(d: int, budget: int, rng: np.random.Generator) -> np.ndarray:
    """Paired draws: sizes follow the Shapley kernel, members are uniform.

    Each coalition is followed by its complement, so every sampled row carries
    the same regression weight.
    """
    sizes = np.arange(1, d)
    p = (d - 1) / (sizes * (d - sizes))
    p = p / p.sum()
    half = max(1, budget // 2)
    drawn = rng.choice(sizes, size=half, p=p)
    masks = np.zeros((2 * half, d), dtype=bool)
    for r, s in enumerate(drawn):
        members = rng.choice(d, size=int(s), replace=False)
        masks[2 * r, members] = True
        masks[2 * r + 1] = ~masks[2 * r]
    return masks


def coalition_values(f: BlackBox, point, masks, background, weights):
    """``v(S)``: weighted background mean of ``f`` with features outside S replaced.

    Returns ``(values, dropped)``; non-finite outputs are skipped in each mean.
    """
    k, d = background.shape
    values = np.empty(len(masks))
    dropped = 0
    per_call = max(1, _CHUNK // max(1, k * d))
    for start in range(0, len(masks), per_call):
        chunk = masks[start:start + per_call]
        Z = np.where(chunk[:, None, :], point[None, None, :], background[None, :, :])
        with np.errstate(all="ignore"):
            y = np.asarray(f(Z.reshape(-1, d)), dtype=float).reshape(len(chunk), k)
        ok = np.isfinite(y)
        wsum = ok @ weights
        dropped += int((~ok).sum())
        if np.any(wsum <= 0):
            raise NonFiniteValueFunction("a coalition value has no finite evaluations")
        values[start:start + len(chunk)] = np.where(ok, y, 0.0) @ weights / wsum
    return values, dropped


def shapley_from_values(d, masks, values, v_empty, v_full, weights=None):
    """Kernel-weighted least squares with the efficiency constraint eliminated."""
    delta = v_full - v_empty
    if d == 1:
        return np.array([delta])
    if weights is None:
        weights = shapley_kernel(d, masks.sum(axis=1))
    Zf = masks.astype(float)
    y = values - v_empty - Zf[:, -1] * delta
    A = Zf[:, :-1] - Zf[:, -1:]
    rest = weighted_least_squares(A, y, weights)
    return np.append(rest, delta - rest.sum())


def explain_kernelshap(f: BlackBox, data: Dataset, x, background, mode: str = "auto",
                       nsamples: int | None = None, seed: int = 0,
                       background_weights=None, sample_indices=None,
                       exact_max_d: int = EXACT_MAX_D, deadline=None) -> ExplainerExplanation:
    """Shapley attributions of ``v(S) = E_b[f(x_S, b_rest)]``.

    ``mode`` is ``"exact"`` (all ``2^d - 2`` proper coalitions), ``"sampled"``
    (``nsamples`` paired draws, default ``2048 + 2d``) or ``"auto"`` (exact for
    ``d <= exact_max_d``). ``background_weights`` are per-row weights, e.g. the
    k-means cluster sizes.
    """
    points = as_points(x)
    background = np.asarray(background, dtype=float)
    if background.ndim != 2 or len(background) == 0:
        raise ValueError("background must be a non-empty (k, d) matrix")
    d = background.shape[1]
    wts = (np.ones(len(background)) if background_weights is None
           else np.asarray(background_weights, dtype=float))
    wts = wts / wts.sum()
    if mode == "auto":
        mode = "exact" if d <= exact_max_d else "sampled"
    if mode not in ("exact", "sampled"):
        raise ValueError(f"unknown mode {mode!r}")
    budget = default_budget(d) if nsamples is None else int(nsamples)
    if mode == "sampled" and budget >= 2 ** d - 2:
        mode = "exact"
    idx = np.arange(len(points)) if sample_indices is None else np.asarray(sample_indices)

    with np.errstate(all="ignore"):
        y_bg = np.asarray(f(background), dtype=float)
    ok = np.isfinite(y_bg)
    if not ok.any():
        raise NonFiniteValueFunction("the model is non-finite on every background row")
    v_empty = float(y_bg[ok] @ wts[ok] / wts[ok].sum())
    dropped = int((~ok).sum())

    exact_masks = all_coalitions(d) if (mode == "exact" and d > 1) else None
    exact_kernel = (shapley_kernel(d, exact_masks.sum(axis=1))
                    if exact_masks is not None else None)
    phi = np.empty((len(points), d))
    n_coal = 0
    for s, point in enumerate(points):
        check_deadline(deadline)
        with np.errstate(all="ignore"):
            v_full = float(np.asarray(f(point[None, :]), dtype=float)[0])
        if not np.isfinite(v_full):
            raise NonFiniteValueFunction("the model is non-finite at the explained point")
        if d == 1:
            phi[s] = [v_full - v_empty]
            continue
        if mode == "exact":
            masks, kern = exact_masks, exact_kernel
        else:
            masks = sample_coalitions(d, budget, sample_rng(seed, idx[s]))
            kern = np.ones(len(masks))
        values, dr = coalition_values(f, point, masks, background, wts)
        dropped += dr
        n_coal = len(masks)
        phi[s] = shapley_from_values(d, masks, values, v_empty, v_full, kern)

    return ExplainerExplanation(
        kind=SHAPLEY, effects=singleton_effects(d), points=points, values=phi,
        sample_indices=sample_indices, base_value=v_empty,
        background=background.copy(), background_weights=wts,
        diagnostics={"dropped_evals": dropped, "coalitions": n_coal, "mode": mode,
                     "background_size": len(background)})
