"""Partial dependence used as a local, per-feature explainer."""
from __future__ import annotations

import numpy as np

from ..dataset import Dataset
from ..errors import DegeneratePD
from .base import (PD_VALUES, BlackBox, ExplainerExplanation, as_points,
                   check_deadline, singleton_effects)

GRID_SIZE = 100
_CHUNK = 4_000_000  # max matrix entries per model call


def interp_extrap(x, xp, fp):
    """Piecewise-linear interpolation, extended linearly past both ends."""
    x = np.asarray(x, dtype=float)
    xp = np.asarray(xp, dtype=float)
    fp = np.asarray(fp, dtype=float)
    out = np.interp(x, xp, fp)
    if xp.size < 2 or xp[0] == xp[-1]:
        return out
    lo, hi = x < xp[0], x > xp[-1]
    if lo.any():
        j = 1 + np.argmax(xp[1:] > xp[0])
        slope = (fp[j] - fp[0]) / (xp[j] - xp[0])
        out[lo] = fp[0] + slope * (x[lo] - xp[0])
    if hi.any():
        j = np.flatnonzero(xp[:-1] < xp[-1])[-1]
        slope = (fp[-1] - fp[j]) / (xp[-1] - xp[j])
        out[hi] = fp[-1] + slope * (x[hi] - xp[-1])
    return out


def pd_curves(f: BlackBox, X, grid_size: int = GRID_SIZE, deadline=None):
    """Partial dependence of every feature on a percentile grid.

    Returns ``(grid, curve, dropped)`` with ``grid`` and ``curve`` of shape
    ``(d, grid_size)``; non-finite model outputs are left out of the averages
    and counted in ``dropped``.
    """
    X = np.asarray(X, dtype=float)
    n, d = X.shape
    grid = np.percentile(X, np.linspace(0, 100, grid_size), axis=0).T
    curve = np.empty((d, grid_size))
    dropped = 0
    per_call = max(1, _CHUNK // max(1, n * d))
    for i in range(d):
        check_deadline(deadline)
        for start in range(0, grid_size, per_call):
            vals = grid[i, start:start + per_call]
            Z = np.tile(X, (vals.size, 1))
            Z[:, i] = np.repeat(vals, n)
            with np.errstate(all="ignore"):
                y = np.asarray(f(Z), dtype=float).reshape(vals.size, n)
            ok = np.isfinite(y)
            bad = n - ok.sum(axis=1)
            if np.any(bad > 0.5 * n):
                g = start + int(np.argmax(bad > 0.5 * n))
                raise DegeneratePD(
                    f"feature {i}: {int(bad.max())}/{n} non-finite outputs at grid "
                    f"point {g} (value {grid[i, g]:.6g})")
            dropped += int(bad.sum())
            curve[i, start:start + vals.size] = np.where(ok, y, 0.0).sum(axis=1) / ok.sum(axis=1)
    return grid, curve, dropped


def pd_at(grid, curve, X) -> np.ndarray:
    """Interpolated partial dependence of each feature at each row of ``X``."""
    X = as_points(X)
    out = np.empty_like(X)
    for i in range(X.shape[1]):
        out[:, i] = interp_extrap(X[:, i], grid[i], curve[i])
    return out


def explain_pdp(f: BlackBox, data: Dataset, x, sample_indices=None,
                grid_size: int = GRID_SIZE, deadline=None) -> ExplainerExplanation:
    points = as_points(x)
    grid, curve, dropped = pd_curves(f, data.X, grid_size, deadline)
    with np.errstate(all="ignore"):
        y = np.asarray(f(data.X), dtype=float)
    base = float(y[np.isfinite(y)].mean()) if np.isfinite(y).any() else float("nan")
    return ExplainerExplanation(
        kind=PD_VALUES, effects=singleton_effects(data.d), points=points,
        values=pd_at(grid, curve, points), sample_indices=sample_indices,
        base_value=base, pd_grid=grid, pd_curve=curve,
        diagnostics={"dropped_evals": dropped, "grid_size": grid_size})
