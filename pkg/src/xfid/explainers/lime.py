"""Tabular LIME without discretization or feature selection."""
from __future__ import annotations

import math

import numpy as np

from ..dataset import Dataset
from ..errors import TooFewValidSamples
from .base import (SURROGATE, BlackBox, ExplainerExplanation, as_points,
                   check_deadline, sample_rng, singleton_effects)
from .solvers import weighted_least_squares


def kernel_width(d: int) -> float:
    return 0.75 * math.sqrt(d)


def explain_lime(f: BlackBox, data: Dataset, x, num_samples: int = 5000, seed: int = 0,
                 ridge: float = 1.0, width: float | None = None,
                 sample_indices=None, min_valid: float = 0.1,
                 deadline=None) -> ExplainerExplanation:
    """Fit a weighted ridge surrogate around each point, in z-score space.

    Perturbations are standard normal in z-space (so centred on the data mean
    in raw space). As in the reference LIME implementation, the first
    perturbation is replaced by the explained point itself. Rows whose label is
    non-finite are dropped; fewer than ``min_valid * num_samples`` finite
    labels raises :class:`TooFewValidSamples`.
    """
    points = as_points(x)
    d = data.d
    mu, sigma = data.mean, data.std
    if np.any(sigma <= 0):
        raise ValueError("LIME needs a positive standard deviation for every feature")
    width = kernel_width(d) if width is None else width
    idx = np.arange(len(points)) if sample_indices is None else np.asarray(sample_indices)

    coef = np.empty((len(points), d))
    icpt = np.empty(len(points))
    dropped = 0
    for s, point in enumerate(points):
        check_deadline(deadline)
        rng = sample_rng(seed, idx[s])
        z_point = (point - mu) / sigma
        Z = rng.standard_normal((num_samples, d))
        Z[0] = z_point
        with np.errstate(all="ignore"):
            y = np.asarray(f(Z * sigma + mu), dtype=float)
        ok = np.isfinite(y)
        n_ok = int(ok.sum())
        if n_ok < min_valid * num_samples:
            raise TooFewValidSamples(
                f"only {n_ok}/{num_samples} perturbations gave finite outputs")
        dropped += num_samples - n_ok
        dist2 = np.sum((Z - z_point) ** 2, axis=1)
        w = np.exp(-dist2 / width ** 2)
        A = np.hstack([np.ones((num_samples, 1)), Z])
        theta = weighted_least_squares(A[ok], y[ok], w[ok], ridge=ridge, intercept=0)
        icpt[s], coef[s] = theta[0], theta[1:]

    return ExplainerExplanation(
        kind=SURROGATE, effects=singleton_effects(d), points=points, values=coef,
        sample_indices=sample_indices, intercept=icpt, mu=mu.copy(), sigma=sigma.copy(),
        diagnostics={"dropped_evals": dropped, "num_samples": num_samples,
                     "kernel_width": width, "ridge": ridge})
