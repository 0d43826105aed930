"""Put raw explainer output on the same scale as ground-truth contributions.

* surrogate coefficients are mapped from z-space back to raw feature units and
  multiplied by the feature values;
* Shapley attributions are mean-centred, so each match group gets the expected
  ground-truth contribution of its model effects added back;
* partial dependence values are centred over the data first and then treated
  like Shapley attributions.
"""
from __future__ import annotations

import io
from dataclasses import dataclass, replace
from typing import Optional

import numpy as np

from .alignment import MatchResult
from .dataset import Dataset
from .explainers.base import PD_VALUES, SHAPLEY, SURROGATE, ExplainerExplanation
from .explainers.pdp import pd_at
from .expr import AdditiveModel, eval_effects
from .ground_truth import GroundTruthExplanation

__all__ = ["AdjustedExplanation", "lime_unnormalize", "coefficients_to_contributions",
           "pdp_center", "shap_add_expectation", "background_expectation", "reference_expectations", "zero_tolerance_filter", "adjust",
           "group_sums"]


@dataclass(frozen=True)
class AdjustedExplanation:
    """Per-effect contributions, shape ``(m_hat, n_explained)``.

    ``base`` is the per-point offset that completes the explainer's own
    prediction (LIME's unnormalized intercept, SHAP's ``v(empty)``, the mean
    model output for PDP). ``add_expectation`` says whether groups need the
    expected ground-truth contribution added back.
    """

    kind: str
    effects: list[tuple[int, ...]]
    contributions: np.ndarray
    base: np.ndarray
    add_expectation: bool
    sample_indices: Optional[np.ndarray] = None

    def subset(self, mask) -> "AdjustedExplanation":
        mask = np.asarray(mask, dtype=bool)
        return replace(self, effects=[e for e, keep in zip(self.effects, mask) if keep],
                       contributions=self.contributions[mask])

    @property
    def prediction(self) -> np.ndarray:
        """The explainer's own estimate of the model output at each point."""
        return self.contributions.sum(axis=0) + self.base

    def contributions_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(f"C{k}" for k in range(len(self.effects))) + "\n")
        for col in self.contributions.T:
            buf.write(",".join(format(v, ".17g") for v in col) + "\n")
        return buf.getvalue()


def lime_unnormalize(theta0, theta, mu, sigma):
    """Map a z-space linear model to raw units.

    ``theta`` may be a d-vector or an ``(n, d)`` stack with ``theta0`` of
    length n.
    """
    theta = np.asarray(theta, dtype=float)
    mu = np.asarray(mu, dtype=float)
    sigma = np.asarray(sigma, dtype=float)
    raw = theta / sigma
    return np.asarray(theta0, dtype=float) - raw @ mu, raw


def coefficients_to_contributions(theta, X) -> np.ndarray:
    """Entry ``(i, s)`` is ``X[s, i] * theta[i]`` (or ``theta[s, i]`` per point)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    return (X * np.asarray(theta, dtype=float)).T


def pdp_center(pd_values, data: Dataset, grid, curve) -> np.ndarray:
    """Subtract each feature's mean partial dependence over the data rows."""
    means = pd_at(grid, curve, data.X).mean(axis=0)
    return np.asarray(pd_values, dtype=float) - means[:, None]


def shap_add_expectation(sums, match: MatchResult, gt: GroundTruthExplanation) -> np.ndarray:
    """Add ``sum_j E[C_j]`` over each group's model side to the group sums."""
    sums = np.array(sums, dtype=float)
    for c, g in enumerate(match.groups):
        for j in g.model:
            sums[c] += gt.expected[j]
    return sums


def background_expectation(model: AdditiveModel, background, weights=None) -> np.ndarray:
    """Weighted mean of each effect over background rows, skipping non-finite values."""
    B = np.atleast_2d(np.asarray(background, dtype=float))
    w = np.ones(len(B)) if weights is None else np.asarray(weights, dtype=float)
    C = eval_effects(model, B)
    ok = np.isfinite(C)
    return np.where(ok, C, 0.0) @ w / (ok @ w)


def reference_expectations(model: AdditiveModel, expl: ExplainerExplanation,
                           gt: GroundTruthExplanation) -> GroundTruthExplanation:
    """Ground truth whose ``expected`` matches the explainer's reference distribution.

    Shapley attributions are centred on the background the value function
    averaged over, so the add-back must use that same expectation; otherwise a
    summarized background leaves a constant offset on every nonlinear effect.
    """
    if expl.kind != SHAPLEY or expl.background is None:
        return gt
    return replace(gt, expected=background_expectation(model, expl.background,
                                                       expl.background_weights))


def zero_tolerance_filter(contributions, atol: float = 1e-8) -> np.ndarray:
    """Mask of effects with at least one contribution larger than ``atol``."""
    C = np.asarray(contributions, dtype=float)
    if C.shape[1] == 0:
        return np.zeros(C.shape[0], dtype=bool)
    return ~np.all(np.abs(C) <= atol, axis=1)


def adjust(expl: ExplainerExplanation, data: Dataset) -> AdjustedExplanation:
    n = len(expl.points)
    if expl.kind == SURROGATE:
        theta0, theta = lime_unnormalize(expl.intercept, expl.values, expl.mu, expl.sigma)
        contrib = coefficients_to_contributions(theta, expl.points)
        return AdjustedExplanation(expl.kind, list(expl.effects), contrib,
                                   np.asarray(theta0, dtype=float), False,
                                   expl.sample_indices)
    if expl.kind == SHAPLEY:
        return AdjustedExplanation(expl.kind, list(expl.effects), expl.values.T.copy(),
                                   np.full(n, expl.base_value), True, expl.sample_indices)
    if expl.kind == PD_VALUES:
        centered = pdp_center(expl.values.T, data, expl.pd_grid, expl.pd_curve)
        return AdjustedExplanation(expl.kind, list(expl.effects), centered,
                                   np.full(n, expl.base_value), True, expl.sample_indices)
    raise ValueError(f"unknown explanation kind {expl.kind!r}")


def group_sums(adjusted: AdjustedExplanation, match: MatchResult) -> np.ndarray:
    """Raw explainer contribution summed over each group's explainer side."""
    out = np.zeros((len(match.groups), adjusted.contributions.shape[1]))
    for c, g in enumerate(match.groups):
        for k in g.explainer:
            out[c] += adjusted.contributions[k]
    return out
