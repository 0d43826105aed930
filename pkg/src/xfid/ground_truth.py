"""Exact per-effect contributions of a white-box model."""
from __future__ import annotations

import io
import json
from dataclasses import dataclass

import numpy as np

from .dataset import Dataset
from .errors import NonFiniteContribution
from .expr import AdditiveModel, eval_effects, sum_effects

__all__ = ["GroundTruthExplanation", "explain_ground_truth"]


@dataclass(frozen=True)
class GroundTruthExplanation:
    effects: list[tuple[int, ...]]
    contributions: np.ndarray  # (m, n)
    expected: np.ndarray  # (m,)

    @property
    def total(self) -> np.ndarray:
        return sum_effects(self.contributions)

    def to_json(self) -> str:
        return json.dumps({"effects": [list(e) for e in self.effects],
                           "expected": [float(v) for v in self.expected]},
                          sort_keys=True)

    def contributions_csv(self) -> str:
        buf = io.StringIO()
        buf.write(",".join(f"C{j}" for j in range(len(self.effects))) + "\n")
        for col in self.contributions.T:
            buf.write(",".join(format(v, ".17g") for v in col) + "\n")
        return buf.getvalue()


def explain_ground_truth(model: AdditiveModel, data: Dataset) -> GroundTruthExplanation:
    contrib = eval_effects(model, data.X)
    if not np.isfinite(contrib).all():
        j, s = np.argwhere(~np.isfinite(contrib))[0]
        raise NonFiniteContribution(
            f"effect {j} is non-finite at sample {s}; the model was not "
            "validated on this dataset")
    contrib.setflags(write=False)
    return GroundTruthExplanation(model.effect_features, contrib, contrib.mean(axis=1))
