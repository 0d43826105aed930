from __future__ import annotations

import json
import time
from dataclasses import dataclass, field
from typing import Callable, Optional

import numpy as np

from ..errors import ConfigInvalid, TaskTimeout

BlackBox = Callable[[np.ndarray], np.ndarray]

SURROGATE = "surrogate-coefficients"
SHAPLEY = "shapley-attributions"
PD_VALUES = "pd-values"
KINDS = (SURROGATE, SHAPLEY, PD_VALUES)


@dataclass
class ExplainerExplanation:
    """Raw explainer output for a batch of explained points.

    ``values`` holds one row per explained point and one column per effect:
    z-space coefficients for surrogates, attributions for Shapley explainers
    and interpolated partial dependence for PDP.
    """

    kind: str
    effects: list[tuple[int, ...]]
    points: np.ndarray
    values: np.ndarray
    sample_indices: Optional[np.ndarray] = None
    intercept: Optional[np.ndarray] = None
    base_value: Optional[float] = None
    mu: Optional[np.ndarray] = None
    sigma: Optional[np.ndarray] = None
    pd_grid: Optional[np.ndarray] = None
    pd_curve: Optional[np.ndarray] = None
    background: Optional[np.ndarray] = None
    background_weights: Optional[np.ndarray] = None
    diagnostics: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        out = {"kind": self.kind, "effects": [list(e) for e in self.effects],
               "points": self.points.tolist(), "values": self.values.tolist(),
               "diagnostics": dict(self.diagnostics)}
        if self.sample_indices is not None:
            out["sample_indices"] = [int(i) for i in self.sample_indices]
        for key in _ARRAY_FIELDS:
            val = getattr(self, key)
            if val is not None:
                out[key] = np.asarray(val).tolist()
        if self.base_value is not None:
            out["base_value"] = float(self.base_value)
        return out

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), sort_keys=True)

    @classmethod
    def from_dict(cls, obj: dict) -> "ExplainerExplanation":
        try:
            kind = obj["kind"]
            if kind not in KINDS:
                raise ConfigInvalid(f"kind: unknown explanation kind {kind!r}")
            kw = {"kind": kind,
                  "effects": [tuple(e) for e in obj["effects"]],
                  "points": np.array(obj["points"], dtype=float),
                  "values": np.array(obj["values"], dtype=float),
                  "diagnostics": obj.get("diagnostics", {})}
        except KeyError as exc:
            raise ConfigInvalid(f"explanation: missing field {exc.args[0]!r}") from None
        if "sample_indices" in obj:
            kw["sample_indices"] = np.array(obj["sample_indices"], dtype=int)
        for key in _ARRAY_FIELDS:
            if key in obj:
                kw[key] = np.array(obj[key], dtype=float)
        if "base_value" in obj:
            kw["base_value"] = float(obj["base_value"])
        return cls(**kw)

    @classmethod
    def from_json(cls, text: str) -> "ExplainerExplanation":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"explanation: invalid JSON ({exc})") from None


_ARRAY_FIELDS = ("intercept", "mu", "sigma", "pd_grid", "pd_curve", "background",
                 "background_weights")


def singleton_effects(d: int) -> list[tuple[int, ...]]:
    return [(i,) for i in range(d)]


def as_points(x) -> np.ndarray:
    X = np.asarray(x, dtype=float)
    return X[None, :] if X.ndim == 1 else X


def check_deadline(deadline: float | None):
    if deadline is not None and time.monotonic() > deadline:
        raise TaskTimeout("explainer exceeded its time budget")


def sample_rng(seed: int, index: int) -> np.random.Generator:
    """Independent stream for explained point ``index``."""
    return np.random.default_rng(np.random.SeedSequence([int(seed) % 2**64, int(index)]))
