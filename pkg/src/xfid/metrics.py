"""Infidelity scores between matched ground-truth and explained contributions."""
from __future__ import annotations

import math
from collections import defaultdict
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.stats import rankdata

from .alignment import MatchResult
from .equivalence import AdjustedExplanation, group_sums, shap_add_expectation
from .errors import DegenerateIQR, ZeroVariance
from .ground_truth import GroundTruthExplanation

__all__ = ["RESULT_COLUMNS", "SUMMARY_COLUMNS", "MetricsRecord",
           "comparison_matrices", "build_comparison_vectors", "cosine_distance",
           "euclidean_distance", "nrmse", "spearman_rho", "score", "aggregate"]

RESULT_COLUMNS = ("model_id", "explainer", "d", "n_dummy", "pct_nonlinear",
                  "pct_interact", "order_interact", "maiou", "mean_cosine",
                  "mean_euclidean", "mean_nrmse", "explainer_rmse", "dropped_evals",
                  "wall_ms", "status")

CELL_KEYS = ("d", "n_dummy", "pct_nonlinear", "pct_interact", "order_interact")

SUMMARY_COLUMNS = ("explainer", *CELL_KEYS, "n_models", "maiou", "mean_cosine",
                   "mean_euclidean", "mean_nrmse", "explainer_rmse", "rho_perf")


@dataclass
class MetricsRecord:
    model_id: str
    explainer: str
    d: int = 0
    n_dummy: int = 0
    pct_nonlinear: float = 0.0
    pct_interact: float = 0.0
    order_interact: int = 1
    maiou: float = math.nan
    mean_cosine: float = math.nan
    mean_euclidean: float = math.nan
    mean_nrmse: float = math.nan
    explainer_rmse: float = math.nan
    dropped_evals: int = 0
    wall_ms: float | None = None
    status: str = "ok"
    per_group_nrmse: list = field(default_factory=list)

    def row(self) -> dict:
        out = asdict(self)
        return {k: out[k] for k in RESULT_COLUMNS}


def _gt_columns(gt: GroundTruthExplanation, adjusted: AdjustedExplanation):
    n = adjusted.contributions.shape[1]
    if adjusted.sample_indices is None:
        return np.arange(n)
    return np.asarray(adjusted.sample_indices, dtype=int)


def comparison_matrices(match: MatchResult, gt: GroundTruthExplanation,
                        adjusted: AdjustedExplanation):
    """Ground-truth and explained group contributions, both ``(groups, n_explained)``."""
    cols = _gt_columns(gt, adjusted)
    V = np.zeros((len(match.groups), len(cols)))
    for c, g in enumerate(match.groups):
        for j in g.model:
            V[c] += gt.contributions[j, cols]
    Vhat = group_sums(adjusted, match)
    if adjusted.add_expectation:
        Vhat = shap_add_expectation(Vhat, match, gt)
    return V, Vhat


def build_comparison_vectors(match, gt, adjusted, sample_index: int):
    V, Vhat = comparison_matrices(match, gt, adjusted)
    return V[:, sample_index], Vhat[:, sample_index]


def cosine_distance(v, v_hat) -> float:
    """``1 - cos``; 0 when both vectors are zero, 1 when exactly one is."""
    v = np.asarray(v, dtype=float)
    v_hat = np.asarray(v_hat, dtype=float)
    if np.array_equal(v, v_hat):
        return 0.0
    na, nb = np.linalg.norm(v), np.linalg.norm(v_hat)
    if na == 0 and nb == 0:
        return 0.0
    if na == 0 or nb == 0:
        return 1.0
    cos = float(np.dot(v / na, v_hat / nb))
    return float(min(2.0, max(0.0, 1.0 - cos)))


def euclidean_distance(v, v_hat) -> float:
    return float(np.linalg.norm(np.asarray(v, dtype=float) - np.asarray(v_hat, dtype=float)))


def nrmse(a, b) -> float:
    """RMSE of ``b`` against ``a``, divided by the interquartile range of ``a``."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    q1, q3 = np.quantile(a, [0.25, 0.75])
    if q3 == q1:
        raise DegenerateIQR("interquartile range of the reference is zero")
    return float(np.sqrt(np.mean((a - b) ** 2)) / (q3 - q1))


def spearman_rho(u, w) -> float:
    """Pearson correlation of average-tie ranks."""
    ru = rankdata(u, method="average")
    rw = rankdata(w, method="average")
    if len(ru) < 2:
        raise ValueError("need at least two observations")
    if np.ptp(ru) == 0 or np.ptp(rw) == 0:
        raise ZeroVariance("rank vector is constant")
    ru = ru - ru.mean()
    rw = rw - rw.mean()
    return float(ru @ rw / math.sqrt((ru @ ru) * (rw @ rw)))


def score(match: MatchResult, gt: GroundTruthExplanation,
          adjusted: AdjustedExplanation) -> dict:
    V, Vhat = comparison_matrices(match, gt, adjusted)
    n = V.shape[1]
    cos = [cosine_distance(V[:, s], Vhat[:, s]) for s in range(n)]
    euc = [euclidean_distance(V[:, s], Vhat[:, s]) for s in range(n)]
    per_group = []
    for c in range(V.shape[0]):
        try:
            per_group.append(nrmse(V[c], Vhat[c]))
        except DegenerateIQR:
            per_group.append(math.nan)
    finite = [x for x in per_group if not math.isnan(x)]
    truth = gt.total[_gt_columns(gt, adjusted)]
    rmse = float(np.sqrt(np.mean((adjusted.prediction - truth) ** 2)))
    return {"maiou": match.maiou,
            "mean_cosine": float(np.mean(cos)) if cos else math.nan,
            "mean_euclidean": float(np.mean(euc)) if euc else math.nan,
            "per_group_nrmse": per_group,
            "mean_nrmse": float(np.mean(finite)) if finite else math.nan,
            "explainer_rmse": rmse}


def _num(x) -> float:
    try:
        return float(x)
    except (TypeError, ValueError):
        return math.nan


def _nanmean(xs) -> float:
    xs = [x for x in xs if not math.isnan(x)]
    return float(np.mean(xs)) if xs else math.nan


def aggregate(records) -> list[dict]:
    """Per (explainer, grid cell) means over successful rows, plus ``rho_perf``.

    ``rho_perf`` is the Spearman correlation, across the explainers of a cell,
    between fidelity (``1 - mean_cosine``) and accuracy (``-explainer_rmse``).
    It is NaN when fewer than two explainers succeeded or ranks are constant.
    """
    rows = [r.row() if isinstance(r, MetricsRecord) else dict(r) for r in records]
    cells = defaultdict(list)
    for r in rows:
        if r.get("status", "ok") != "ok":
            continue
        key = (str(r["explainer"]),) + tuple(_num(r[k]) for k in CELL_KEYS)
        cells[key].append(r)
    summary = []
    for key in sorted(cells):
        grp = cells[key]
        out = {"explainer": key[0]}
        for k, v in zip(CELL_KEYS, key[1:]):
            out[k] = int(v) if k in ("d", "n_dummy", "order_interact") else v
        out["n_models"] = len(grp)
        for k in ("maiou", "mean_cosine", "mean_euclidean", "mean_nrmse", "explainer_rmse"):
            out[k] = _nanmean([_num(r[k]) for r in grp])
        summary.append(out)
    by_cell = defaultdict(list)
    for row in summary:
        by_cell[tuple(row[k] for k in CELL_KEYS)].append(row)
    for members in by_cell.values():
        rho = math.nan
        if len(members) >= 2:
            u = [1.0 - r["mean_cosine"] for r in members]
            w = [-r["explainer_rmse"] for r in members]
            if not any(math.isnan(x) for x in u + w):
                try:
                    rho = spearman_rho(u, w)
                except ZeroVariance:
                    pass
        for r in members:
            r["rho_perf"] = rho
    return summary
