"""Sweep orchestration: generate, sample, explain, align, score, persist.

Output layout under the sweep directory::

    results.csv
    {cell}/{model_idx}/model.json, data.csv, gt.json, gt_contrib.csv
    {cell}/{model_idx}/{explainer}.expl.json, .match.json, .metrics.json

Every random draw is seeded from a hash of the master seed and the task key,
so results do not depend on execution order or on the worker count.
"""
from __future__ import annotations

import csv
import hashlib
import io
import json
import logging
import math
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .alignment import match_effects
from .dataset import Dataset, dataset_from_csv, dataset_to_csv, kmeans, sample_dataset
from .equivalence import adjust, reference_expectations, zero_tolerance_filter
from .errors import (ConfigInvalid, GenerationFailed, NonFiniteContribution,
                     TaskTimeout, XfidError)
from .explainers import explain_kernelshap, explain_lime, explain_pdp
from .explainers.base import PD_VALUES, SHAPLEY, SURROGATE, ExplainerExplanation
from .expr import AdditiveModel, model_from_json, model_to_json, validate_domain
from .generate import GRID, GenParams, generate_model, parameter_grid, with_seed
from .ground_truth import GroundTruthExplanation, explain_ground_truth
from .metrics import RESULT_COLUMNS, SUMMARY_COLUMNS, MetricsRecord, aggregate, score

log = logging.getLogger(__name__)

EXPLAINERS = ("pdp", "lime", "shap")
STATUSES = ("ok", "explain_failed", "timeout", "generation_failed")

DEFAULT_OVERRIDES = {
    "pdp": {"grid_size": 100},
    "lime": {"num_samples": 5000, "ridge": 1.0, "kernel_width": None},
    "shap": {"background_k": 100, "mode": "auto", "nsamples": None, "exact_max_d": 12},
}


@dataclass
class ExperimentConfig:
    grid: dict = field(default_factory=lambda: {k: None for k in GRID})
    explainers: list = field(default_factory=lambda: list(EXPLAINERS))
    overrides: dict = field(default_factory=dict)
    seed: int = 0
    timeout: float = 120.0
    models_per_cell: int = 1
    n_explain: int = 100
    atol: float = 1e-8
    max_rounds: int = 50
    record_wall_time: bool = False

    @classmethod
    def from_dict(cls, obj) -> "ExperimentConfig":
        if not isinstance(obj, dict):
            raise ConfigInvalid("config: expected a JSON object")
        known = {f.name for f in fields(cls)}
        for key in obj:
            if key not in known:
                raise ConfigInvalid(f"{key}: unknown config field")
        cfg = cls(**obj)
        cfg.validate()
        return cfg

    @classmethod
    def from_json(cls, text: str) -> "ExperimentConfig":
        try:
            return cls.from_dict(json.loads(text))
        except json.JSONDecodeError as exc:
            raise ConfigInvalid(f"config: invalid JSON ({exc})") from None

    def to_dict(self) -> dict:
        return asdict(self)

    def validate(self):
        if not isinstance(self.grid, dict):
            raise ConfigInvalid("grid: expected an object")
        for key, sel in self.grid.items():
            if key not in GRID:
                raise ConfigInvalid(f"grid.{key}: unknown grid axis")
            if sel is not None and (not isinstance(sel, list) or not sel):
                raise ConfigInvalid(f"grid.{key}: expected a non-empty list or null")
        if not isinstance(self.explainers, list):
            raise ConfigInvalid("explainers: expected a list")
        for name in self.explainers:
            if name not in EXPLAINERS:
                raise ConfigInvalid(f"explainers: unknown explainer {name!r}")
        if not isinstance(self.overrides, dict):
            raise ConfigInvalid("overrides: expected an object")
        for name, opts in self.overrides.items():
            if name not in DEFAULT_OVERRIDES or not isinstance(opts, dict):
                raise ConfigInvalid(f"overrides.{name}: unknown explainer or not an object")
            for opt in opts:
                if opt not in DEFAULT_OVERRIDES[name]:
                    raise ConfigInvalid(f"overrides.{name}.{opt}: unknown option")
        for name in ("seed", "models_per_cell", "n_explain", "max_rounds"):
            val = getattr(self, name)
            if not isinstance(val, int) or isinstance(val, bool) or val < 0:
                raise ConfigInvalid(f"{name}: expected a nonnegative integer")
        if self.models_per_cell < 1 or self.n_explain < 1 or self.max_rounds < 1:
            raise ConfigInvalid("models_per_cell, n_explain and max_rounds must be >= 1")
        if not isinstance(self.timeout, (int, float)) or self.timeout <= 0:
            raise ConfigInvalid("timeout: expected a positive number of seconds")

    def options(self, explainer: str) -> dict:
        opts = dict(DEFAULT_OVERRIDES[explainer])
        opts.update(self.overrides.get(explainer, {}))
        return opts

    def cells(self) -> list[GenParams]:
        sel = {k: self.grid.get(k) for k in GRID}
        try:
            return parameter_grid(**sel)
        except (TypeError, ValueError) as exc:
            raise ConfigInvalid(f"grid: {exc}") from None


def derive_seed(master: int, *parts) -> int:
    """64-bit seed as a pure function of the master seed and a task key."""
    blob = json.dumps([int(master), *[str(p) for p in parts]]).encode()
    return int.from_bytes(hashlib.sha256(blob).digest()[:8], "little")


def cell_id(p: GenParams) -> str:
    return (f"d{p.d}_nd{p.n_dummy}_nl{p.pct_nonlinear:g}"
            f"_pi{p.effective_pct_interact:g}_o{p.order_interact}")


# --------------------------------------------------------------------------
# single explanation

def run_explainer(name: str, model: AdditiveModel, data: Dataset, indices, seed: int,
                  opts: dict, deadline=None) -> ExplainerExplanation:
    """Run one explainer on the rows ``indices`` with black-box access to ``model``."""
    f = model.__call__
    points = data.X[indices]
    if name == "pdp":
        return explain_pdp(f, data, points, sample_indices=indices,
                           grid_size=opts["grid_size"], deadline=deadline)
    if name == "lime":
        return explain_lime(f, data, points, num_samples=opts["num_samples"], seed=seed,
                            ridge=opts["ridge"], width=opts["kernel_width"],
                            sample_indices=indices, deadline=deadline)
    if name == "shap":
        k = min(opts["background_k"], data.n)
        centroids, counts, _ = kmeans(data.X, k, derive_seed(seed, "background"))
        return explain_kernelshap(f, data, points, centroids, mode=opts["mode"],
                                  nsamples=opts["nsamples"], seed=seed,
                                  background_weights=counts, sample_indices=indices,
                                  exact_max_d=opts["exact_max_d"], deadline=deadline)
    raise ConfigInvalid(f"unknown explainer {name!r}")


def evaluate(model: AdditiveModel, expl: ExplainerExplanation, gt: GroundTruthExplanation,
             data: Dataset, atol: float = 1e-8):
    """Correct, filter, match and score an explanation. Returns ``(match, metrics)``."""
    gt = reference_expectations(model, expl, gt)
    adjusted = adjust(expl, data)
    if not np.isfinite(adjusted.contributions).all() or not np.isfinite(adjusted.base).all():
        raise XfidError("explanation has non-finite contributions")
    present = adjusted.subset(zero_tolerance_filter(adjusted.contributions, atol))
    match = match_effects(gt.effects, present.effects)
    return match, score(match, gt, present)


def _checksum(row: dict) -> str:
    return hashlib.sha256(json.dumps(row, sort_keys=True).encode()).hexdigest()


def _write_metrics(path: Path, rec: MetricsRecord):
    row = rec.row()
    path.write_text(json.dumps({"row": row, "per_group_nrmse": rec.per_group_nrmse,
                                "checksum": _checksum(row)}, sort_keys=True))


def _load_metrics(path: Path):
    try:
        obj = json.loads(path.read_text())
        if obj["checksum"] != _checksum(obj["row"]):
            return None
        rec = MetricsRecord(**obj["row"])
        rec.per_group_nrmse = obj.get("per_group_nrmse", [])
        return rec
    except (OSError, ValueError, KeyError, TypeError):
        return None


def _explain_task(name, model, data, gt, indices, seed, config, rec, outdir):
    t0 = time.monotonic()
    try:
        expl = run_explainer(name, model, data, indices, seed, config.options(name),
                             deadline=t0 + config.timeout)
        match, m = evaluate(model, expl, gt, data, config.atol)
        if time.monotonic() - t0 > config.timeout:
            raise TaskTimeout("explanation finished past its time budget")
        rec.maiou = m["maiou"]
        rec.mean_cosine = m["mean_cosine"]
        rec.mean_euclidean = m["mean_euclidean"]
        rec.mean_nrmse = m["mean_nrmse"]
        rec.explainer_rmse = m["explainer_rmse"]
        rec.per_group_nrmse = m["per_group_nrmse"]
        rec.dropped_evals = int(expl.diagnostics.get("dropped_evals", 0))
        if outdir is not None:
            (outdir / f"{name}.expl.json").write_text(expl.to_json())
            (outdir / f"{name}.match.json").write_text(match.to_json())
    except TaskTimeout:
        rec.status = "timeout"
    except Exception as exc:  # crash isolation: any failure becomes a status row
        log.info("%s failed on %s: %s", name, rec.model_id, exc)
        rec.status = "explain_failed"
    wall = (time.monotonic() - t0) * 1000.0
    return rec, wall


# --------------------------------------------------------------------------
# sweep

def _model_task(args):
    cell_params, idx, config, out_root = args
    cell = cell_id(cell_params)
    model_id = f"{cell}/{idx}"
    outdir = Path(out_root) / cell / str(idx)
    outdir.mkdir(parents=True, exist_ok=True)
    base = dict(model_id=model_id, d=cell_params.d, n_dummy=cell_params.n_dummy,
                pct_nonlinear=cell_params.pct_nonlinear,
                pct_interact=cell_params.effective_pct_interact,
                order_interact=cell_params.order_interact)

    done = {}
    for name in config.explainers:
        rec = _load_metrics(outdir / f"{name}.metrics.json")
        if rec is not None:
            done[name] = rec
    if len(done) == len(config.explainers):
        return [done[n].row() for n in config.explainers]

    data = sample_dataset(cell_params.d, derive_seed(config.seed, cell, idx, "data"))
    params = with_seed(cell_params, derive_seed(config.seed, cell, idx, "model"))
    try:
        model = generate_model(params, data=data.X, max_rounds=config.max_rounds)
        gt = explain_ground_truth(model, data)
    except (GenerationFailed, NonFiniteContribution):
        rows = []
        for name in config.explainers:
            rec = MetricsRecord(explainer=name, status="generation_failed", **base)
            _write_metrics(outdir / f"{name}.metrics.json", rec)
            rows.append(rec.row())
        return rows

    (outdir / "model.json").write_text(model_to_json(model))
    (outdir / "data.csv").write_text(dataset_to_csv(data))
    (outdir / "gt.json").write_text(gt.to_json())
    (outdir / "gt_contrib.csv").write_text(gt.contributions_csv())

    rng = np.random.default_rng(derive_seed(config.seed, cell, idx, "subset"))
    n_exp = min(data.n, config.n_explain)
    indices = np.sort(rng.choice(data.n, size=n_exp, replace=False))

    rows = []
    for name in config.explainers:
        if name in done:
            rows.append(done[name].row())
            continue
        seed = derive_seed(config.seed, cell, idx, name)
        rec = MetricsRecord(explainer=name, **base)
        rec, wall = _explain_task(name, model, data, gt, indices, seed, config, rec, outdir)
        timed = MetricsRecord(**{**asdict(rec), "wall_ms": round(wall, 3)})
        # per-task artifacts always carry the wall time
        (outdir / f"{name}.timing.json").write_text(json.dumps({"wall_ms": timed.wall_ms}))
        if config.record_wall_time:
            rec = timed
        _write_metrics(outdir / f"{name}.metrics.json", rec)
        rows.append(rec.row())
    return rows


def _fmt(v) -> str:
    if v is None:
        return ""
    if isinstance(v, float):
        return "nan" if math.isnan(v) else repr(v)
    return str(v)


def format_rows(rows, columns) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(columns)
    for r in rows:
        w.writerow([_fmt(r[c]) for c in columns])
    return buf.getvalue()


def write_rows(path, rows, columns):
    Path(path).write_text(format_rows(rows, columns))


def read_rows(path) -> list[dict]:
    with open(path, newline="") as fh:
        return list(csv.DictReader(fh))


def run_sweep(config: ExperimentConfig, out_dir, jobs: int = 1) -> Path:
    """Run every (cell, model, explainer) task and write ``results.csv``.

    Rows are ordered by grid cell, model index and the configured explainer
    order regardless of ``jobs``.
    """
    config.validate()
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    tasks = []
    if config.explainers:
        for p in config.cells():
            for idx in range(config.models_per_cell):
                tasks.append((p, idx, config, str(out)))
    if jobs > 1 and len(tasks) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as pool:
            results = list(pool.map(_model_task, tasks))
    else:
        results = [_model_task(t) for t in tasks]
    rows = [r for chunk in results for r in chunk]
    path = out / "results.csv"
    write_rows(path, rows, RESULT_COLUMNS)
    return path


def report(results_csv, out_csv) -> list[dict]:
    summary = aggregate(read_rows(results_csv))
    write_rows(out_csv, summary, SUMMARY_COLUMNS)
    return summary


# --------------------------------------------------------------------------
# single-model entry points

def load_model(path) -> AdditiveModel:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigInvalid(f"model: cannot read {path} ({exc})") from None
    return model_from_json(text)


def load_dataset(path) -> Dataset:
    try:
        return dataset_from_csv(Path(path).read_text())
    except (OSError, ValueError) as exc:
        raise ConfigInvalid(f"data: cannot load {path} ({exc})") from None


def _single_data(model, data_path, seed):
    if data_path is not None:
        data = load_dataset(data_path)
        if data.d != model.d:
            raise ConfigInvalid(f"data: has {data.d} columns, model expects {model.d}")
        return data, None
    data_seed = derive_seed(seed, "data")
    return sample_dataset(model.d, data_seed), data_seed


def run_single(model_path, explainer: str, seed: int, data_path=None, out_dir=None,
               exact_shap: bool = False, n_explain: int = 100, timeout: float = 120.0,
               overrides: dict | None = None, atol: float = 1e-8) -> MetricsRecord:
    """Explain one model file; writes explanation, match and one-row metrics CSV."""
    model = load_model(model_path)
    if explainer not in EXPLAINERS:
        raise ConfigInvalid(f"explainer: unknown explainer {explainer!r}")
    data, data_seed = _single_data(model, data_path, seed)
    config = ExperimentConfig(overrides=overrides or {}, seed=seed, timeout=timeout,
                              n_explain=n_explain, atol=atol)
    if exact_shap:
        config.overrides.setdefault("shap", {})["mode"] = "exact"
    config.validate()
    out = Path(out_dir) if out_dir is not None else Path(model_path).parent
    out.mkdir(parents=True, exist_ok=True)

    if not validate_domain(model, data.X):
        raise ConfigInvalid("model: non-finite on the dataset")
    gt = explain_ground_truth(model, data)
    rng = np.random.default_rng(derive_seed(seed, "subset"))
    indices = np.sort(rng.choice(data.n, size=min(data.n, n_explain), replace=False))
    rec = MetricsRecord(model_id=str(model_path), explainer=explainer, d=model.d,
                        n_dummy=len(model.dummy_features))
    rec, wall = _explain_task(explainer, model, data, gt, indices,
                              derive_seed(seed, explainer), config, rec, out)
    rec.wall_ms = round(wall, 3)
    expl_path = out / f"{explainer}.expl.json"
    if rec.status == "ok" and data_seed is not None:
        obj = json.loads(expl_path.read_text())
        obj["diagnostics"]["data_seed"] = data_seed
        expl_path.write_text(json.dumps(obj, sort_keys=True))
    write_rows(out / f"{explainer}.metrics.csv", [rec.row()], RESULT_COLUMNS)
    return rec


def evaluate_file(model_path, expl_path, data_path=None, atol: float = 1e-8) -> MetricsRecord:
    """Score a saved explanation against the model's ground truth."""
    model = load_model(model_path)
    try:
        expl = ExplainerExplanation.from_json(Path(expl_path).read_text())
    except OSError as exc:
        raise ConfigInvalid(f"expl: cannot read {expl_path} ({exc})") from None
    if data_path is not None:
        data = load_dataset(data_path)
    elif "data_seed" in expl.diagnostics:
        data = sample_dataset(model.d, int(expl.diagnostics["data_seed"]))
    else:
        raise ConfigInvalid("data: pass --data; the explanation records no data_seed")
    if expl.sample_indices is None:
        raise ConfigInvalid("expl: sample_indices missing")
    gt = explain_ground_truth(model, data)
    match, m = evaluate(model, expl, gt, data, atol)
    name = {SURROGATE: "lime", SHAPLEY: "shap", PD_VALUES: "pdp"}.get(expl.kind, expl.kind)
    rec = MetricsRecord(model_id=str(model_path), explainer=name, d=model.d,
                        n_dummy=len(model.dummy_features))
    for key in ("maiou", "mean_cosine", "mean_euclidean", "mean_nrmse", "explainer_rmse",
                "per_group_nrmse"):
        setattr(rec, key, m[key])
    rec.dropped_evals = int(expl.diagnostics.get("dropped_evals", 0))
    return rec
