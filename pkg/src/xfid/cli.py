"""Command-line entry point: ``xfid {gen,explain,eval,sweep,report,config}``."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

from .dataset import dataset_to_csv, sample_dataset
from .errors import ConfigInvalid, GenerationFailed, XfidError
from .expr import model_to_json
from .generate import generate_model, with_seed
from .harness import (EXPLAINERS, ExperimentConfig, cell_id, derive_seed, evaluate_file,
                      format_rows, report, run_single, run_sweep, write_rows)
from .metrics import RESULT_COLUMNS

EXIT_CODES = {"ok": 0, "config_invalid": 2, "explain_failed": 3, "timeout": 4,
              "generation_failed": 5}


def _load_config(path) -> ExperimentConfig:
    try:
        text = Path(path).read_text()
    except OSError as exc:
        raise ConfigInvalid(f"config: cannot read {path} ({exc})") from None
    return ExperimentConfig.from_json(text)


def cmd_gen(args) -> int:
    config = _load_config(args.config)
    out = Path(args.out)
    failed = 0
    for p in config.cells():
        cell = cell_id(p)
        for idx in range(config.models_per_cell):
            data = sample_dataset(p.d, derive_seed(config.seed, cell, idx, "data"))
            params = with_seed(p, derive_seed(config.seed, cell, idx, "model"))
            try:
                model = generate_model(params, data=data.X, max_rounds=config.max_rounds)
            except GenerationFailed as exc:
                print(f"{cell}/{idx}: {exc}", file=sys.stderr)
                failed += 1
                continue
            target = out / cell / str(idx)
            target.mkdir(parents=True, exist_ok=True)
            (target / "model.json").write_text(model_to_json(model))
            (target / "data.csv").write_text(dataset_to_csv(data))
    return EXIT_CODES["generation_failed"] if failed else 0


def cmd_explain(args) -> int:
    rec = run_single(args.model, args.explainer, args.seed, data_path=args.data,
                     out_dir=args.out, exact_shap=args.exact_shap,
                     n_explain=args.n_explain, timeout=args.timeout)
    sys.stdout.write(format_rows([rec.row()], RESULT_COLUMNS))
    return EXIT_CODES[rec.status]


def cmd_eval(args) -> int:
    rec = evaluate_file(args.model, args.expl, data_path=args.data)
    if args.out:
        write_rows(args.out, [rec.row()], RESULT_COLUMNS)
    else:
        sys.stdout.write(format_rows([rec.row()], RESULT_COLUMNS))
    return 0


def cmd_sweep(args) -> int:
    path = run_sweep(_load_config(args.config), args.out, jobs=args.jobs)
    print(path)
    return 0


def cmd_report(args) -> int:
    src = Path(args.input)
    if src.is_dir():
        src = src / "results.csv"
    if not src.exists():
        raise ConfigInvalid(f"in: no results.csv at {src}")
    report(src, args.out)
    return 0


def cmd_config(args) -> int:
    print(json.dumps(ExperimentConfig().to_dict(), indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="xfid", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("gen", help="generate one model (and dataset) per grid point")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("explain", help="explain one model and score the explanation")
    p.add_argument("--model", required=True)
    p.add_argument("--explainer", required=True, choices=EXPLAINERS)
    p.add_argument("--seed", type=int, required=True)
    p.add_argument("--exact-shap", action="store_true")
    p.add_argument("--data", help="dataset CSV; sampled from the seed if omitted")
    p.add_argument("--out", help="output directory (default: next to the model)")
    p.add_argument("--n-explain", type=int, default=100)
    p.add_argument("--timeout", type=float, default=120.0)
    p.set_defaults(func=cmd_explain)

    p = sub.add_parser("eval", help="score a saved explanation against ground truth")
    p.add_argument("--model", required=True)
    p.add_argument("--expl", required=True)
    p.add_argument("--data")
    p.add_argument("--out")
    p.set_defaults(func=cmd_eval)

    p = sub.add_parser("sweep", help="run a full experiment sweep")
    p.add_argument("--config", required=True)
    p.add_argument("--out", required=True)
    p.add_argument("--jobs", type=int, default=1)
    p.set_defaults(func=cmd_sweep)

    p = sub.add_parser("report", help="aggregate results.csv per explainer and grid cell")
    p.add_argument("--in", dest="input", required=True)
    p.add_argument("--out", required=True)
    p.set_defaults(func=cmd_report)

    p = sub.add_parser("config", help="print configuration defaults")
    p.add_argument("--defaults", action="store_true", required=True)
    p.set_defaults(func=cmd_config)
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except ConfigInvalid as exc:
        print(f"xfid: invalid input: {exc}", file=sys.stderr)
        return EXIT_CODES["config_invalid"]
    except XfidError as exc:
        print(f"xfid: {exc}", file=sys.stderr)
        return EXIT_CODES["explain_failed"]


if __name__ == "__main__":
    sys.exit(main())
