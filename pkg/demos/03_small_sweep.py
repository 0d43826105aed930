"""
A small sweep, end to end
=========================

Same thing as ``xfid sweep`` followed by ``xfid report``.
"""

import tempfile
from pathlib import Path

from xfid.harness import ExperimentConfig, read_rows, report, run_sweep

config = ExperimentConfig.from_dict({
    "grid": {"d": [4], "n_dummy": [0], "pct_nonlinear": [0.75],
             "pct_interact": [0, 0.333], "order_interact": [1, 2, 3]},
    "seed": 1, "models_per_cell": 3, "n_explain": 20,
})

out = Path(tempfile.mkdtemp(prefix="xfid_"))
results = run_sweep(config, out)
print("per-model rows:", len(read_rows(results)))

summary = report(results, out / "summary.csv")
for row in summary:
    print(f"{row['explainer']:5s} order={row['order_interact']} "
          f"cosine={row['mean_cosine']:.4f} rho_perf={row['rho_perf']}")
print("artifacts in", out)
