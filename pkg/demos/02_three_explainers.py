"""
Scoring PDP, LIME and KernelSHAP against the ground truth
==========================================================

"""

import numpy as np

from xfid import GenParams, explain_ground_truth, generate_model, sample_dataset
from xfid.harness import evaluate, run_explainer

data = sample_dataset(d=5, seed=3)
model = generate_model(GenParams(d=5, pct_nonlinear=0.75, pct_interact=0.5,
                                 order_interact=2, seed=3), data=data.X)
gt = explain_ground_truth(model, data)
print("F(x) =", model)

rows = np.arange(0, data.n, data.n // 40)  # 40 explained points

opts = {
    "pdp": {"grid_size": 100},
    "lime": {"num_samples": 5000, "ridge": 1.0, "kernel_width": None},
    "shap": {"background_k": 100, "mode": "auto", "nsamples": None, "exact_max_d": 12},
}

# Every explainer returns per-feature effects. Matching groups them with the
# model's effects (an interaction pulls its features into one group) and the
# scores compare group sums point by point.
for name, o in opts.items():
    expl = run_explainer(name, model, data, rows, seed=1, opts=o)
    match, m = evaluate(model, expl, gt, data)
    groups = [(g.model, g.explainer) for g in match.groups]
    print(f"{name:5s} groups={groups}")
    print(f"      MaIoU={m['maiou']:.3f} cosine={m['mean_cosine']:.4f} "
          f"euclid={m['mean_euclidean']:.4f} rmse={m['explainer_rmse']:.4f}")
