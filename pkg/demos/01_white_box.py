"""
Building a white box and reading off its exact contributions
=============================================================

"""

import numpy as np

from xfid import (GenParams, eval_model, explain_ground_truth, generate_model,
                  model_to_json, sample_dataset)

# Data first: the generator checks every effect is finite on it.
data = sample_dataset(d=4, seed=0)
print(data.n, "rows,", data.d, "features")

params = GenParams(d=4, n_dummy=1, pct_nonlinear=1.0, pct_interact=0.5,
                   order_interact=2, seed=11)
model = generate_model(params, data=data.X)
print("F(x) =", model)
print("dummy features:", model.dummy_features)

# Each effect is evaluated on its own; their sum is the model output, bit for bit.
gt = explain_ground_truth(model, data)
for feats, c, e in zip(gt.effects, gt.contributions[:, :3], gt.expected):
    print(feats, np.round(c, 4), "mean", round(float(e), 4))

assert np.array_equal(gt.total, eval_model(model, data.X))

# Models serialize to a canonical prefix-notation JSON document.
print(model_to_json(model))
