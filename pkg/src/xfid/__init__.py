"""Ground-truth testbed for feature-additive post hoc explainers."""
from .alignment import MatchGroup, MatchResult, maiou, match_effects
from .dataset import Dataset, kmeans, sample_dataset, summarize_background
from .equivalence import (AdjustedExplanation, adjust, coefficients_to_contributions,
                          lime_unnormalize, pdp_center, shap_add_expectation,
                          zero_tolerance_filter)
from .errors import *  # noqa: F401,F403
from .explainers import (ExplainerExplanation, explain_kernelshap, explain_lime,
                         explain_pdp, weighted_least_squares)
from .expr import (AdditiveModel, Apply, Const, Effect, Leaf, eval_expr, eval_model,
                   linear_model, model_from_json, model_to_json, validate_domain)
from .generate import GenParams, generate_model, parameter_grid
from .ground_truth import GroundTruthExplanation, explain_ground_truth
from .metrics import (MetricsRecord, aggregate, cosine_distance, euclidean_distance,
                      nrmse, spearman_rho)

__version__ = "0.1.0"
