"""Reference feature-additive explainers with black-box access only."""
from .base import (KINDS, PD_VALUES, SHAPLEY, SURROGATE, ExplainerExplanation,
                   singleton_effects)
from .kernelshap import explain_kernelshap
from .lime import explain_lime
from .pdp import explain_pdp, interp_extrap, pd_at, pd_curves
from .solvers import weighted_least_squares

__all__ = [
    "ExplainerExplanation", "KINDS", "SURROGATE", "SHAPLEY", "PD_VALUES",
    "singleton_effects", "weighted_least_squares", "explain_pdp", "explain_lime",
    "explain_kernelshap", "pd_curves", "pd_at", "interp_extrap",
]
