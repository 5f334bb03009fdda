"""Causal maximum-entropy merging of single-variable predictors."""

from .anticausal import (
    AnticausalModel,
    anticausal_posterior,
    fit_anticausal,
    fit_anticausal_missing_phi2,
    fit_anticausal_missing_s12,
)
from .causal import (
    CausalModel,
    GaussianParams,
    causal_posterior,
    fit_causal,
    fit_causal_missing_phi2,
    fit_causal_missing_s12,
)
from .combined import BlockMoments, CombinedModel, combined_posterior, fit_combined
from .errors import CmaxentError, ConvergenceError, DataError, InfeasibleError, QuadratureError
from .moments import MomentSpec, SampleSet, center, estimate_moments, validate

__version__ = "0.1.0"

__all__ = [
    "AnticausalModel", "BlockMoments", "CausalModel", "CmaxentError", "CombinedModel",
    "ConvergenceError", "DataError", "GaussianParams", "InfeasibleError", "MomentSpec",
    "QuadratureError", "SampleSet", "anticausal_posterior", "causal_posterior", "center",
    "combined_posterior", "estimate_moments", "fit_anticausal", "fit_anticausal_missing_phi2",
    "fit_anticausal_missing_s12", "fit_causal", "fit_causal_missing_phi2",
    "fit_causal_missing_s12", "fit_combined", "validate",
]
