"""Flexible Beta regression for responses bounded in (0, 1)."""

from fbreg.beta_math import (
    FBMeanParam,
    FlexibleBeta,
    LambdaRangeError,
    MeanPrecisionBeta,
    fb_mean,
    inv_logit,
    lambdas_from,
    log_beta_mp,
    log_fb_density,
    logit,
    omega_tilde_cap,
    sample_beta_mp,
    sample_fb,
)
from fbreg.model import (
    Allocation,
    Dataset,
    FBRParams,
    PriorConfig,
    log_prior,
    loglik,
    loglik_complete,
    mu_of,
    omega_tilde_of,
)

__version__ = "0.1.0"

__all__ = [
    "Allocation",
    "Dataset",
    "FBMeanParam",
    "FBRParams",
    "FlexibleBeta",
    "LambdaRangeError",
    "MeanPrecisionBeta",
    "PriorConfig",
    "fb_mean",
    "inv_logit",
    "lambdas_from",
    "log_beta_mp",
    "log_fb_density",
    "log_prior",
    "loglik",
    "loglik_complete",
    "logit",
    "mu_of",
    "omega_tilde_cap",
    "omega_tilde_of",
    "sample_beta_mp",
    "sample_fb",
]
