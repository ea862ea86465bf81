"""Gaussian mixture fitting (VB and EM) with Bayesian model-order selection."""

from .datagen import LabeledDataset, SynthConfig, sample_dirichlet, sample_synthetic, sample_wishart
from .densities import log_dirichlet_pdf, log_mvn_pdf, log_wishart_pdf, spd_factor_logdet
from .em import GmmParams, em_fit, log_likelihood
from .selection import (
    CriterionCurve,
    EmConfig,
    FitConfig,
    ModelOrderPosterior,
    aic_bic_curve,
    count_free_params,
    hill_climb_order,
    korea_log_score,
    log_prior_k,
    model_order_posterior,
)
from .vb import (
    Hyperparams,
    ModePoint,
    VbState,
    elbo,
    extract_mode,
    init_state,
    log_joint_at_mode,
    log_q_at_mode,
    vb_fit,
    vb_step,
)

__version__ = "0.1.0"

__all__ = [
    "CriterionCurve",
    "EmConfig",
    "FitConfig",
    "GmmParams",
    "Hyperparams",
    "LabeledDataset",
    "ModePoint",
    "ModelOrderPosterior",
    "SynthConfig",
    "VbState",
    "aic_bic_curve",
    "count_free_params",
    "elbo",
    "em_fit",
    "extract_mode",
    "hill_climb_order",
    "init_state",
    "korea_log_score",
    "log_dirichlet_pdf",
    "log_joint_at_mode",
    "log_likelihood",
    "log_mvn_pdf",
    "log_prior_k",
    "log_q_at_mode",
    "log_wishart_pdf",
    "model_order_posterior",
    "sample_dirichlet",
    "sample_synthetic",
    "sample_wishart",
    "spd_factor_logdet",
    "vb_fit",
    "vb_step",
]
