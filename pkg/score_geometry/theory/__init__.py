"""Linear DSM learning dynamics: mean-error decay rates and SGD noise."""

from .linear_dsm import (
    ErrorTrace,
    GradCovariance,
    LinearDsmConfig,
    closed_form_grad_cov_trace,
    fit_decay,
    gd_mean_trace,
    noisy_covariance,
    optimal_score,
    population_gradient,
    predicted_rate,
    sgd_simulate,
    stochastic_grad_covariance,
)

__all__ = [
    "ErrorTrace",
    "GradCovariance",
    "LinearDsmConfig",
    "closed_form_grad_cov_trace",
    "fit_decay",
    "gd_mean_trace",
    "noisy_covariance",
    "optimal_score",
    "population_gradient",
    "predicted_rate",
    "sgd_simulate",
    "stochastic_grad_covariance",
]
