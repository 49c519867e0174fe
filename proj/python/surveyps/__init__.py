"""Survey-weighted propensity score weighting and augmented estimators."""

from ._core import (
    SurveyPSError,
    balance,
    estimate,
    estimate_report,
    fit_propensity,
    simulate,
)

__all__ = ["SurveyPSError", "balance", "estimate", "estimate_report", "fit_propensity", "simulate"]
