"""Design-matrix construction and the gravity estimator suite."""

from .design import (
    DesignMatrix,
    build_design,
    fit_model,
    heckman,
    heckman_two_step,
    ols,
    ppml,
    zippml,
)
from .estimators import (
    inverse_mills,
    linear_fit,
    ppml_fit,
    probit_loglik,
    probit_mle,
    probit_score,
    zip_fit,
    zip_loglik,
    zip_score,
)
from .modelspec import EquationSpec, EquationSystem, ModelSpec, load_spec, parse_spec_text
from .results import FitResult, stars_for
from .stats import NoCriticalValue, correlations, critical_distance, summarize
from .system import reduced_form, three_sls

__all__ = [
    "DesignMatrix", "EquationSpec", "EquationSystem", "FitResult", "ModelSpec",
    "NoCriticalValue", "build_design", "correlations", "critical_distance",
    "fit_model", "heckman", "heckman_two_step", "inverse_mills", "linear_fit",
    "load_spec", "ols", "parse_spec_text", "ppml", "ppml_fit", "probit_loglik",
    "probit_mle", "probit_score", "reduced_form", "stars_for", "summarize",
    "three_sls", "zip_fit", "zip_loglik", "zip_score", "zippml",
]
