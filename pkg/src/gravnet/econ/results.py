"""Estimator output container and significance stars."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.special import ndtr

STAR_THRESHOLDS = ((0.01, "***"), (0.05, "**"), (0.10, "*"))


def stars_for(p: float) -> str:
    for cut, sym in STAR_THRESHOLDS:
        if p < cut:
            return sym
    return ""


@dataclass
class FitResult:
    """Coefficients, covariance, and per-coefficient inference.

    p-values use the standard-normal reference, two-sided.  ``extras`` holds
    estimator-specific blocks (first stage, lambda row, inflation equation,
    per-equation system blocks, residual covariance).
    """

    estimator: str
    names: list[str]
    coef: np.ndarray
    cov: np.ndarray
    n_obs: int
    loglik: float | None = None
    extras: dict = field(default_factory=dict)

    def __post_init__(self):
        self.coef = np.asarray(self.coef, dtype=float)
        cov = np.asarray(self.cov, dtype=float)
        self.cov = (cov + cov.T) / 2.0  # enforce exact symmetry

    @property
    def se(self) -> np.ndarray:
        return np.sqrt(np.maximum(np.diag(self.cov), 0.0))

    @property
    def z(self) -> np.ndarray:
        se = self.se
        with np.errstate(divide="ignore", invalid="ignore"):
            z = np.where(se > 0, self.coef / np.where(se > 0, se, 1.0),
                         np.where(self.coef == 0, 0.0, np.inf * np.sign(self.coef)))
        return z

    @property
    def p(self) -> np.ndarray:
        return 2.0 * ndtr(-np.abs(self.z))

    @property
    def stars(self) -> list[str]:
        return [stars_for(pv) for pv in self.p]

    def coef_by_name(self) -> dict[str, float]:
        return dict(zip(self.names, self.coef))

    def se_by_name(self) -> dict[str, float]:
        return dict(zip(self.names, self.se))
