"""Descriptive statistics, correlations, and the critical-distance diagnostic."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import pandas as pd

from ..errors import SpecError, ZeroVariance
from ..measures import MeasureTable
from ..netcore import DyadPanel
from . import variables

SUMMARY_VARIABLES = (
    "trade", "cc", "gdp_o", "gdp_d", "pop_o", "pop_d",
    "contig", "comlang", "colony", "smctry", "dist", "rta", "asean_china_o",
    "spl", "spl_inv", "cmb", "diff", "diff_inv",
)

DEFAULT_CORRELATION_VARIABLES = (
    "ln_trade", "ln_CC", "ln_CC_inv", "ln_gdp_o", "ln_gdp_d", "ln_pop_o",
    "ln_pop_d", "comlang", "contig", "smctry", "colony", "ln_dist", "rta",
    "ln_cmb", "ln_spl", "ln_spl_inv", "asean_china_o",
)


def summarize(panel: DyadPanel, measures: MeasureTable) -> pd.DataFrame:
    """Per-variable n/mean/sd/min/max over the joined dyad table."""
    table = variables.dyad_table(panel, measures)
    rows = []
    for name in SUMMARY_VARIABLES:
        col = table[name].to_numpy(dtype=float)
        col = col[np.isfinite(col)]
        if len(col) == 0:
            rows.append((name, 0, math.nan, math.nan, math.nan, math.nan))
            continue
        sd = float(np.std(col, ddof=1)) if len(col) > 1 else 0.0
        rows.append((name, len(col), float(col.mean()), sd,
                     float(col.min()), float(col.max())))
    return pd.DataFrame(rows, columns=["variable", "n", "mean", "sd", "min", "max"])


def correlations(panel: DyadPanel, measures: MeasureTable,
                 variable_names: list[str] | None = None) -> pd.DataFrame:
    """Pairwise-complete Pearson correlations of transformed variables."""
    names = list(variable_names or DEFAULT_CORRELATION_VARIABLES)
    if len(names) < 2:
        raise SpecError("correlations need at least two variables")
    table = variables.dyad_table(panel, measures)
    cols = {}
    for name in names:
        resolved, col = variables.resolve_term(name, table)
        cols[name] = col

    k = len(names)
    out = np.eye(k)
    for a in range(k):
        for b in range(a + 1, k):
            x, y = cols[names[a]], cols[names[b]]
            complete = np.isfinite(x) & np.isfinite(y)
            xs, ys = x[complete], y[complete]
            if len(xs) < 2:
                raise ZeroVariance(
                    f"fewer than two complete pairs for {names[a]} vs {names[b]}")
            if np.ptp(xs) == 0.0 or np.ptp(ys) == 0.0:
                constant = names[a] if np.ptp(xs) == 0.0 else names[b]
                raise ZeroVariance(f"variable {constant!r} is constant on the "
                                   f"complete pairs with {names[b] if constant == names[a] else names[a]!r}")
            out[a, b] = out[b, a] = float(np.corrcoef(xs, ys)[0, 1])
    return pd.DataFrame(out, index=names, columns=names)


@dataclass(frozen=True)
class NoCriticalValue:
    """Typed diagnostic: the interaction admits no interior sign change."""

    reason: str


def critical_distance(beta_main: float, beta_inter: float) -> float | NoCriticalValue:
    """Distance (km) where the marginal effect beta_main + beta_inter*ln(dist)
    crosses zero.

    Requires a nonzero interaction coefficient of the opposite sign to the
    main effect; otherwise the crossing sits at or below 1 km and a
    :class:`NoCriticalValue` diagnostic is returned instead of a number.
    """
    if beta_inter == 0:
        return NoCriticalValue("interaction coefficient is zero")
    ratio = -beta_main / beta_inter
    if ratio <= 0:
        return NoCriticalValue(
            "coefficients share a sign: the marginal effect does not cross "
            "zero at any distance above 1 km")
    return math.exp(ratio)
