"""Joined dyad table and the regression variable vocabulary.

``dyad_table`` merges a panel with a measure table and materializes all
transformed columns used by the estimators, with NaN wherever a value is
undefined (zero trade for ln_trade, unreachable pair for ln_spl, ...).
``resolve_term`` turns a spec term (base name, sector dummy, or ``a:b``
interaction) into a column.
"""

from __future__ import annotations

import numpy as np
import pandas as pd

from ..errors import ConfigInvalid, SpecError
from ..measures import MeasureTable
from ..netcore import DyadPanel
from .modelspec import interaction_parts, rewrite_term

# Columns whose NaN means "network measure undefined" (vs. missing covariate).
MEASURE_COLUMNS = ("spl", "spl_inv", "cmb", "diff", "diff_inv",
                   "ln_spl", "ln_spl_inv", "ln_cmb", "ln_diff", "ln_diff_inv")
# Log transforms where NaN may stem from a nonpositive raw value.
LOG_OF_RAW = {"ln_gdp_o": "gdp_o", "ln_gdp_d": "gdp_d",
              "ln_pop_o": "pop_o", "ln_pop_d": "pop_d", "ln_dist": "dist"}

BASE_TERMS = (
    "trade", "cc", "cc_inv", "gdp_o", "gdp_d", "pop_o", "pop_d", "dist",
    "contig", "colony", "smctry", "comlang", "rta", "asean_china_o",
    "spl", "spl_inv", "cmb", "diff", "diff_inv",
    "ln_trade", "ln_CC", "ln_CC_inv", "ln_spl", "ln_spl_inv", "ln_cmb",
    "ln_diff", "ln_diff_inv", "ln_gdp_o", "ln_gdp_d", "ln_pop_o", "ln_pop_d",
    "ln_dist",
)

DUMMY_TERMS = ("contig", "colony", "smctry", "comlang", "rta", "asean_china_o")


def _safe_log(values: np.ndarray) -> np.ndarray:
    with np.errstate(divide="ignore", invalid="ignore"):
        return np.where(values > 0, np.log(np.where(values > 0, values, 1.0)), np.nan)


def dyad_table(panel: DyadPanel, measures: MeasureTable,
               log_policy: str = "shift1") -> pd.DataFrame:
    """Panel rows joined with measures plus all transformed columns."""
    frame = panel.frame.copy()
    index = measures.registry.index
    missing_codes = [c for c in panel.codes() if c not in index]
    if missing_codes:
        raise ConfigInvalid(
            f"measure table does not cover panel countries: {', '.join(missing_codes[:5])}")

    oi = frame["origin"].map(index).to_numpy()
    di = frame["dest"].map(index).to_numpy()
    frame["spl"] = measures.spl[oi, di]
    frame["spl_inv"] = measures.spl_inv[oi, di]
    frame["cmb"] = measures.cmb[oi, di]
    frame["diff"] = measures.diff[oi, di]
    frame["diff_inv"] = measures.diff_inv[oi, di]

    cc_map = panel.dyad_cc()
    frame["cc_inv"] = [cc_map.get((d, o), 0.0) for o, d in zip(frame["origin"], frame["dest"])]

    trade = frame["trade"].to_numpy()
    frame["ln_trade"] = _safe_log(trade)
    if log_policy == "shift1":
        frame["ln_CC"] = np.log1p(frame["cc"].to_numpy())
        frame["ln_CC_inv"] = np.log1p(frame["cc_inv"].to_numpy())
    elif log_policy == "drop_zeros":
        frame["ln_CC"] = _safe_log(frame["cc"].to_numpy())
        frame["ln_CC_inv"] = _safe_log(frame["cc_inv"].to_numpy())
    else:
        raise SpecError(f"unknown log_policy {log_policy!r}")
    frame["ln_spl"] = _safe_log(frame["spl"].to_numpy())
    frame["ln_spl_inv"] = _safe_log(frame["spl_inv"].to_numpy())
    frame["ln_cmb"] = _safe_log(frame["cmb"].to_numpy())
    frame["ln_diff"] = np.log1p(frame["diff"].to_numpy())
    frame["ln_diff_inv"] = np.log1p(frame["diff_inv"].to_numpy())
    for ln_col, raw in LOG_OF_RAW.items():
        frame[ln_col] = _safe_log(frame[raw].to_numpy())
    return frame


def resolve_term(term: str, table: pd.DataFrame, direction: str = "same"
                 ) -> tuple[str, np.ndarray]:
    """Resolve a spec term to (resolved name, column values)."""
    term = rewrite_term(term, direction)
    parts = interaction_parts(term)
    if len(parts) == 2:
        name_a, col_a = resolve_term(parts[0], table, "same")
        name_b, col_b = resolve_term(parts[1], table, "same")
        return f"{name_a}:{name_b}", col_a * col_b
    if term.startswith("sector_"):
        if "sector" not in table.columns:
            raise SpecError(f"term {term!r} needs a sector column in the panel")
        label = term[len("sector_"):]
        return term, (table["sector"].astype(str) == label).to_numpy(dtype=float)
    if term in table.columns and term in BASE_TERMS:
        return term, table[term].to_numpy(dtype=float)
    raise SpecError(f"unknown regressor term {term!r}")


def is_dummy_term(name: str) -> bool:
    parts = interaction_parts(name)
    return all(p in DUMMY_TERMS or p.startswith("sector_") for p in parts)
