"""Design-matrix construction and the estimator entry points."""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
import pandas as pd

from ..errors import EmptySample, RankDeficient, SpecError
from ..measures import MeasureTable
from ..netcore import DyadPanel
from . import variables
from .estimators import heckman_fit, linear_fit, ppml_fit, zip_fit
from .modelspec import EquationSystem, ModelSpec
from .results import FitResult


@dataclass
class DesignMatrix:
    """Aligned outcome/selection data for one model specification.

    ``X``/``Z`` contain no non-finite entries; ``ln_trade`` is NaN exactly
    on the d = 0 rows (zero trade), which only the selection stage uses.
    """

    spec: ModelSpec
    row_keys: list[tuple]
    names: list[str]
    X: np.ndarray
    sel_names: list[str]
    Z: np.ndarray
    d: np.ndarray
    trade: np.ndarray
    ln_trade: np.ndarray
    dropped: dict[str, int] = field(default_factory=dict)
    dropped_terms: list[str] = field(default_factory=list)

    @property
    def n_rows(self) -> int:
        return len(self.trade)


def _drop_reason(table: pd.DataFrame, row: int, cols: dict[str, np.ndarray]) -> str:
    for name, values in cols.items():
        if np.isfinite(values[row]):
            continue
        base = name.split(":")[0]
        if base in variables.MEASURE_COLUMNS:
            return "missing measure"
        raw = variables.LOG_OF_RAW.get(base)
        if raw is not None and np.isfinite(table[raw].to_numpy()[row]):
            return "log of nonpositive"
        return "missing covariate"
    return "missing covariate"


def _apply_filters(table: pd.DataFrame, filters: dict[str, str]) -> np.ndarray:
    mask = np.ones(len(table), dtype=bool)
    for col, value in filters.items():
        if col not in table.columns:
            raise SpecError(f"filter column {col!r} not in panel")
        series = table[col]
        if series.dtype == object:
            mask &= (series.astype(str) == value).to_numpy()
        else:
            mask &= (series.to_numpy() == float(value))
    return mask


def build_design(panel: DyadPanel, measures: MeasureTable, spec: ModelSpec) -> DesignMatrix:
    """Transform, filter, and listwise-delete a panel into estimator inputs.

    Rows are dropped when any regressor or selection column is undefined;
    zero-trade rows are retained (they populate the d = 0 side of the
    selection stage).  Degenerate dummy columns (constant after filtering)
    are dropped with a warning; remaining collinearity raises RankDeficient
    with the offending column names.
    """
    spec.validate()
    if spec.alpha != measures.alpha:
        raise SpecError(f"spec alpha {spec.alpha} does not match measure table "
                        f"alpha {measures.alpha}")
    table = variables.dyad_table(panel, measures, spec.log_policy)
    dropped: dict[str, int] = {}

    keep = _apply_filters(table, spec.filters)
    n_filtered = int((~keep).sum())
    if n_filtered:
        dropped["filter"] = n_filtered
    table = table.loc[keep].reset_index(drop=True)

    xcols: dict[str, np.ndarray] = {}
    for term in spec.regressors:
        name, col = variables.resolve_term(term, table, spec.direction)
        if name in xcols:
            raise SpecError(f"term {term!r} duplicates column {name!r} after "
                            f"direction rewriting")
        xcols[name] = col
    zcols: dict[str, np.ndarray] = {}
    for term in spec.selection:
        name, col = variables.resolve_term(term, table, spec.direction)
        zcols[name] = col

    trade = table["trade"].to_numpy(dtype=float)
    ln_trade = table["ln_trade"].to_numpy(dtype=float)

    used = {**xcols, **zcols}
    finite = np.ones(len(table), dtype=bool)
    for col in used.values():
        finite &= np.isfinite(col)
    finite &= np.isfinite(trade)
    for row in np.nonzero(~finite)[0]:
        reason = _drop_reason(table, int(row), used)
        dropped[reason] = dropped.get(reason, 0) + 1

    if not finite.any():
        raise EmptySample("no rows left after listwise deletion")

    def _materialize(cols: dict[str, np.ndarray], kind: str):
        names = ["const"] + list(cols)
        mat = np.column_stack([np.ones(int(finite.sum()))]
                              + [c[finite] for c in cols.values()])
        degenerate = []
        for idx, name in enumerate(names[1:], start=1):
            if variables.is_dummy_term(name) and np.ptp(mat[:, idx]) == 0.0:
                degenerate.append(name)
        if degenerate:
            warnings.warn(f"dropping degenerate dummy column(s) in {kind}: "
                          f"{', '.join(degenerate)}", stacklevel=3)
            keep_idx = [i for i, nm in enumerate(names) if nm not in degenerate]
            mat = mat[:, keep_idx]
            names = [names[i] for i in keep_idx]
        return names, mat, degenerate

    names, X, deg_x = _materialize(xcols, "regressors")
    sel_names, Z, deg_z = _materialize(zcols, "selection")
    _check_rank(X, names, "regressors")
    _check_rank(Z, sel_names, "selection")

    if panel.has_sector:
        keys = list(zip(table["origin"][finite], table["dest"][finite],
                        table["sector"][finite]))
    else:
        keys = list(zip(table["origin"][finite], table["dest"][finite]))
    return DesignMatrix(
        spec=spec, row_keys=keys, names=names, X=X,
        sel_names=sel_names, Z=Z,
        d=trade[finite] > 0, trade=trade[finite], ln_trade=ln_trade[finite],
        dropped=dropped, dropped_terms=deg_x + deg_z,
    )


def _check_rank(M: np.ndarray, names: list[str], kind: str) -> None:
    if M.shape[0] == 0:
        raise EmptySample(f"no rows for {kind}")
    rank = np.linalg.matrix_rank(M)
    if rank < M.shape[1]:
        # name a minimal-ish culprit set: columns whose removal restores rank
        suspects = [nm for i, nm in enumerate(names)
                    if np.linalg.matrix_rank(np.delete(M, i, axis=1)) == rank]
        raise RankDeficient(f"{kind} design is rank deficient; collinear "
                            f"column set: {', '.join(suspects or names)}")


# --- estimator entry points ----------------------------------------------------

def ols(dm: DesignMatrix) -> FitResult:
    """OLS of ln_trade on the regressors over the positive-trade rows."""
    if not dm.d.any():
        raise EmptySample("no positive-trade rows")
    fit = linear_fit(dm.ln_trade[dm.d], dm.X[dm.d], dm.names)
    fit.extras["dependent"] = "ln_trade"
    fit.extras["dropped"] = dm.dropped
    return fit


def ppml(dm: DesignMatrix) -> FitResult:
    """Poisson pseudo-ML of trade in levels (zeros retained)."""
    fit = ppml_fit(dm.trade, dm.X, dm.names)
    fit.extras["dependent"] = "trade"
    fit.extras["dropped"] = dm.dropped
    return fit


def zippml(dm: DesignMatrix) -> FitResult:
    """Zero-inflated Poisson pseudo-ML; inflation equation on the selection design."""
    fit = zip_fit(dm.trade, dm.X, dm.Z, dm.names, dm.sel_names)
    fit.extras["dependent"] = "trade"
    fit.extras["dropped"] = dm.dropped
    return fit


def heckman(dm: DesignMatrix) -> FitResult:
    """Heckman two-step on a prepared design matrix."""
    fit = heckman_fit(dm.ln_trade, dm.X, dm.d, dm.Z, dm.names, dm.sel_names)
    fit.extras["dependent"] = "ln_trade"
    fit.extras["dropped"] = dm.dropped
    return fit


def heckman_two_step(panel: DyadPanel, measures: MeasureTable, spec: ModelSpec) -> FitResult:
    """Probit selection stage over all dyads, corrected OLS over positive flows."""
    return heckman(build_design(panel, measures, spec))


def fit_model(panel: DyadPanel, measures: MeasureTable,
              spec: ModelSpec | EquationSystem) -> FitResult:
    """Dispatch a parsed model spec to its estimator."""
    if isinstance(spec, EquationSystem):
        from .system import reduced_form, three_sls
        if spec.estimator == "threesls":
            return three_sls(spec, panel, measures)
        return reduced_form(spec, panel, measures)
    dispatch = {"ols": ols, "ppml": ppml, "zippml": zippml, "heckman2s": heckman}
    if spec.estimator not in dispatch:
        raise SpecError(f"unknown estimator {spec.estimator!r}")
    return dispatch[spec.estimator](build_design(panel, measures, spec))
