"""Simultaneous-equation estimation: 3SLS and the reduced form."""

from __future__ import annotations

import numpy as np
import scipy.linalg

from ..errors import EmptySample, RankDeficient, SpecError, UnderIdentified
from ..measures import MeasureTable
from ..netcore import DyadPanel
from . import variables
from .estimators import linear_fit
from .modelspec import EquationSystem, interaction_parts
from .results import FitResult


def _system_data(system: EquationSystem, panel: DyadPanel, measures: MeasureTable):
    """Joint listwise sample, per-equation designs, and the instrument matrix."""
    system.validate()
    if system.alpha != measures.alpha:
        raise SpecError(f"system alpha {system.alpha} does not match measure table "
                        f"alpha {measures.alpha}")
    table = variables.dyad_table(panel, measures, system.log_policy)
    if system.filters:
        from .design import _apply_filters
        table = table.loc[_apply_filters(table, system.filters)].reset_index(drop=True)

    endo = set(system.endogenous)
    all_terms = list(dict.fromkeys(
        system.endogenous
        + [t for eq in system.equations for t in eq.regressors]
    ))
    cols = {}
    for term in all_terms:
        name, col = variables.resolve_term(term, table, system.direction)
        cols[term] = col

    finite = np.ones(len(table), dtype=bool)
    for col in cols.values():
        finite &= np.isfinite(col)
    n = int(finite.sum())
    if n == 0:
        raise EmptySample("no rows left after listwise deletion")
    cols = {t: c[finite] for t, c in cols.items()}

    exog_terms = system.exogenous_terms()
    instruments = np.column_stack([np.ones(n)] + [cols[t] for t in exog_terms])
    inst_names = ["const"] + exog_terms
    if np.linalg.matrix_rank(instruments) < instruments.shape[1]:
        raise RankDeficient(f"instrument set is rank deficient: {', '.join(inst_names)}")

    designs = []
    for eq in system.equations:
        names = ["const"] + eq.regressors
        X = np.column_stack([np.ones(n)] + [cols[t] for t in eq.regressors])
        endo_flags = [False] + [
            any(p in endo for p in interaction_parts(t)) for t in eq.regressors
        ]
        n_endog = sum(endo_flags)
        n_excluded = sum(1 for t in exog_terms if t not in eq.regressors)
        if n_endog > n_excluded:
            raise UnderIdentified(
                f"equation for {eq.dependent}: {n_endog} endogenous regressor(s) "
                f"but only {n_excluded} excluded instrument(s)")
        designs.append((eq.dependent, cols[eq.dependent], names, X))
    return designs, instruments, inst_names, n


def three_sls(system: EquationSystem, panel: DyadPanel, measures: MeasureTable,
              *, residual_cov: str = "estimated") -> FitResult:
    """Three-stage least squares for a declared equation system.

    Stage 1 projects every design on the full exogenous instrument set,
    stage 2 is 2SLS per equation, stage 3 estimates the cross-equation
    residual covariance from the 2SLS residuals and applies system GLS.
    ``residual_cov='identity'`` skips the GLS reweighting (then the result
    equals equation-by-equation 2SLS).
    """
    designs, W, inst_names, n = _system_data(system, panel, measures)
    G = len(designs)
    Q, _ = np.linalg.qr(W)

    fitted = []
    resid = np.empty((n, G))
    for g, (dep, y, names, X) in enumerate(designs):
        Xh = Q @ (Q.T @ X)
        beta, _ = _solve_sym(Xh.T @ Xh, Xh.T @ y, names, dep)
        resid[:, g] = y - X @ beta
        fitted.append(Xh)

    if residual_cov == "identity":
        sigma = np.eye(G)
    elif residual_cov == "estimated":
        sigma = resid.T @ resid / n
    else:
        raise SpecError(f"residual_cov must be 'estimated' or 'identity', got {residual_cov!r}")
    sigma_inv = np.linalg.inv(sigma)

    sizes = [d[3].shape[1] for d in designs]
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    K = offsets[-1]
    A = np.empty((K, K))
    b = np.empty(K)
    for g in range(G):
        sl_g = slice(offsets[g], offsets[g + 1])
        b[sl_g] = sum(sigma_inv[g, h] * fitted[g].T @ designs[h][1] for h in range(G))
        for h in range(G):
            A[sl_g, slice(offsets[h], offsets[h + 1])] = (
                sigma_inv[g, h] * fitted[g].T @ fitted[h])
    try:
        cov = np.linalg.inv(A)
    except np.linalg.LinAlgError:
        raise RankDeficient("singular system GLS matrix")
    theta = cov @ b

    names = [f"{dep}:{nm}" for dep, _, eq_names, _ in designs for nm in eq_names]
    result = FitResult("threesls", names, theta, cov, n_obs=n)
    blocks = []
    for g, (dep, y, eq_names, X) in enumerate(designs):
        sl = slice(offsets[g], offsets[g + 1])
        block = FitResult("threesls", list(eq_names), theta[sl], cov[sl, sl], n_obs=n)
        block.extras["dependent"] = dep
        blocks.append(block)
    result.extras.update({
        "equations": blocks,
        "residual_cov": sigma,
        "instruments": inst_names,
        "residual_cov_mode": residual_cov,
    })
    return result


def reduced_form(system: EquationSystem, panel: DyadPanel, measures: MeasureTable) -> FitResult:
    """OLS of each endogenous variable on the system's full exogenous set."""
    designs, W, inst_names, n = _system_data(system, panel, measures)
    dep_cols = {dep: y for dep, y, _, _ in designs}

    blocks = []
    coef_parts, names = [], []
    for dep in system.endogenous:
        if dep not in dep_cols:
            raise SpecError(f"endogenous variable {dep!r} is not an equation dependent")
        block = linear_fit(dep_cols[dep], W, inst_names, estimator="reduced_form")
        block.extras["dependent"] = dep
        blocks.append(block)
        coef_parts.append(block.coef)
        names.extend(f"{dep}:{nm}" for nm in inst_names)

    L = W.shape[1]
    cov = np.zeros((L * len(blocks), L * len(blocks)))
    for g, block in enumerate(blocks):
        cov[g * L:(g + 1) * L, g * L:(g + 1) * L] = block.cov
    result = FitResult("reduced_form", names, np.concatenate(coef_parts), cov, n_obs=n)
    result.extras.update({"equations": blocks, "instruments": inst_names})
    return result


def _solve_sym(A: np.ndarray, b: np.ndarray, names: list[str], dep: str):
    try:
        factor = scipy.linalg.cho_factor(A)
    except scipy.linalg.LinAlgError:
        raise RankDeficient(
            f"projected design for {dep} is rank deficient "
            f"(columns: {', '.join(names)})")
    solution = scipy.linalg.cho_solve(factor, b)
    return solution, factor
