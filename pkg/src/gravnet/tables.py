"""Rendering of fit results: machine CSV and paper-style aligned tables."""

from __future__ import annotations

import numpy as np

from .econ.results import FitResult

FIT_CSV_HEADER = "term,coef,se,z,p,stars"


def _num(x) -> str:
    """Shortest round-trip representation for the machine CSV."""
    v = float(x)
    if np.isnan(v):
        return ""
    return repr(v)


def _fit_rows(fit: FitResult, prefix: str = ""):
    rows = []
    se, z, p, stars = fit.se, fit.z, fit.p, fit.stars
    for i, name in enumerate(fit.names):
        rows.append((prefix + name, fit.coef[i], se[i], z[i], p[i], stars[i]))
    return rows


def fit_blocks(fit: FitResult) -> list[tuple[str, list[tuple]]]:
    """(title, rows) blocks in the paper's visual order."""
    est = fit.estimator
    if est in ("threesls", "reduced_form"):
        blocks = []
        for block in fit.extras["equations"]:
            dep = block.extras.get("dependent", "y")
            blocks.append((f"{dep} (Dep. Var.)", _fit_rows(block)))
        return blocks

    dep = fit.extras.get("dependent", "y")
    blocks = [(f"{dep} (Dep. Var.)", _fit_rows(fit))]
    if est == "heckman2s":
        first = fit.extras["first_stage"]
        rows = _fit_rows(first, prefix="select:")
        lam, lam_se = fit.extras["lambda_coef"], fit.extras["lambda_se"]
        if lam_se > 0:
            lam_z = lam / lam_se
            lam_p = float(2.0 * (1.0 - _phi(abs(lam_z))))
        else:
            lam_z, lam_p = np.inf * np.sign(lam), 0.0
        from .econ.results import stars_for
        rows.append(("lambda", lam, lam_se, lam_z, lam_p, stars_for(lam_p)))
        blocks.append(("trade_dummy (Dep. Var.)", rows))
    elif est == "zippml":
        inflation = fit.extras["inflation"]
        blocks.append(("trade_dummy (Dep. Var.)", _fit_rows(inflation, prefix="inflate:")))
    return blocks


def _phi(x: float) -> float:
    from scipy.special import ndtr
    return float(ndtr(x))


def write_fit_csv(fit: FitResult, fh) -> None:
    fh.write(FIT_CSV_HEADER + "\n")
    for _, rows in fit_blocks(fit):
        for term, coef, se, z, p, stars in rows:
            fh.write(f"{term},{_num(coef)},{_num(se)},{_num(z)},{_num(p)},{stars}\n")
    fh.write(f"N,{fit.n_obs},,,,\n")


def _fmt(x: float) -> str:
    return f"{x:.6g}"


def render_fit_table(fit: FitResult) -> str:
    """Fixed-width table: coefficient with stars over the parenthesized SE,
    sample size as the final row."""
    blocks = fit_blocks(fit)
    label_width = max(
        [len(term) for _, rows in blocks for term, *_ in rows] + [len(t) for t, _ in blocks] + [1]
    )
    value_width = 14
    lines = []
    for title, rows in blocks:
        lines.append(title)
        for term, coef, se, _z, _p, stars in rows:
            value = f"{_fmt(coef)} {stars}".rstrip()
            lines.append(f"{term:<{label_width}}  {value:>{value_width}}")
            lines.append(f"{'':<{label_width}}  {f'({_fmt(se)})':>{value_width}}")
        lines.append("")
    lines.append(f"{'N':<{label_width}}  {fit.n_obs:>{value_width}}")
    return "\n".join(lines) + "\n"


def write_summary_csv(frame, fh) -> None:
    """Descriptive-statistics table as CSV with round-trip floats."""
    fh.write(",".join(frame.columns) + "\n")
    for rec in frame.itertuples(index=False):
        cells = []
        for value in rec:
            if isinstance(value, str):
                cells.append(value)
            elif float(value) == int(value) and abs(float(value)) < 1e15 and not np.isnan(value):
                cells.append(str(int(value)))
            else:
                cells.append(_num(value))
        fh.write(",".join(cells) + "\n")


def write_matrix_csv(frame, fh) -> None:
    """Square labelled matrix (e.g. correlations) as CSV."""
    fh.write("variable," + ",".join(frame.columns) + "\n")
    for name, row in zip(frame.index, frame.to_numpy()):
        fh.write(name + "," + ",".join(_num(v) for v in row) + "\n")


def render_matrix(frame) -> str:
    width = max(len(str(c)) for c in frame.columns) + 2
    width = max(width, 10)
    head = " " * width + "".join(f"{c:>{width}}" for c in frame.columns)
    lines = [head]
    for name, row in zip(frame.index, frame.to_numpy()):
        lines.append(f"{name:<{width}}" + "".join(f"{v:>{width}.3f}" for v in row))
    return "\n".join(lines) + "\n"
