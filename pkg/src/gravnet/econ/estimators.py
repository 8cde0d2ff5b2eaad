"""Estimator kernels: OLS, probit MLE, Heckman two-step, PPML, and ZIP.

All solvers are deterministic: fixed initialization (zeros for the probit
and the ZIP inflation equation, OLS on ln(1+y) for the Poisson mean), no
randomized steps.  Kernels operate on plain arrays; the design-matrix
wrappers live in :mod:`gravnet.econ.design`.
"""

from __future__ import annotations

import math

import numpy as np
import scipy.linalg
from scipy.special import expit, gammaln, log_ndtr, ndtr

from ..errors import (
    EmptySample,
    NegativeValue,
    NotConverged,
    NoZeros,
    RankDeficient,
    Separation,
)
from .results import FitResult

PROBIT_GRAD_TOL = 1e-10
PROBIT_MAX_ITER = 100
PROBIT_DIVERGENCE = 1e6
PPML_COEF_TOL = 1e-10
PPML_MAX_ITER = 100
ZIP_LOGLIK_TOL = 1e-8
ZIP_MAX_ITER = 500

_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def _norm_pdf(v):
    return np.exp(-0.5 * v * v - _LOG_SQRT_2PI)


class _Standardizer:
    """Internal column standardization for iterative solvers.

    Centers (when an intercept-like constant column exists) and scales the
    non-constant columns, which keeps Newton/IRLS systems well conditioned on
    gravity-scale data.  Coefficients map back exactly through a fixed linear
    transform, so the reported estimates are in the original parameterization.
    """

    def __init__(self, M: np.ndarray):
        n, k = M.shape
        ptp = M.max(axis=0) - M.min(axis=0) if n else np.zeros(k)
        const_cols = [j for j in np.nonzero(ptp == 0)[0] if M[0, j] != 0]
        self.const_col = int(const_cols[0]) if const_cols else None
        self.const_value = M[0, self.const_col] if const_cols else 1.0
        self.center = np.zeros(k)
        self.scale = np.ones(k)
        for j in range(k):
            if ptp[j] == 0:
                continue
            if self.const_col is not None:
                self.center[j] = M[:, j].mean()
            sd = M[:, j].std()
            if sd > 0:
                self.scale[j] = sd
        self.transformed = (M - self.center) / self.scale

    def _shift_weights(self) -> np.ndarray:
        w = self.center / self.scale
        if self.const_col is not None:
            w[self.const_col] = 0.0
        return w

    def map_back(self, coef: np.ndarray) -> np.ndarray:
        out = coef / self.scale
        if self.const_col is not None:
            c = self.const_col
            out[c] = coef[c] - float(self._shift_weights() @ coef) / self.const_value
        return out

    def map_forward(self, coef: np.ndarray) -> np.ndarray:
        out = coef * self.scale
        if self.const_col is not None:
            c = self.const_col
            out[c] = coef[c] + float(self.center @ coef) / self.const_value
        return out


# --- linear least squares -----------------------------------------------------

def _solve_ls(X: np.ndarray, y: np.ndarray, names: list[str]):
    """Pivoted-QR least squares with a rank check naming collinear columns.

    Returns (beta, xtx_inv).
    """
    n, k = X.shape
    Q, R, piv = scipy.linalg.qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(R))
    tol = diag[0] * max(n, k) * np.finfo(float).eps if diag.size else 0.0
    rank = int(np.sum(diag > tol))
    if rank < k:
        bad = [names[p] for p in piv[rank:]]
        raise RankDeficient(f"collinear column set: {', '.join(bad)}")
    beta_piv = scipy.linalg.solve_triangular(R, Q.T @ y)
    rinv = scipy.linalg.solve_triangular(R, np.eye(k))
    xtx_inv_piv = rinv @ rinv.T
    beta = np.empty(k)
    beta[piv] = beta_piv
    xtx_inv = np.empty((k, k))
    xtx_inv[np.ix_(piv, piv)] = xtx_inv_piv
    return beta, xtx_inv


def linear_fit(y: np.ndarray, X: np.ndarray, names: list[str],
               estimator: str = "ols") -> FitResult:
    """OLS with the classical covariance s^2 (X'X)^-1."""
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    n, k = X.shape
    if n == 0:
        raise EmptySample("no observations")
    if n <= k:
        raise EmptySample(f"need more observations ({n}) than parameters ({k})")
    beta, xtx_inv = _solve_ls(X, y, names)
    resid = y - X @ beta
    rss = float(resid @ resid)
    s2 = rss / (n - k)
    cov = s2 * xtx_inv
    return FitResult(estimator, list(names), beta, cov, n_obs=n,
                     extras={"rss": rss, "sigma2": s2})


# --- probit ---------------------------------------------------------------------

def probit_loglik(gamma: np.ndarray, d: np.ndarray, Z: np.ndarray) -> float:
    eta = Z @ gamma
    return float(d @ log_ndtr(eta) + (1.0 - d) @ log_ndtr(-eta))


def _fsum_columns(M: np.ndarray, s: np.ndarray) -> np.ndarray:
    """Column sums of M * s with exact (compensated) accumulation."""
    terms = M * s[:, None]
    return np.array([math.fsum(terms[:, j]) for j in range(M.shape[1])])


def probit_score(gamma: np.ndarray, d: np.ndarray, Z: np.ndarray) -> np.ndarray:
    # exact accumulation keeps the score's noise floor far below the 1e-10
    # convergence tolerance even on large uncentered designs
    eta = Z @ gamma
    s = d * inverse_mills(eta) - (1.0 - d) * inverse_mills(-eta)
    return _fsum_columns(Z, s)


def probit_hessian(gamma: np.ndarray, d: np.ndarray, Z: np.ndarray) -> np.ndarray:
    eta = Z @ gamma
    m1 = inverse_mills(eta)
    m0 = inverse_mills(-eta)
    w = d * m1 * (m1 + eta) + (1.0 - d) * m0 * (m0 - eta)
    return -(Z.T * w) @ Z


def probit_mle(d: np.ndarray, Z: np.ndarray, names: list[str] | None = None) -> FitResult:
    """Probit MLE by Newton-Raphson with step-halving.

    Converged when the score's max-abs entry falls below 1e-10 within 100
    iterations; perfect separation is flagged when the coefficient norm
    diverges past 1e6.  Covariance is the inverse negative Hessian.
    """
    d = np.asarray(d, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if d.ndim != 1 or set(np.unique(d)) - {0.0, 1.0}:
        raise EmptySample("selection indicator must be a 0/1 vector")
    if d.min() == d.max():
        raise Separation("all observations fall in a single outcome class")
    n, q = Z.shape
    if names is None:
        names = [f"z{i}" for i in range(q)]

    std = _Standardizer(Z)
    Zt = std.transformed
    gamma_t = np.zeros(q)
    ll = probit_loglik(gamma_t, d, Zt)
    for _ in range(PROBIT_MAX_ITER):
        gamma = std.map_back(gamma_t)
        if np.max(np.abs(probit_score(gamma, d, Z))) < PROBIT_GRAD_TOL:
            break
        g = probit_score(gamma_t, d, Zt)
        H = probit_hessian(gamma_t, d, Zt)
        try:
            step = np.linalg.solve(-H, g)
        except np.linalg.LinAlgError:
            raise RankDeficient("singular Hessian in probit (collinear selection design)")
        # monotone up to the float rounding of the log-likelihood itself,
        # which sits at ~eps*|ll| once the score is near its noise floor
        slack = 64.0 * np.finfo(float).eps * (1.0 + abs(ll))
        t = 1.0
        for _ in range(60):
            candidate = gamma_t + t * step
            ll_new = probit_loglik(candidate, d, Zt)
            if ll_new >= ll - slack:
                break
            t /= 2.0
        else:
            raise NotConverged("probit step-halving failed to find an ascent step")
        gamma_t, ll = candidate, ll_new
        if np.max(np.abs(std.map_back(gamma_t))) > PROBIT_DIVERGENCE:
            raise Separation("diverging probit coefficients (perfect separation)")
    else:
        raise NotConverged(f"probit did not converge in {PROBIT_MAX_ITER} iterations")

    cov = np.linalg.inv(-probit_hessian(gamma, d, Z))
    return FitResult("probit", list(names), gamma, cov, n_obs=n, loglik=ll)


# --- inverse Mills ratio ---------------------------------------------------------

def inverse_mills(index) -> np.ndarray:
    """lambda(v) = phi(v) / Phi(v), stable in the deep lower tail.

    Below v = -30 the ratio is evaluated in log space via the asymptotic
    lower-tail expansion of log Phi, which avoids the 0/0 underflow of the
    direct quotient.
    """
    v = np.asarray(index, dtype=float)
    shape = v.shape
    v = np.atleast_1d(v).astype(float)
    out = np.empty_like(v)
    lower = v < -30.0
    safe = ~lower
    out[safe] = _norm_pdf(v[safe]) / ndtr(v[safe])
    if lower.any():
        vt = v[lower]
        out[lower] = np.exp(-0.5 * vt * vt - _LOG_SQRT_2PI - log_ndtr(vt))
    return out.reshape(shape) if shape else float(out[0])


# --- Heckman two-step -------------------------------------------------------------

def heckman_fit(y: np.ndarray, X: np.ndarray, d: np.ndarray, Z: np.ndarray,
                names: list[str], sel_names: list[str]) -> FitResult:
    """Two-step selection estimator with the full two-step covariance.

    Stage 1 is a probit of ``d`` on ``Z`` over all rows; stage 2 regresses
    ``y`` on ``X`` plus the inverse Mills ratio over the selected rows.  The
    covariance corrects for selection-induced heteroskedasticity and for the
    estimated first stage, so the lambda row carries a usable standard error.
    """
    d = np.asarray(d, dtype=bool)
    n_total = len(d)
    n1 = int(d.sum())
    if n1 == 0 or n1 == n_total:
        raise EmptySample("selection stage needs both zero and positive outcomes")

    first = probit_mle(d.astype(float), Z, sel_names)
    eta = Z @ first.coef
    mills = inverse_mills(eta)

    W = np.column_stack([X[d], mills[d]])
    wnames = list(names) + ["lambda"]
    y1 = np.asarray(y, dtype=float)[d]
    if not np.all(np.isfinite(y1)):
        raise EmptySample("outcome is undefined on some selected rows")
    beta_all, wtw_inv = _solve_ls(W, y1, wnames)
    b_lambda = beta_all[-1]
    resid = y1 - W @ beta_all

    eta1 = eta[d]
    m1 = mills[d]
    delta = m1 * (m1 + eta1)  # in (0, 1)
    sigma2 = (float(resid @ resid) + b_lambda ** 2 * float(delta.sum())) / n1
    rho2 = min(b_lambda ** 2 / sigma2, 1.0) if sigma2 > 0 else 0.0

    Z1 = Z[d]
    WdZ = (W.T * delta) @ Z1
    Q = rho2 * WdZ @ first.cov @ WdZ.T
    mid = W.T @ (W * (1.0 - rho2 * delta)[:, None]) + Q
    cov_all = sigma2 * wtw_inv @ mid @ wtw_inv

    lambda_se = math.sqrt(max(cov_all[-1, -1], 0.0))
    result = FitResult("heckman2s", list(names), beta_all[:-1], cov_all[:-1, :-1],
                       n_obs=n_total)
    result.extras.update({
        "first_stage": first,
        "lambda_coef": float(b_lambda),
        "lambda_se": lambda_se,
        "n_selected": n1,
        "rho": math.copysign(math.sqrt(rho2), b_lambda),
        "sigma": math.sqrt(sigma2),
    })
    return result


# --- Poisson pseudo maximum likelihood ---------------------------------------------

def _poisson_pseudo_loglik(y, eta, mu):
    pos = y > 0
    ll = -float(mu.sum())
    ll += float(y[pos] @ eta[pos] - gammaln(y[pos] + 1).sum())
    return ll


def ppml_fit(y: np.ndarray, X: np.ndarray, names: list[str]) -> FitResult:
    """Poisson pseudo-ML by iteratively reweighted least squares.

    Zeros in ``y`` are retained; the covariance is the Eicker-Huber-White
    sandwich.  Converged on max-abs coefficient change below 1e-10 within
    100 iterations.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    if np.any(y < 0):
        raise NegativeValue("ppml response must be nonnegative")
    n, k = X.shape
    if n <= k:
        raise EmptySample(f"need more observations ({n}) than parameters ({k})")
    if not np.any(y > 0):
        raise EmptySample("ppml response is identically zero")

    std = _Standardizer(X)
    Xt = std.transformed
    beta_t = linear_fit(np.log1p(y), Xt, names).coef
    beta = std.map_back(beta_t)
    for _ in range(PPML_MAX_ITER):
        eta = Xt @ beta_t
        if np.max(eta) > 500:
            raise NotConverged("ppml linear predictor diverged")
        mu = np.exp(eta)
        w = mu
        z = eta + (y - mu) / mu
        sw = np.sqrt(w)
        beta_t, _ = _solve_ls(Xt * sw[:, None], z * sw, names)
        beta_new = std.map_back(beta_t)
        if np.max(np.abs(beta_new - beta)) < PPML_COEF_TOL:
            beta = beta_new
            break
        beta = beta_new
    else:
        raise NotConverged(f"ppml did not converge in {PPML_MAX_ITER} iterations")

    eta = X @ beta
    mu = np.exp(eta)
    bread = np.linalg.inv((X.T * mu) @ X)
    meat = (X.T * (y - mu) ** 2) @ X
    cov = bread @ meat @ bread
    result = FitResult("ppml", list(names), beta, cov, n_obs=n,
                       loglik=_poisson_pseudo_loglik(y, eta, mu))
    result.extras["score_sup_norm"] = float(np.max(np.abs(X.T @ (y - mu))))
    return result


# --- zero-inflated Poisson pseudo maximum likelihood --------------------------------

def zip_loglik(beta: np.ndarray, delta: np.ndarray, y: np.ndarray,
               X: np.ndarray, Z: np.ndarray) -> float:
    """Observed-data log-likelihood of the ZIP mixture (logit inflation)."""
    eta = X @ beta
    mu = np.exp(eta)
    zeta = Z @ delta
    zero = y == 0
    # ln(pi + (1-pi) e^-mu) = logaddexp(zeta, -mu) - ln(1 + e^zeta)
    ll_zero = np.logaddexp(zeta[zero], -mu[zero]) - np.logaddexp(0.0, zeta[zero])
    pos = ~zero
    ll_pos = (-np.logaddexp(0.0, zeta[pos]) + y[pos] * eta[pos] - mu[pos]
              - gammaln(y[pos] + 1))
    return float(ll_zero.sum() + ll_pos.sum())


def zip_score(beta: np.ndarray, delta: np.ndarray, y: np.ndarray,
              X: np.ndarray, Z: np.ndarray) -> np.ndarray:
    """Analytic gradient of :func:`zip_loglik` in (beta, delta)."""
    eta = X @ beta
    mu = np.exp(eta)
    zeta = Z @ delta
    pi = expit(zeta)
    zero = y == 0
    # posterior structural-zero weight on observed zeros
    t = np.zeros_like(y, dtype=float)
    t[zero] = expit(zeta[zero] + mu[zero])
    g_eta = np.where(zero, -mu * (1.0 - t), y - mu)
    g_zeta = t - pi
    return np.concatenate([X.T @ g_eta, Z.T @ g_zeta])


def _weighted_logit(t: np.ndarray, Z: np.ndarray, delta: np.ndarray) -> np.ndarray:
    """Newton steps for a fractional-response Bernoulli fit (EM M-step)."""
    for _ in range(50):
        pi = expit(Z @ delta)
        g = Z.T @ (t - pi)
        if np.max(np.abs(g)) < 1e-10:
            break
        w = pi * (1.0 - pi)
        try:
            step = np.linalg.solve((Z.T * w) @ Z, g)
        except np.linalg.LinAlgError:
            break  # boundary: the inflation share is collapsing to 0 or 1
        delta = np.clip(delta + step, -35.0, 35.0)
    return delta


def _weighted_poisson(y: np.ndarray, X: np.ndarray, omega: np.ndarray,
                      beta: np.ndarray, names: list[str]) -> np.ndarray:
    """Prior-weighted Poisson IRLS (EM M-step)."""
    for _ in range(50):
        eta = X @ beta
        mu = np.exp(eta)
        w = omega * mu
        z = eta + (y - mu) / mu
        sw = np.sqrt(w)
        beta_new, _ = _solve_ls(X * sw[:, None], z * sw, names)
        if np.max(np.abs(beta_new - beta)) < 1e-10:
            return beta_new
        beta = beta_new
    return beta


def zip_fit(y: np.ndarray, X: np.ndarray, Z: np.ndarray,
            names: list[str], sel_names: list[str]) -> FitResult:
    """Zero-inflated Poisson pseudo-ML by EM.

    E-step computes posterior structural-zero weights; M-step runs a
    weighted logit (inflation) and a weighted Poisson (mean).  Converged on
    a log-likelihood change below 1e-8 within 500 iterations.  Covariance
    is the inverse observed information, with the information matrix taken
    as the central finite difference of the analytic score.
    """
    y = np.asarray(y, dtype=float)
    X = np.asarray(X, dtype=float)
    Z = np.asarray(Z, dtype=float)
    if np.any(y < 0):
        raise NegativeValue("zippml response must be nonnegative")
    zero = y == 0
    if not zero.any():
        raise NoZeros("no zeros in the response; use ppml instead")
    if zero.all():
        raise EmptySample("zippml needs some positive observations")

    std_x = _Standardizer(X)
    std_z = _Standardizer(Z)
    Xt, Zt = std_x.transformed, std_z.transformed
    beta_t = linear_fit(np.log1p(y), Xt, names).coef
    delta_t = np.zeros(Z.shape[1])
    ll = zip_loglik(beta_t, delta_t, y, Xt, Zt)
    converged = False
    for _ in range(ZIP_MAX_ITER):
        mu = np.exp(Xt @ beta_t)
        zeta = Zt @ delta_t
        t = np.zeros_like(y)
        t[zero] = expit(zeta[zero] + mu[zero])
        delta_t = _weighted_logit(t, Zt, delta_t)
        beta_t = _weighted_poisson(y, Xt, 1.0 - t, beta_t, names)
        ll_new = zip_loglik(beta_t, delta_t, y, Xt, Zt)
        if abs(ll_new - ll) < ZIP_LOGLIK_TOL:
            ll = ll_new
            converged = True
            break
        ll = ll_new
    if not converged:
        raise NotConverged(f"zippml EM did not converge in {ZIP_MAX_ITER} iterations")

    beta = std_x.map_back(beta_t)
    delta = std_z.map_back(delta_t)
    theta = np.concatenate([beta, delta])
    k, q = len(beta), len(delta)
    H = np.empty((k + q, k + q))
    for j in range(k + q):
        h = 1e-6 * max(1.0, abs(theta[j]))
        up, dn = theta.copy(), theta.copy()
        up[j] += h
        dn[j] -= h
        gu = zip_score(up[:k], up[k:], y, X, Z)
        gd = zip_score(dn[:k], dn[k:], y, X, Z)
        H[:, j] = (gu - gd) / (2 * h)
    H = (H + H.T) / 2.0
    cov = np.linalg.pinv(-H, hermitian=True)

    pi_hat = expit(Z @ delta)
    result = FitResult("zippml", list(names), beta, cov[:k, :k], n_obs=len(y), loglik=ll)
    result.extras.update({
        "inflation": FitResult("zip-inflation", list(sel_names), delta, cov[k:, k:],
                               n_obs=len(y)),
        "pi_mean": float(pi_hat.mean()),
        "n_zero": int(zero.sum()),
    })
    return result
