"""Bootstrap test, ordinary least squares and logistic regression."""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np


class DegenerateSampleError(ValueError):
    pass


def bootstrap_test(a, b, n_resamples: int = 10_000, rng: np.random.Generator | None = None) -> float:
    """Two-sided pooled bootstrap test for a difference of means.

    Under the null both samples come from one distribution, so resamples of
    sizes |a| and |b| are drawn with replacement from the pooled data. The
    p-value counts resampled differences at least as extreme as the observed
    one, with the usual +1 correction so it is never exactly zero.
    """
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    if a.ndim != 1 or b.ndim != 1 or a.size < 2 or b.size < 2:
        raise ValueError("bootstrap_test needs two 1-D samples of size >= 2")
    if n_resamples < 1:
        raise ValueError("n_resamples must be positive")
    if rng is None:
        rng = np.random.default_rng(0)
    observed = a.mean() - b.mean()
    pooled = np.concatenate([a, b])
    if np.ptp(pooled) == 0.0:
        if observed != 0.0:  # only reachable through rounding in the means
            raise DegenerateSampleError("zero pooled variance with unequal means")
        return 1.0
    na, n = a.size, pooled.size
    # chunked to keep memory flat for large samples
    extreme = 0
    chunk = max(1, 2_000_000 // n)
    tol = 1e-12 * max(1.0, abs(observed))
    done = 0
    while done < n_resamples:
        k = min(chunk, n_resamples - done)
        draws = pooled[rng.integers(0, n, size=(k, n))]
        diff = draws[:, :na].mean(axis=1) - draws[:, na:].mean(axis=1)
        extreme += int(np.count_nonzero(np.abs(diff) >= abs(observed) - tol))
        done += k
    return (extreme + 1) / (n_resamples + 1)


@dataclass(frozen=True)
class LinearFit:
    slope: float
    intercept: float
    r_squared: float


def linear_regression(x, y) -> LinearFit:
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-D and of equal length")
    if x.size < 3:
        raise ValueError("linear_regression needs at least 3 points")
    xc = x - x.mean()
    sxx = float(xc @ xc)
    if sxx == 0.0:
        raise DegenerateSampleError("x is constant")
    yc = y - y.mean()
    slope = float(xc @ yc) / sxx
    intercept = float(y.mean() - slope * x.mean())
    ss_tot = float(yc @ yc)
    resid = y - (intercept + slope * x)
    ss_res = float(resid @ resid)
    # a constant response is explained by nothing
    r2 = 0.0 if ss_tot == 0.0 else 1.0 - ss_res / ss_tot
    return LinearFit(slope, intercept, r2)


@dataclass(frozen=True)
class LogisticFit:
    coefficient: float
    intercept: float
    pseudo_r_squared: float
    se_coefficient: float
    se_intercept: float
    log_likelihood: float
    null_log_likelihood: float
    iterations: int
    converged: bool
    separated: bool


def _log_likelihood(eta: np.ndarray, y: np.ndarray) -> float:
    # log(1 + e^eta) evaluated stably
    return float(np.sum(y * eta - np.logaddexp(0.0, eta)))


def perfectly_separated(x, y) -> bool:
    """True when a single threshold on ``x`` splits the two classes exactly."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=bool)
    x1, x0 = x[y], x[~y]
    return bool(x0.max() < x1.min() or x1.max() < x0.min())


def logistic_regression(x, success, max_iter: int = 100, tol: float = 1e-8) -> LogisticFit:
    """Maximum-likelihood logistic fit P(success) = 1 / (1 + exp(-(b0 + b1 x))).

    Iteratively reweighted least squares, stopped when the log-likelihood
    changes by less than ``tol`` or after ``max_iter`` iterations. Perfectly
    separated data have no finite maximum; the fit is then returned with
    ``separated=True`` and whatever (large) coefficient IRLS reached.
    """
    x = np.asarray(x, dtype=float)
    y = np.asarray(success, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and success must be 1-D and of equal length")
    if x.size < 10:
        raise ValueError("logistic_regression needs at least 10 observations")
    if not np.all((y == 0.0) | (y == 1.0)):
        raise ValueError("success must be boolean")
    n1 = y.sum()
    if n1 == 0 or n1 == y.size:
        raise DegenerateSampleError("both outcome classes must be present")
    if np.ptp(x) == 0.0:
        raise DegenerateSampleError("x is constant")
    separated = perfectly_separated(x, y.astype(bool))

    X = np.column_stack([np.ones_like(x), x])
    p0 = n1 / y.size
    beta = np.array([math.log(p0 / (1.0 - p0)), 0.0])
    ll_null = _log_likelihood(np.full_like(x, beta[0]), y)
    ll = ll_null
    converged = False
    iterations = 0
    for iterations in range(1, max_iter + 1):
        eta = X @ beta
        mu = 0.5 * (1.0 + np.tanh(0.5 * eta))
        w = np.clip(mu * (1.0 - mu), 1e-12, None)
        z = eta + (y - mu) / w
        xtw = X.T * w
        try:
            beta = np.linalg.solve(xtw @ X, xtw @ z)
        except np.linalg.LinAlgError:
            separated = True
            break
        new_ll = _log_likelihood(X @ beta, y)
        if abs(new_ll - ll) < tol:
            ll = new_ll
            converged = True
            break
        ll = new_ll

    eta = X @ beta
    mu = 0.5 * (1.0 + np.tanh(0.5 * eta))
    w = mu * (1.0 - mu)
    try:
        cov = np.linalg.inv((X.T * w) @ X)
        se = np.sqrt(np.clip(np.diag(cov), 0.0, None))
    except np.linalg.LinAlgError:
        se = np.array([math.inf, math.inf])
    pseudo = 1.0 - ll / ll_null
    return LogisticFit(
        coefficient=float(beta[1]),
        intercept=float(beta[0]),
        pseudo_r_squared=float(pseudo),
        se_coefficient=float(se[1]),
        se_intercept=float(se[0]),
        log_likelihood=ll,
        null_log_likelihood=ll_null,
        iterations=iterations,
        converged=converged and not separated,
        separated=separated,
    )
