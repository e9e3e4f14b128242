"""Ordinary least squares with classical inference, plus AIC."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

import numpy as np
from scipy.linalg import qr, solve_triangular

from ..errors import DataError, DegenerateData, InsufficientData, RankDeficient
from ..stats.special import student_t_isf, student_t_sf

_RANK_TOL = 1e-10


@dataclass
class RegressionFit:
    names: list[str]
    coef: np.ndarray
    stderr: np.ndarray
    tvalues: np.ndarray
    pvalues: np.ndarray
    ci_low: np.ndarray
    ci_high: np.ndarray
    ci_level: float
    r2: float
    sigma: float
    rss: float
    n: int
    # parameters counted for AIC: coefficients + sigma
    k: int
    aic: float
    fitted: np.ndarray
    resid: np.ndarray

    @property
    def n_coef(self) -> int:
        return len(self.names)

    @property
    def df_resid(self) -> int:
        return self.n - self.n_coef

    @property
    def coefficients(self) -> dict[str, float]:
        return dict(zip(self.names, self.coef.tolist()))

    def rows(self) -> Iterable[tuple]:
        """(name, estimate, stderr, t, p, ci_low, ci_high) per regressor."""
        for i, name in enumerate(self.names):
            yield (name, float(self.coef[i]), float(self.stderr[i]), float(self.tvalues[i]),
                   float(self.pvalues[i]), float(self.ci_low[i]), float(self.ci_high[i]))


def _collinear_groups(X: np.ndarray, names: Sequence[str], independent, dependent) -> list[str]:
    basis = X[:, independent]
    involved = set()
    for j in dependent:
        involved.add(names[j])
        w, *_ = np.linalg.lstsq(basis, X[:, j], rcond=None)
        scale = max(1.0, float(np.max(np.abs(w))))
        for idx, wi in zip(independent, w):
            if abs(wi) > 1e-8 * scale:
                involved.add(names[idx])
    return [n for n in names if n in involved]


def fit_ols(X, y, names: Optional[Sequence[str]] = None, ci_level: float = 0.98) -> RegressionFit:
    """Least squares via pivoted QR.

    Standard errors use the unbiased residual variance; p-values and
    intervals use Student t with n - p degrees of freedom. R^2 is measured
    against the intercept-only model.
    """
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if X.ndim != 2 or y.ndim != 1 or X.shape[0] != y.shape[0]:
        raise DataError("design must be n x p and response length n")
    n, p = X.shape
    names = list(names) if names is not None else [f"x{i}" for i in range(p)]
    if len(names) != p:
        raise DataError("one name per design column required")
    if not 0.0 < ci_level < 1.0:
        raise DataError("ci_level must lie in (0, 1)")
    if n <= p:
        raise InsufficientData(f"insufficient data: {n} rows for {p} regressors")
    if not (np.all(np.isfinite(X)) and np.all(np.isfinite(y))):
        raise DataError("design or response contains non-finite values")

    _, r_piv, piv = qr(X, mode="economic", pivoting=True)
    diag = np.abs(np.diag(r_piv))
    rank = int(np.sum(diag > _RANK_TOL * max(diag[0], 1e-300))) if diag.size else 0
    if rank < p:
        raise RankDeficient(_collinear_groups(X, names, sorted(piv[:rank]), sorted(piv[rank:])))

    q, r = np.linalg.qr(X)
    beta = solve_triangular(r, q.T @ y)
    fitted = X @ beta
    resid = y - fitted
    rss = float(resid @ resid)
    if rss <= (64 * np.finfo(float).eps) ** 2 * float(y @ y):
        rss = 0.0
    dof = n - p
    s2 = rss / dof
    r_inv = solve_triangular(r, np.eye(p))
    xtx_inv_diag = np.sum(r_inv * r_inv, axis=1)
    stderr = np.sqrt(s2 * xtx_inv_diag)
    with np.errstate(divide="ignore", invalid="ignore"):
        tvalues = beta / stderr
    pvalues = np.array([_two_sided_p(t, dof) for t in tvalues])
    q_t = student_t_isf((1.0 - ci_level) / 2.0, dof)
    ci_low = beta - q_t * stderr
    ci_high = beta + q_t * stderr

    centered = y - y.mean()
    tss = float(centered @ centered)
    if tss > 0:
        r2 = min(1.0, max(0.0, 1.0 - rss / tss))
    else:
        r2 = 1.0 if rss == 0 else 0.0

    k = p + 1
    aic = math.nan if rss == 0 else n * math.log(rss / n) + 2 * k
    return RegressionFit(
        names=names, coef=beta, stderr=stderr, tvalues=tvalues, pvalues=pvalues,
        ci_low=ci_low, ci_high=ci_high, ci_level=ci_level, r2=r2, sigma=math.sqrt(s2),
        rss=rss, n=n, k=k, aic=aic, fitted=fitted, resid=resid,
    )


def _two_sided_p(t: float, dof: int) -> float:
    if math.isnan(t):
        return math.nan
    return min(1.0, 2.0 * student_t_sf(abs(t), dof))


def aic_from_rss(n: int, rss: float, k: int) -> float:
    if n <= 0:
        raise DataError("AIC needs n > 0")
    if rss <= 0:
        raise DegenerateData("degenerate likelihood: residual sum of squares is zero")
    return n * math.log(rss / n) + 2 * k


def model_aic(fit: RegressionFit) -> float:
    """Gaussian AIC up to the shared constant: n ln(RSS/n) + 2k, k including sigma."""
    return aic_from_rss(fit.n, fit.rss, fit.k)


def family_aic(fits: Iterable[RegressionFit]) -> float:
    """Total AIC of independent fits on disjoint data."""
    return sum(model_aic(f) for f in fits)
