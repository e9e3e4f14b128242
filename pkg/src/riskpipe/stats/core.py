"""Rank statistics, the G-test and the two-sample Kolmogorov-Smirnov test."""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DataError, DegenerateData, InsufficientData
from .special import chi2_sf, kolmogorov_sf, normal_sf, student_t_sf


class Method(enum.Enum):
    Spearman = "Spearman"
    MannWhitney = "MannWhitney"
    GTest = "GTest"
    KSTwoSample = "KSTwoSample"


@dataclass(frozen=True)
class TestResult:
    method: Method
    statistic: float
    p_value: float
    n: tuple[int, ...]

    __test__ = False  # not a pytest class


def _as_1d(values, name="values") -> np.ndarray:
    arr = np.asarray(values, dtype=float)
    if arr.ndim != 1:
        raise DataError(f"{name} must be one-dimensional")
    if not np.all(np.isfinite(arr)):
        raise DataError(f"{name} contains non-finite entries")
    return arr


def average_ranks(values: Sequence[float]) -> np.ndarray:
    """1-based ranks; tied values share the mean of the positions they span."""
    x = _as_1d(values)
    n = x.size
    if n == 0:
        raise DataError("cannot rank an empty sequence")
    order = np.argsort(x, kind="mergesort")
    xs = x[order]
    # group starts in sorted order
    starts = np.flatnonzero(np.r_[True, xs[1:] != xs[:-1]])
    ends = np.r_[starts[1:], n]
    group_rank = (starts + ends + 1) / 2.0  # mean of positions start+1..end
    ranks = np.empty(n)
    ranks[order] = np.repeat(group_rank, ends - starts)
    return ranks


def _tie_counts(x: np.ndarray) -> np.ndarray:
    _, counts = np.unique(x, return_counts=True)
    return counts


def spearman(x: Sequence[float], y: Sequence[float]) -> TestResult:
    """Spearman's rho with a two-sided t-approximation p-value (n-2 df)."""
    xa, ya = _as_1d(x, "x"), _as_1d(y, "y")
    if xa.size != ya.size:
        raise DataError("x and y must have equal length")
    n = xa.size
    if n < 3:
        raise InsufficientData("spearman needs at least 3 pairs")
    rx = average_ranks(xa)
    ry = average_ranks(ya)
    dx = rx - rx.mean()
    dy = ry - ry.mean()
    sxx, syy = float(dx @ dx), float(dy @ dy)
    if sxx == 0 or syy == 0:
        raise DegenerateData("undefined correlation: constant input")
    rho = float(dx @ dy) / math.sqrt(sxx * syy)
    rho = max(-1.0, min(1.0, rho))
    if abs(rho) == 1.0:
        p = 0.0
    else:
        t = abs(rho) * math.sqrt((n - 2) / (1.0 - rho * rho))
        p = min(1.0, 2.0 * student_t_sf(t, n - 2))
    return TestResult(Method.Spearman, rho, p, (n,))


def mann_whitney(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Two-sided rank-sum test; statistic is U for sample ``a``.

    Normal approximation with tie-corrected variance and a 0.5 continuity
    correction. U above n1*n2/2 means ``a`` tends to rank higher.
    """
    xa, xb = _as_1d(a, "a"), _as_1d(b, "b")
    n1, n2 = xa.size, xb.size
    if n1 == 0 or n2 == 0:
        raise InsufficientData("mann_whitney needs two non-empty samples")
    joint = np.concatenate([xa, xb])
    ranks = average_ranks(joint)
    u = float(ranks[:n1].sum()) - n1 * (n1 + 1) / 2.0
    n = n1 + n2
    ties = _tie_counts(joint).astype(float)
    if ties.size == 1:
        raise DegenerateData("degenerate ranking: all values identical")
    tie_term = float(np.sum(ties ** 3 - ties)) / (n * (n - 1))
    var = n1 * n2 / 12.0 * ((n + 1) - tie_term)
    mean = n1 * n2 / 2.0
    z = (abs(u - mean) - 0.5) / math.sqrt(var)
    p = 1.0 if z <= 0 else min(1.0, 2.0 * normal_sf(z))
    return TestResult(Method.MannWhitney, u, p, (n1, n2))


def g_test(table) -> TestResult:
    """Likelihood-ratio test of independence on a contingency table.

    G = 2 * sum O ln(O/E); empty cells contribute nothing. Written for the
    2x2 case but any R x C table works, with (R-1)(C-1) degrees of freedom.
    """
    obs = np.asarray(table, dtype=float)
    if obs.ndim != 2 or min(obs.shape) < 2:
        raise DataError("g_test needs at least a 2x2 table")
    if np.any(obs < 0) or np.any(obs != np.round(obs)):
        raise DataError("table entries must be nonnegative integers")
    rows = obs.sum(axis=1)
    cols = obs.sum(axis=0)
    if np.any(rows == 0) or np.any(cols == 0):
        raise DegenerateData("degenerate table: a row or column sums to zero")
    total = obs.sum()
    expected = np.outer(rows, cols) / total
    mask = obs > 0
    g = 2.0 * float(np.sum(obs[mask] * np.log(obs[mask] / expected[mask])))
    g = max(g, 0.0)
    df = (obs.shape[0] - 1) * (obs.shape[1] - 1)
    return TestResult(Method.GTest, g, chi2_sf(g, df), (int(total),))


def ks_statistic(a: np.ndarray, b: np.ndarray) -> float:
    sa, sb = np.sort(a), np.sort(b)
    grid = np.concatenate([sa, sb])
    fa = np.searchsorted(sa, grid, side="right") / sa.size
    fb = np.searchsorted(sb, grid, side="right") / sb.size
    return float(np.max(np.abs(fa - fb)))


def ks_two_sample(a: Sequence[float], b: Sequence[float]) -> TestResult:
    """Two-sample KS; p from the limiting Kolmogorov law at sqrt(n1 n2/(n1+n2)) * D."""
    xa, xb = _as_1d(a, "a"), _as_1d(b, "b")
    n1, n2 = xa.size, xb.size
    if n1 == 0 or n2 == 0:
        raise InsufficientData("ks_two_sample needs two non-empty samples")
    d = ks_statistic(xa, xb)
    en = n1 * n2 / (n1 + n2)
    return TestResult(Method.KSTwoSample, d, kolmogorov_sf(math.sqrt(en) * d), (n1, n2))
