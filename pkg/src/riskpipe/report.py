"""Figure-data tables: histograms, box-plot summaries, scatter densities, coefficient bars."""

from __future__ import annotations

import math
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

import numpy as np

from ._io import atomic_write_text, fmt_float, write_csv
from .errors import DataError
from .ingest import BreachEvent, read_table
from .riskvectors import RiskProfile

# (attribute, file suffix, log axis)
HIST_VECTORS = [
    ("bot_rate", "A_bot_rate", True),
    ("p2p_rate", "B_p2p_rate", True),
    ("tls_cfg_frac", "C_tls_cfg_frac", False),
    ("tls_cert_frac", "D_tls_cert_frac", False),
    ("risky_frac", "E_risky_frac", False),
    ("reasonable_frac", "F_reasonable_frac", False),
]
PRESENCE_PANELS = [
    ("p2p_rate", "B", True),
    ("tls_cfg_frac", "C", False),
    ("tls_cert_frac", "D", False),
    ("risky_frac", "E", False),
    ("reasonable_frac", "F", False),
]
SCATTER_PANELS = [
    ("p2p_rate", "A", True),
    ("tls_cfg_frac", "B", False),
    ("tls_cert_frac", "C", False),
    ("risky_frac", "D", False),
    ("reasonable_frac", "E", False),
]


@dataclass
class DistributionSummary:
    edges: np.ndarray
    counts: np.ndarray
    zero_count: int
    n: int
    q1: float
    median: float
    q3: float
    whisker_low: float
    whisker_high: float
    log_scale: bool

    @property
    def iqr(self) -> float:
        return self.q3 - self.q1

    def rows(self):
        for lo, hi, c in zip(self.edges[:-1], self.edges[1:], self.counts):
            yield float(lo), float(hi), int(c)


def summarize_distribution(values: Sequence[float], log_scale: bool = False, bins: int = 50) -> DistributionSummary:
    """Equal-width histogram plus box-plot numbers.

    With ``log_scale`` the bins are equal width in log10, zeros are counted
    separately, and the quartiles describe the positive values only (a log
    axis cannot place zeros). Whiskers are the 1.5 x IQR fences.
    """
    x = np.asarray(values, dtype=float)
    if x.size == 0:
        raise DataError("cannot summarize an empty sample")
    if bins < 1:
        raise DataError("bins must be positive")
    if not np.all(np.isfinite(x)):
        raise DataError("values must be finite")
    zero_count = 0
    if log_scale:
        if np.any(x < 0):
            raise DataError("log-scale summary needs nonnegative values")
        zero_count = int(np.sum(x == 0))
        x = x[x > 0]
        if x.size == 0:
            return DistributionSummary(np.array([]), np.array([], dtype=int), zero_count, zero_count,
                                       math.nan, math.nan, math.nan, math.nan, math.nan, True)
        counts, log_edges = np.histogram(np.log10(x), bins=bins)
        edges = 10.0 ** log_edges
    else:
        counts, edges = np.histogram(x, bins=bins)
    q1, med, q3 = (float(v) for v in np.percentile(x, [25, 50, 75]))
    iqr = q3 - q1
    return DistributionSummary(edges, counts, zero_count, int(x.size) + zero_count, q1, med, q3,
                               q1 - 1.5 * iqr, q3 + 1.5 * iqr, log_scale)


def _write_hist(path: Path, s: DistributionSummary) -> None:
    rows = []
    if s.log_scale:
        rows.append(("0", "0", str(s.zero_count)))
    rows += [(fmt_float(lo), fmt_float(hi), str(c)) for lo, hi, c in s.rows()]
    write_csv(path, ["bin_low", "bin_high", "count"], rows)


def _svg_histogram(path: Path, s: DistributionSummary, title: str) -> None:
    w, h, pad = 480, 240, 30
    counts = list(s.counts)
    top = max(counts) if counts and max(counts) > 0 else 1
    bar_w = (w - 2 * pad) / max(len(counts), 1)
    parts = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">',
             f'<text x="{pad}" y="18" font-family="sans-serif" font-size="12">{title}</text>']
    for i, c in enumerate(counts):
        bh = (h - 2 * pad) * c / top
        parts.append(f'<rect x="{pad + i * bar_w:.2f}" y="{h - pad - bh:.2f}" width="{bar_w:.2f}" '
                     f'height="{bh:.2f}" fill="#4a6fa5"/>')
    parts.append(f'<line x1="{pad}" y1="{h - pad}" x2="{w - pad}" y2="{h - pad}" stroke="black"/>')
    parts.append("</svg>\n")
    atomic_write_text(path, "\n".join(parts))


def _summary_row(label, group, s: DistributionSummary):
    return (label, group, s.n, s.zero_count, fmt_float(s.q1), fmt_float(s.median), fmt_float(s.q3),
            fmt_float(s.whisker_low), fmt_float(s.whisker_high))


SUMMARY_HEADER = ["vector", "group", "n", "n_zero", "q1", "median", "q3", "whisker_low", "whisker_high"]


def _kde_density(x: np.ndarray, y: np.ndarray, bandwidth) -> np.ndarray:
    from scipy.stats import gaussian_kde

    pts = np.vstack([x, y])
    if x.size < 3 or np.linalg.matrix_rank(np.cov(pts)) < 2:
        return np.full(x.size, math.nan)
    return gaussian_kde(pts, bw_method=bandwidth)(pts)


def write_figures(profiles: Sequence[RiskProfile], analysis_dir, out_dir, breaches: Optional[Sequence[BreachEvent]] = None,
                  alpha: float = 0.01, bins: int = 50, bandwidth="scott", svg: bool = False) -> list[str]:
    """Write every figure-data file into ``out_dir``; returns the names written."""
    analysis_dir, out = Path(analysis_dir), Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    written: list[str] = []

    def track(name: str) -> Path:
        written.append(name)
        return out / name

    # distributions of every vector
    for attr, suffix, log in HIST_VECTORS:
        s = summarize_distribution([getattr(p, attr) for p in profiles], log, bins)
        _write_hist(track(f"fig_hist_{suffix}.csv"), s)
        if svg:
            _svg_histogram(track(f"fig_hist_{suffix}.svg"), s, attr + (" (log10 bins)" if log else ""))

    # presence panels: A is the bot x p2p table, B-F compare vector distributions
    with_bots = [p for p in profiles if p.bot_present]
    without = [p for p in profiles if not p.bot_present]
    n = len(profiles)
    rows = []
    for bot in (True, False):
        for p2p in (True, False):
            c = sum(1 for p in profiles if p.bot_present == bot and p.p2p_present == p2p)
            rows.append((int(bot), int(p2p), c, fmt_float(100.0 * c / n if n else 0.0)))
    write_csv(track("fig_presence_A.csv"), ["bot_present", "p2p_present", "count", "percent"], rows)
    summary_rows = []
    for attr, panel, log in PRESENCE_PANELS:
        hist_rows = []
        for group, members in (("with_bots", with_bots), ("without_bots", without)):
            if not members:
                continue
            s = summarize_distribution([getattr(p, attr) for p in members], log, bins)
            summary_rows.append(_summary_row(attr, group, s))
            if s.log_scale:
                hist_rows.append((group, "0", "0", s.zero_count))
            hist_rows += [(group, fmt_float(lo), fmt_float(hi), c) for lo, hi, c in s.rows()]
        write_csv(track(f"fig_presence_{panel}.csv"), ["group", "bin_low", "bin_high", "count"], hist_rows)
    write_csv(track("fig_presence_summary.csv"), SUMMARY_HEADER, summary_rows)

    # scatter of log10 bot rate against each vector, infected orgs only
    infected = [p for p in profiles if p.bot_rate > 0]
    scatter_rows = []
    for attr, panel, log in SCATTER_PANELS:
        members = [p for p in infected if not log or getattr(p, attr) > 0]
        if not members:
            continue
        xs = np.array([getattr(p, attr) for p in members], dtype=float)
        if log:
            xs = np.log10(xs)
        ys = np.log10([p.bot_rate for p in members])
        dens = _kde_density(xs, ys, bandwidth)
        for p, x, y, d in zip(members, xs, ys, dens):
            scatter_rows.append((panel, attr, p.org_id, fmt_float(x), fmt_float(y), fmt_float(d)))
    write_csv(track("fig_scatter.csv"), ["panel", "vector", "org_id", "x", "log10_bot_rate", "density"],
              scatter_rows)

    # coefficient bars from the analysis tables
    def coef_rows(src, with_industry):
        _, table = read_table(src)
        for r in table:
            p = float(r["p"])
            base = (r["regressor"], r["estimate"], r["ci_low"], r["ci_high"], r["p"],
                    int(p < alpha) if not math.isnan(p) else 0)
            yield ((r["industry"],) + base) if with_industry else base

    coef_header = ["regressor", "estimate", "ci_low", "ci_high", "p", "significant"]
    pooled_src = analysis_dir / "regression_pooled.csv"
    if not pooled_src.exists():
        raise DataError(f"missing analysis table {pooled_src}")
    write_csv(track("fig_coeffs.csv"), coef_header, coef_rows(pooled_src, False))
    unpooled_src = analysis_dir / "regression_unpooled.csv"
    if not unpooled_src.exists():
        raise DataError(f"missing analysis table {unpooled_src}")
    write_csv(track("fig_unpooled.csv"), ["industry"] + coef_header, coef_rows(unpooled_src, True))

    # bot-rate distribution per industry (log axis)
    by_ind: dict[str, list[float]] = {}
    for p in profiles:
        by_ind.setdefault(p.industry, []).append(p.bot_rate)
    ind_rows = []
    for ind in sorted(by_ind):
        s = summarize_distribution(by_ind[ind], True, bins)
        ind_rows.append(_summary_row("bot_rate", ind, s))
    write_csv(track("fig_industry_bot.csv"), ["vector", "industry"] + SUMMARY_HEADER[2:], ind_rows)

    # breach percentages by risk factor; header only when there are no breaches
    breach_rows = []
    if breaches:
        hit = {b.org_id for b in breaches}
        for factor in ("bot_present", "p2p_present"):
            for present in (True, False):
                members = [p for p in profiles if getattr(p, factor) == present]
                k = sum(1 for p in members if p.org_id in hit)
                pct = 100.0 * k / len(members) if members else 0.0
                breach_rows.append((factor, int(present), len(members), k, fmt_float(pct)))
    write_csv(track("fig_breach.csv"), ["factor", "factor_present", "n_orgs", "n_breached", "percent_breached"],
              breach_rows)
    return written
