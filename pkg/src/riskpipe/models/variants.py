"""Pooled, fixed-effect and un-pooled fits of the log bot-rate model, and AIC selection."""

from __future__ import annotations

import enum
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .._io import worker_count
from ..errors import InsufficientData, RankDeficient
from ..riskvectors import RiskProfile
from .design import MIN_ROWS, Design, build_design
from .ols import RegressionFit, family_aic, fit_ols


class Variant(enum.Enum):
    Pooled = "Pooled"
    FixedEffects = "FixedEffects"
    Unpooled = "Unpooled"


@dataclass
class VariantFit:
    variant: Variant
    # "pooled" / "fixed_effects" for single fits, industry label for un-pooled
    fits: dict[str, RegressionFit]
    dropped: dict[str, str] = field(default_factory=dict)
    reference: Optional[str] = None

    @property
    def n_coefficients(self) -> int:
        return sum(f.n_coef for f in self.fits.values())

    @property
    def n_parameters(self) -> int:
        return sum(f.k for f in self.fits.values())

    @property
    def n_rows(self) -> int:
        return sum(f.n for f in self.fits.values())

    @property
    def rss(self) -> float:
        return sum(f.rss for f in self.fits.values())

    @property
    def aic(self) -> float:
        return family_aic(self.fits.values())


def _industry_counts(design: Design) -> dict[str, int]:
    counts: dict[str, int] = {}
    for ind in design.industries:
        counts[ind] = counts.get(ind, 0) + 1
    return counts


def _fit_pooled(design: Design, ci_level: float) -> VariantFit:
    return VariantFit(Variant.Pooled, {"pooled": fit_ols(design.X, design.y, design.names, ci_level)})


def _fit_fixed(design: Design, ci_level: float, min_rows: int) -> VariantFit:
    counts = _industry_counts(design)
    dropped = {i: f"only {c} usable rows" for i, c in counts.items() if c < min_rows}
    kept = sorted(i for i, c in counts.items() if c >= min_rows)
    if len(kept) < 2:
        raise InsufficientData("fixed effects need at least two industries with enough rows")
    sub = design.subset([i in set(kept) for i in design.industries])
    reference = kept[0]
    dummies = np.array([[1.0 if ind == k else 0.0 for k in kept[1:]] for ind in sub.industries])
    X = np.hstack([sub.X, dummies])
    names = sub.names + [f"industry[{k}]" for k in kept[1:]]
    fit = fit_ols(X, sub.y, names, ci_level)
    return VariantFit(Variant.FixedEffects, {"fixed_effects": fit}, dict(sorted(dropped.items())), reference)


def _fit_unpooled(design: Design, ci_level: float, min_rows: int) -> VariantFit:
    counts = _industry_counts(design)
    dropped = {i: f"only {c} usable rows" for i, c in counts.items() if c < min_rows}
    kept = sorted(i for i, c in counts.items() if c >= min_rows)
    labels = np.array(design.industries, dtype=object)

    def one(ind):
        sub = design.subset(labels == ind)
        try:
            return ind, fit_ols(sub.X, sub.y, sub.names, ci_level)
        except RankDeficient as exc:
            return ind, exc

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        results = dict(pool.map(one, kept))
    fits = {}
    for ind in kept:
        res = results[ind]
        if isinstance(res, RankDeficient):
            dropped[ind] = str(res)
        else:
            fits[ind] = res
    if not fits:
        raise InsufficientData("insufficient data: no industry has a fittable un-pooled design")
    return VariantFit(Variant.Unpooled, fits, dict(sorted(dropped.items())))


def fit_variants(profiles: Sequence[RiskProfile], variant: Variant | str, ci_level: float = 0.98,
                 min_rows: int = MIN_ROWS) -> VariantFit:
    """Fit one model variant.

    Industries with fewer than ``min_rows`` usable rows are dropped from the
    fixed-effect and un-pooled variants; un-pooled also drops industries whose
    own design is rank deficient. Drops are listed in ``dropped``.
    """
    variant = Variant(variant)
    design = build_design(profiles, min_rows)
    if variant is Variant.Pooled:
        return _fit_pooled(design, ci_level)
    if variant is Variant.FixedEffects:
        return _fit_fixed(design, ci_level, min_rows)
    return _fit_unpooled(design, ci_level, min_rows)


@dataclass
class VariantSummary:
    name: str
    n_parameters: int
    n_coefficients: int
    n_rows: int
    aic: float


@dataclass
class ModelComparison:
    variants: list[VariantSummary]
    selected: str
    fits: dict[str, VariantFit]
    dropped: dict[str, str]
    skipped: dict[str, str] = field(default_factory=dict)


def compare_models(profiles: Sequence[RiskProfile], ci_level: float = 0.98,
                   min_rows: int = MIN_ROWS) -> ModelComparison:
    """Fit all variants on a common set of rows and pick the minimum total AIC.

    The common set is every industry the un-pooled variant can fit, so the
    three AIC totals are computed on identical data. Exact AIC ties go to the
    simpler variant. Variants that cannot be fitted are listed in ``skipped``.
    """
    design = build_design(profiles, min_rows)
    skipped = {}
    try:
        unpooled = _fit_unpooled(design, ci_level, min_rows)
    except InsufficientData as exc:
        # nothing per-industry is fittable: only the pooled model is comparable
        unpooled = None
        skipped[Variant.FixedEffects.value] = "no industry has enough rows"
        skipped[Variant.Unpooled.value] = str(exc)
        common = design
    else:
        keep = set(unpooled.fits)
        common = design.subset([i in keep for i in design.industries])

    fits = {Variant.Pooled.value: _fit_pooled(common, ci_level)}
    if unpooled is not None:
        if len(unpooled.fits) >= 2:
            fits[Variant.FixedEffects.value] = _fit_fixed(common, ci_level, min_rows)
        else:
            skipped[Variant.FixedEffects.value] = "fewer than two industries"
        fits[Variant.Unpooled.value] = unpooled

    summaries = [VariantSummary(name, vf.n_parameters, vf.n_coefficients, vf.n_rows, vf.aic)
                 for name, vf in fits.items()]
    best = min(s.aic for s in summaries)
    tol = 1e-9 * max(1.0, abs(best))
    # first hit in simplest-first order
    selected = next(s.name for s in summaries if s.aic <= best + tol)
    dropped = unpooled.dropped if unpooled is not None else {}
    return ModelComparison(summaries, selected, fits, dropped, dict(sorted(skipped.items())))
