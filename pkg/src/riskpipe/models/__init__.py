from .association import (
    BreachAssociation,
    CorrelationRow,
    KsMatrix,
    KsPair,
    LabeledTest,
    breach_association,
    correlation_table,
    effect_multiplier,
    industry_ks_matrix,
    loglog_slope,
    presence_analysis,
)
from .design import COEFFICIENT_LABELS, REGRESSORS, Design, build_design, transform_p2p
from .ols import RegressionFit, aic_from_rss, family_aic, fit_ols, model_aic
from .variants import ModelComparison, Variant, VariantFit, compare_models, fit_variants

__all__ = [
    "BreachAssociation", "CorrelationRow", "KsMatrix", "KsPair", "LabeledTest",
    "breach_association", "correlation_table", "effect_multiplier", "industry_ks_matrix",
    "loglog_slope", "presence_analysis", "COEFFICIENT_LABELS", "REGRESSORS", "Design",
    "build_design", "transform_p2p", "RegressionFit", "aic_from_rss", "family_aic",
    "fit_ols", "model_aic", "ModelComparison", "Variant", "VariantFit", "compare_models",
    "fit_variants",
]
