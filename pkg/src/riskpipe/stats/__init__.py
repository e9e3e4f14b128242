from .core import (
    Method,
    TestResult,
    average_ranks,
    g_test,
    ks_two_sample,
    mann_whitney,
    spearman,
)
from .special import (
    TailKind,
    betainc,
    chi2_sf,
    gammaincc,
    kolmogorov_sf,
    normal_sf,
    student_t_isf,
    student_t_sf,
    tail_prob,
)

__all__ = [
    "Method", "TestResult", "average_ranks", "g_test", "ks_two_sample", "mann_whitney",
    "spearman", "TailKind", "betainc", "chi2_sf", "gammaincc", "kolmogorov_sf",
    "normal_sf", "student_t_isf", "student_t_sf", "tail_prob",
]
