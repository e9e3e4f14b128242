"""Association analyses between risk vectors, bot presence/prevalence and breaches."""

from __future__ import annotations

import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from itertools import combinations
from typing import Iterable, Optional, Sequence

import numpy as np

from .._io import worker_count
from ..errors import DataError, InsufficientData
from ..ingest import BreachEvent
from ..riskvectors import RiskProfile
from ..stats import TestResult, g_test, ks_two_sample, mann_whitney, spearman
from .ols import RegressionFit, fit_ols

# (attribute, label) in display order
PRESENCE_VECTORS = [
    ("p2p_rate", "p2p_rate"),
    ("tls_cfg_frac", "T_CF"),
    ("tls_cert_frac", "T_CT"),
    ("risky_frac", "S_Ri"),
    ("reasonable_frac", "S_Re"),
]
CORRELATION_VECTORS = [
    ("p2p_rate", "Concentration of Peer-to-Peer"),
    ("tls_cfg_frac", "TLS Configuration Errors"),
    ("tls_cert_frac", "TLS Certificate Errors"),
    ("risky_frac", "Risky Services"),
    ("reasonable_frac", "Reasonable Services"),
]


def effect_multiplier(beta: float, delta: float = 1.0) -> float:
    """Multiplicative change in bot_rate when a regressor moves by ``delta``.

    For a log-transformed regressor pass ``delta = ln(ratio)``.
    """
    return math.exp(beta * delta)


@dataclass
class LabeledTest:
    label: str
    result: Optional[TestResult]
    # "higher_with_bots", "lower_with_bots" or "no_difference"
    direction: str
    error: Optional[str] = None


def _table(flag_a: Sequence[bool], flag_b: Sequence[bool]) -> list[list[int]]:
    a = np.asarray(flag_a, dtype=bool)
    b = np.asarray(flag_b, dtype=bool)
    return [[int(np.sum(a & b)), int(np.sum(a & ~b))],
            [int(np.sum(~a & b)), int(np.sum(~a & ~b))]]


def _table_direction(table) -> str:
    (a, b), (c, d) = table
    lhs, rhs = a * d, b * c
    if lhs > rhs:
        return "higher_with_bots"
    if lhs < rhs:
        return "lower_with_bots"
    return "no_difference"


def presence_analysis(profiles: Sequence[RiskProfile]) -> list[LabeledTest]:
    """G-test of bot presence x p2p presence, then a rank-sum test per risk vector.

    Rank-sum tests compare bot-present orgs (first sample) with bot-absent
    orgs; the direction says which group tends to rank higher. A test that
    cannot be computed (constant vector, empty margin) is kept with an error
    note and no result.
    """
    with_bots = [p for p in profiles if p.bot_present]
    without = [p for p in profiles if not p.bot_present]
    if not with_bots or not without:
        raise InsufficientData("presence analysis needs both bot-present and bot-absent organizations")
    table = _table([p.bot_present for p in profiles], [p.p2p_present for p in profiles])
    try:
        out = [LabeledTest("p2p_present", g_test(table), _table_direction(table))]
    except DataError as exc:
        out = [LabeledTest("p2p_present", None, "no_difference", str(exc))]
    for attr, label in PRESENCE_VECTORS:
        try:
            res = mann_whitney([getattr(p, attr) for p in with_bots], [getattr(p, attr) for p in without])
        except DataError as exc:
            out.append(LabeledTest(label, None, "no_difference", str(exc)))
            continue
        mean_u = res.n[0] * res.n[1] / 2.0
        if res.statistic > mean_u:
            direction = "higher_with_bots"
        elif res.statistic < mean_u:
            direction = "lower_with_bots"
        else:
            direction = "no_difference"
        out.append(LabeledTest(label, res, direction))
    return out


@dataclass
class CorrelationRow:
    vector: str
    label: str
    result: Optional[TestResult]
    error: Optional[str] = None


def correlation_table(profiles: Sequence[RiskProfile]) -> list[CorrelationRow]:
    """Spearman rho of bot_rate against each risk vector, infected orgs only."""
    infected = [p for p in profiles if p.bot_rate > 0]
    if len(infected) < 3:
        raise InsufficientData("correlation table needs at least 3 organizations with bot_rate > 0")
    bots = [p.bot_rate for p in infected]
    rows = []
    for attr, label in CORRELATION_VECTORS:
        try:
            res = spearman([getattr(p, attr) for p in infected], bots)
            rows.append(CorrelationRow(attr, label, res))
        except DataError as exc:
            rows.append(CorrelationRow(attr, label, None, str(exc)))
    return rows


def loglog_slope(profiles: Sequence[RiskProfile], ci_level: float = 0.98) -> RegressionFit:
    """Bivariate fit of ln(bot_rate) on ln(p2p_rate) over orgs with both positive."""
    xs, ys = [], []
    for p in profiles:
        if p.bot_rate > 0 and p.p2p_rate > 0:
            xs.append(math.log(p.p2p_rate))
            ys.append(math.log(p.bot_rate))
    if len(xs) < 3:
        raise InsufficientData("log-log slope needs at least 3 organizations with bots and sharing")
    X = np.column_stack([np.array(xs), np.ones(len(xs))])
    return fit_ols(X, np.array(ys), ["ln_p2p_rate", "intercept"], ci_level)


@dataclass
class KsPair:
    industry_a: str
    industry_b: str
    result: TestResult
    significant: bool


@dataclass
class KsMatrix:
    pairs: list[KsPair]
    alpha: float
    skipped: dict[str, str] = field(default_factory=dict)

    @property
    def fraction_significant(self) -> float:
        if not self.pairs:
            return 0.0
        return sum(p.significant for p in self.pairs) / len(self.pairs)


def industry_ks_matrix(profiles: Sequence[RiskProfile], alpha: float = 0.01,
                       min_orgs: int = 5) -> KsMatrix:
    """Two-sample KS on bot_rate for every unordered pair of industries.

    All orgs count, including those with no infections; industries with fewer
    than ``min_orgs`` orgs are skipped.
    """
    groups: dict[str, list[float]] = {}
    for p in profiles:
        groups.setdefault(p.industry, []).append(p.bot_rate)
    skipped = {k: f"only {len(v)} organizations" for k, v in sorted(groups.items()) if len(v) < min_orgs}
    labels = sorted(k for k, v in groups.items() if len(v) >= min_orgs)
    arrays = {k: np.array(groups[k]) for k in labels}
    pairs = list(combinations(labels, 2))

    def one(pair):
        a, b = pair
        res = ks_two_sample(arrays[a], arrays[b])
        return KsPair(a, b, res, res.p_value < alpha)

    with ThreadPoolExecutor(max_workers=worker_count()) as pool:
        results = list(pool.map(one, pairs))
    return KsMatrix(results, alpha, skipped)


@dataclass
class BreachAssociation:
    bot: TestResult
    p2p: TestResult
    bot_table: list[list[int]]
    p2p_table: list[list[int]]
    n_breached: int
    unknown_orgs: int


def breach_association(profiles: Sequence[RiskProfile], breaches: Iterable[BreachEvent]) -> BreachAssociation:
    """G-tests of breach x bot_present and breach x p2p_present.

    Table rows are breached / not breached; columns are factor present / absent.
    """
    known = {p.org_id for p in profiles}
    breached = set()
    unknown = set()
    for b in breaches:
        (breached if b.org_id in known else unknown).add(b.org_id)
    flags = [p.org_id in breached for p in profiles]
    bot_table = _table(flags, [p.bot_present for p in profiles])
    p2p_table = _table(flags, [p.p2p_present for p in profiles])
    return BreachAssociation(g_test(bot_table), g_test(p2p_table), bot_table, p2p_table,
                             len(breached), len(unknown))
