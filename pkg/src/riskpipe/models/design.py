"""Regression design: the zero-inflated peer-to-peer split and the log response."""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Sequence

import numpy as np

from ..errors import DataError, InsufficientData
from ..riskvectors import RiskProfile

# column order of the design matrix
REGRESSORS = ["t0", "t_hat", "T_CF", "T_CT", "S_Ri", "S_Re", "intercept"]
# conventional coefficient labels for the same columns
COEFFICIENT_LABELS = {
    "t0": "beta1", "t_hat": "beta2", "T_CF": "beta3", "T_CT": "beta4",
    "S_Ri": "beta5", "S_Re": "beta6", "intercept": "beta0",
}
MIN_ROWS = 10


def transform_p2p(t: float) -> tuple[int, float]:
    """Split a sharing rate into (zero indicator, log rate or 0)."""
    if not t >= 0:
        raise DataError(f"p2p rate must be >= 0, got {t}")
    if t == 0:
        return 1, 0.0
    return 0, math.log(t)


def regressor_row(p: RiskProfile) -> list[float]:
    t0, t_hat = transform_p2p(p.p2p_rate)
    return [t0, t_hat, p.tls_cfg_frac, p.tls_cert_frac, p.risky_frac, p.reasonable_frac, 1.0]


@dataclass
class Design:
    X: np.ndarray
    y: np.ndarray
    names: list[str]
    industries: list[str]
    org_ids: list[str]
    excluded: int

    @property
    def n(self) -> int:
        return self.y.size

    def subset(self, mask) -> "Design":
        mask = np.asarray(mask, dtype=bool)
        return Design(self.X[mask], self.y[mask], list(self.names),
                      [i for i, m in zip(self.industries, mask) if m],
                      [o for o, m in zip(self.org_ids, mask) if m], self.excluded)


def build_design(profiles: Sequence[RiskProfile], min_rows: int = MIN_ROWS) -> Design:
    """One row per org with bot_rate > 0; orgs without infections are excluded and counted."""
    rows, y, inds, ids = [], [], [], []
    excluded = 0
    for p in profiles:
        if p.bot_rate <= 0:
            excluded += 1
            continue
        rows.append(regressor_row(p))
        y.append(math.log(p.bot_rate))
        inds.append(p.industry)
        ids.append(p.org_id)
    if len(rows) < min_rows:
        raise InsufficientData(
            f"insufficient data: {len(rows)} organizations with bot_rate > 0, need {min_rows}")
    return Design(np.array(rows, dtype=float), np.array(y, dtype=float), list(REGRESSORS),
                  inds, ids, excluded)
