"""Independent reference computations used as test oracles."""

import math
from itertools import combinations

import numpy as np


def ranks_by_counting(x):
    """Average rank of each value: (#smaller) + (#equal + 1) / 2, O(n^2)."""
    x = np.asarray(x, dtype=float)
    less = (x[None, :] < x[:, None]).sum(axis=1)
    equal = (x[None, :] == x[:, None]).sum(axis=1)
    return less + (equal + 1) / 2.0


def pearson_of_ranks(x, y):
    rx, ry = ranks_by_counting(x), ranks_by_counting(y)
    return float(np.corrcoef(rx, ry)[0, 1])


def exact_mww_p(a, b):
    """Two-sided permutation p: share of label assignments with |U - mean| >= observed."""
    pooled = np.concatenate([a, b])
    r = ranks_by_counting(pooled)
    n1, n = len(a), len(pooled)
    mean = n1 * (n - n1) / 2.0
    base = n1 * (n1 + 1) / 2.0
    obs = abs(r[:n1].sum() - base - mean)
    hits = total = 0
    for idx in combinations(range(n), n1):
        u = r[list(idx)].sum() - base
        total += 1
        hits += abs(u - mean) >= obs - 1e-9
    return hits / total


def ks_breakpoints(a, b):
    """sup |F_a - F_b| evaluated at every pooled value by direct counting."""
    a, b = np.asarray(a), np.asarray(b)
    best = 0.0
    for v in np.concatenate([a, b]):
        best = max(best, abs(np.mean(a <= v) - np.mean(b <= v)))
    return best


def g_direct(table):
    """2 * sum O ln(O/E) written out cell by cell."""
    rows = [sum(r) for r in table]
    cols = [sum(c) for c in zip(*table)]
    n = sum(rows)
    g = 0.0
    for i, r in enumerate(table):
        for j, o in enumerate(r):
            if o:
                g += o * math.log(o / (rows[i] * cols[j] / n))
    return 2.0 * g
