"""Independent reference implementations the tests compare against.

Everything here is deliberately naive: quadratic scans, closed forms, no
shared code with the package. If a package optimization ever changes
behavior, these are the ground truth that catches it.
"""

from __future__ import annotations

import math

import numpy as np


def greedy_match_oracle(t_ids, t_scores, c_ids, c_scores, order="desc"):
    """Brute-force greedy 1:1 nearest matching.

    Treated units are processed hardest-first (descending score, ties by
    ascending id) unless another order is requested. For each one, every
    still-unused control is scanned and the minimizer of
    (absolute distance, control id) wins. Returns (pairs, unmatched_treated,
    unmatched_controls) with pairs as (treated_id, control_id, distance)
    tuples in processing order.
    """
    t = list(zip((int(i) for i in t_ids), (float(s) for s in t_scores)))
    if order == "desc":
        t.sort(key=lambda x: (-x[1], x[0]))
    elif order == "asc":
        t.sort(key=lambda x: (x[1], x[0]))
    elif order == "row":
        t.sort(key=lambda x: x[0])
    else:
        raise ValueError(f"unknown order {order!r}")

    remaining = {int(i): float(s) for i, s in zip(c_ids, c_scores)}
    pairs = []
    unmatched_t = []
    for tid, ts in t:
        if not remaining:
            unmatched_t.append(tid)
            continue
        best = min(remaining.items(), key=lambda kv: (abs(ts - kv[1]), kv[0]))
        cid, cs = best
        del remaining[cid]
        pairs.append((tid, cid, abs(ts - cs)))
    return pairs, sorted(unmatched_t), sorted(remaining)


def two_by_two_design():
    """A saturated binary-predictor problem with a closed-form MLE.

    x = 0: 10 successes, 10 failures; x = 1: 20 successes, 5 failures.
    The MLE of a saturated model reproduces the empirical cell frequencies,
    so intercept = log(10/10) = 0 and slope = log odds ratio = log 4.
    """
    x = np.concatenate([np.zeros(20), np.ones(25)])
    y = np.concatenate([np.ones(10), np.zeros(10), np.ones(20), np.zeros(5)])
    X = np.column_stack([np.ones(45), x])
    intercept = math.log(10 / 10)
    slope = math.log((20 / 5) / (10 / 10))
    cell_probs = {0: 10 / 20, 1: 20 / 25}
    return X, y, intercept, slope, cell_probs


def normal_two_sided_p(z: float) -> float:
    """Two-sided normal tail probability, straight from the erf definition."""
    return math.erfc(abs(z) / math.sqrt(2.0))


def smd_by_hand(values, group) -> float:
    """Textbook standardized mean difference with n-1 variances."""
    values = np.asarray(values, dtype=float)
    group = np.asarray(group)
    a = values[group == 1]
    b = values[group != 1]
    sa = a.var(ddof=1)
    sb = b.var(ddof=1)
    return float((a.mean() - b.mean()) / math.sqrt((sa + sb) / 2.0))
