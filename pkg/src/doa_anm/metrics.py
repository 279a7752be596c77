"""Estimate-to-truth assignment and angular RMSE."""

from __future__ import annotations

import numpy as np
from scipy.optimize import linear_sum_assignment

from .array_model import SourceConfig
from .retrieval import DoaEstimate, canonical_angle

# squared error charged per angle dimension for a source with no estimate
MISS_PENALTY_DEG = 90.0


def matched_squared_errors(truth: SourceConfig, estimate: DoaEstimate) -> np.ndarray:
    """Per-source squared error summed over (alpha, beta), after optimal assignment.

    Truth angles are compared through their identifiable representative
    (see :func:`canonical_angle`). Sources left unmatched because the
    estimate has too few pairs are charged ``2 * MISS_PENALTY_DEG**2``;
    surplus estimates are ignored.
    """
    t = np.column_stack([canonical_angle(truth.alpha), canonical_angle(truth.beta)])
    out = np.full(len(t), 2.0 * MISS_PENALTY_DEG ** 2)
    if estimate.k_hat == 0:
        return out
    e = np.column_stack([estimate.alpha, estimate.beta])
    cost = ((t[:, None, :] - e[None, :, :]) ** 2).sum(axis=-1)
    rows, cols = linear_sum_assignment(cost)
    out[rows] = cost[rows, cols]
    return out


def match_and_rmse(truth: SourceConfig, estimate: DoaEstimate) -> float:
    """RMSE in degrees over all true sources and both angle dimensions."""
    se = matched_squared_errors(truth, estimate)
    return float(np.sqrt(se.sum() / (2 * len(se))))
