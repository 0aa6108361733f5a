"""Analytic noisy-view model of vote-based TTA on a binary task."""

from __future__ import annotations

from math import comb

import numpy as np

from ..aggregate import vote_aggregate


def simulate_noisy_tta(p_view: float, m_views: int, trials: int, seed: int = 0) -> float:
    """Fraction of simulated inputs a majority vote over noisy views gets right.

    Every view of an input is independently correct with probability
    ``p_view``. View 0 plays the original input. The gold class is 0 and a
    wrong view votes 1.
    """
    if not 0.0 <= p_view <= 1.0:
        raise ValueError(f"p_view must be in [0, 1], got {p_view}")
    if m_views < 1 or m_views % 2 == 0:
        raise ValueError(f"m_views must be a positive odd number, got {m_views}")
    if trials < 1:
        raise ValueError(f"trials must be >= 1, got {trials}")
    rng = np.random.default_rng(seed)
    wrong = rng.random((trials, m_views)) >= p_view
    hits = 0
    for row in wrong:
        if vote_aggregate(row.astype(int).tolist()).class_index == 0:
            hits += 1
    return hits / trials


def majority_accuracy(p_view: float, m_views: int) -> float:
    """Closed-form probability that a strict majority of views is correct."""
    need = m_views // 2 + 1
    return sum(comb(m_views, j) * p_view**j * (1 - p_view) ** (m_views - j) for j in range(need, m_views + 1))
