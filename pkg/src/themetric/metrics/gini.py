from __future__ import annotations

from typing import Literal

import numpy as np
from numpy.typing import ArrayLike

SupportMode = Literal["nonzero", "full"]


def gini(counts: ArrayLike, support: SupportMode = "nonzero") -> float:
    """
    Gini coefficient of a nonnegative count vector.

    Args:
        counts:
            Per-category counts, e.g. how many of a user's books fall in each
            theme.
        support:
            ``"nonzero"`` ignores empty categories; ``"full"`` keeps every
            entry, so a point mass over ``n`` categories scores ``(n-1)/n``.

    Returns:
        ``sum_i (2i - n - 1) x_i / (n sum x)`` over the ascending-sorted
        support, in ``[0, 1)``.
    """
    xs = np.asarray(counts, dtype=np.float64).ravel()
    if np.any(xs < 0):
        raise ValueError("gini is undefined for negative counts")
    if support == "nonzero":
        xs = xs[xs > 0]
    elif support != "full":
        raise ValueError(f"unknown support mode {support!r}")
    total = xs.sum()
    if total <= 0:
        raise ValueError("gini is undefined for an all-zero vector")
    n = len(xs)
    xs = np.sort(xs)
    ranks = 2.0 * np.arange(1, n + 1) - n - 1
    return max(float(np.dot(ranks, xs) / (n * total)), 0.0)
