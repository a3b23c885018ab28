"""
Chi-squared tests on 2x2 tables, with a self-contained upper-tail kernel.

The tail probability is the regularized upper incomplete gamma function
``Q(df/2, x/2)``, evaluated by its power series below ``a + 1`` and by a
Lentz continued fraction above.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from ..corpus import PopularitySet, ThemeCatalog

ALPHA = 0.05
_EPS = 1e-16
_TINY = 1e-300
_MAX_ITER = 1000


def _gamma_series(a: float, x: float) -> float:
    # lower regularized P(a, x)
    ap = a
    term = total = 1.0 / a
    for _ in range(_MAX_ITER):
        ap += 1.0
        term *= x / ap
        total += term
        if abs(term) < abs(total) * _EPS:
            break
    return total * math.exp(-x + a * math.log(x) - math.lgamma(a))


def _gamma_cfrac(a: float, x: float) -> float:
    # upper regularized Q(a, x)
    b = x + 1.0 - a
    c = 1.0 / _TINY
    d = 1.0 / b
    h = d
    for i in range(1, _MAX_ITER + 1):
        an = -i * (i - a)
        b += 2.0
        d = an * d + b
        if abs(d) < _TINY:
            d = _TINY
        c = b + an / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < _EPS:
            break
    return math.exp(-x + a * math.log(x) - math.lgamma(a)) * h


def gammaincc(a: float, x: float) -> float:
    """Regularized upper incomplete gamma ``Q(a, x)`` for ``a > 0, x >= 0``."""
    if a <= 0:
        raise ValueError("a must be positive")
    if x < 0:
        raise ValueError("x must be nonnegative")
    if x == 0:
        return 1.0
    if x < a + 1.0:
        return min(1.0, max(0.0, 1.0 - _gamma_series(a, x)))
    return min(1.0, max(0.0, _gamma_cfrac(a, x)))


def chi2_sf(statistic: float, df: int = 1) -> float:
    """Upper-tail probability of the chi-squared distribution."""
    if statistic <= 0:
        return 1.0
    return gammaincc(df / 2.0, statistic / 2.0)


@dataclass(frozen=True)
class ChiSquareResult:
    theme_id: int | None
    statistic: float
    p_value: float
    degrees_of_freedom: int = 1
    testable: bool = True

    @property
    def significant(self) -> bool:
        return self.testable and self.p_value < ALPHA


def chi_square_2x2(table) -> ChiSquareResult:
    """
    Pearson chi-squared test of independence on a 2x2 table, no continuity
    correction.  A zero row or column margin yields a non-testable result.
    """
    obs = np.asarray(table, dtype=np.float64)
    if obs.shape != (2, 2):
        raise ValueError("expected a 2x2 table")
    rows = obs.sum(axis=1)
    cols = obs.sum(axis=0)
    total = obs.sum()
    if np.any(rows <= 0) or np.any(cols <= 0):
        return ChiSquareResult(None, math.nan, math.nan, testable=False)
    expected = np.outer(rows, cols) / total
    stat = float(np.sum((obs - expected) ** 2 / expected))
    return ChiSquareResult(None, stat, chi2_sf(stat, 1))


def theme_popularity_table(theme_id: int, popular: PopularitySet, catalog: ThemeCatalog):
    """Unique-item counts: rows (in theme, other), columns (popular, not popular)."""
    themes = catalog.item_themes(len(popular.counts))
    in_theme = themes == theme_id
    pop = popular.mask
    return np.array(
        [
            [np.sum(in_theme & pop), np.sum(in_theme & ~pop)],
            [np.sum(~in_theme & pop), np.sum(~in_theme & ~pop)],
        ]
    )


def chi_square_theme(theme_id: int, popular: PopularitySet, catalog: ThemeCatalog) -> ChiSquareResult:
    """Is membership in ``theme_id`` independent of membership in the popular set?"""
    res = chi_square_2x2(theme_popularity_table(theme_id, popular, catalog))
    return ChiSquareResult(theme_id, res.statistic, res.p_value, 1, res.testable)
