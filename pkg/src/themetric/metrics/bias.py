"""Catalog coverage, theme shares, exposure ratios and per-theme popularity ratios."""

from __future__ import annotations

from dataclasses import dataclass
from typing import Literal

import numpy as np

from ..corpus import Ratings, ThemeCatalog
from ..recengine.base import RecommendationSet

RecBasis = Literal["slots", "unique"]
TrainBasis = Literal["unique", "interactions"]


def item_coverage(recs: RecommendationSet, n_items: int) -> float:
    """Fraction of the catalog that appears in at least one list."""
    flat = recs.items[recs.items >= 0]
    return len(np.unique(flat)) / n_items


def _shares(counts: np.ndarray) -> np.ndarray:
    total = counts.sum()
    return counts / total if total > 0 else np.zeros(len(counts))


def theme_counts_of(items: np.ndarray, catalog: ThemeCatalog, n_items: int) -> np.ndarray:
    """Theme histogram (in ``catalog.theme_ids`` order) of an item-index array."""
    pos = catalog.positions(n_items)
    return np.bincount(pos[items], minlength=catalog.n_themes)


def rec_theme_shares(
    recs: RecommendationSet, catalog: ThemeCatalog, n_items: int, basis: RecBasis = "slots"
) -> dict[int, float]:
    """
    Theme shares in recommendations, counted over list slots (an item shown to
    ten users counts ten times) or over distinct recommended items.
    """
    flat = recs.items[recs.items >= 0]
    if basis == "unique":
        flat = np.unique(flat)
    elif basis != "slots":
        raise ValueError(f"unknown basis {basis!r}")
    shares = _shares(theme_counts_of(flat, catalog, n_items))
    return dict(zip(catalog.theme_ids, shares.tolist()))


def train_theme_shares(
    train: Ratings, catalog: ThemeCatalog, basis: TrainBasis = "unique"
) -> dict[int, float]:
    """Theme shares over unique train items, or over train interactions."""
    if basis == "unique":
        items = np.flatnonzero(train.item_counts > 0)
    elif basis == "interactions":
        items = train.items
    else:
        raise ValueError(f"unknown basis {basis!r}")
    shares = _shares(theme_counts_of(items, catalog, train.n_items))
    return dict(zip(catalog.theme_ids, shares.tolist()))


@dataclass(frozen=True)
class ThemeExposure:
    share_in_recs: float
    share_in_train: float
    ratio: float | None

    @property
    def defined(self) -> bool:
        return self.ratio is not None


@dataclass(frozen=True)
class ExposureReport:
    themes: dict[int, ThemeExposure]
    rec_basis: str
    train_basis: str

    def ranked(self) -> list[tuple[int, float]]:
        """Defined ratios, largest first (ties by theme id)."""
        pairs = [(t, e.ratio) for t, e in self.themes.items() if e.ratio is not None]
        return sorted(pairs, key=lambda p: (-p[1], p[0]))

    def ratio(self, theme_id: int) -> float | None:
        return self.themes[theme_id].ratio


def exposure_ratio(
    recs: RecommendationSet,
    train: Ratings,
    catalog: ThemeCatalog,
    rec_basis: RecBasis = "slots",
    train_basis: TrainBasis = "unique",
) -> ExposureReport:
    """Per-theme share in recommendations divided by share in training data."""
    rec = rec_theme_shares(recs, catalog, train.n_items, rec_basis)
    base = train_theme_shares(train, catalog, train_basis)
    out = {}
    for t in catalog.theme_ids:
        ratio = rec[t] / base[t] if base[t] > 0 else None
        out[t] = ThemeExposure(rec[t], base[t], ratio)
    return ExposureReport(out, rec_basis, train_basis)


def avg_popularity_ratio(train: Ratings, catalog: ThemeCatalog) -> dict[int, float | None]:
    """
    Mean, over a theme's items, of each item's share of all train interactions.

    Themes without items map to ``None``.
    """
    if len(train) == 0:
        raise ValueError("empty train set")
    ratio = train.item_counts / len(train)
    pos = catalog.positions(train.n_items)
    sums = np.bincount(pos, weights=ratio, minlength=catalog.n_themes)
    sizes = np.bincount(pos, minlength=catalog.n_themes)
    return {
        t: (float(sums[p] / sizes[p]) if sizes[p] else None)
        for p, t in enumerate(catalog.theme_ids)
    }
