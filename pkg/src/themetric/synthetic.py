"""
Seeded synthetic corpora for tests, demos and scale checks.

Nothing here is needed to audit real data.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

import numpy as np

from .corpus import Interaction, ItemRecord


def block_interactions(
    n_users: int = 200,
    n_items: int = 100,
    per_user: int = 45,
    noise: float = 0.05,
    skew: float = 1.0,
    seed: int = 0,
) -> list[Interaction]:
    """
    Two user groups, two item blocks; each group loves its own block.

    Each user rates ``per_user`` items: a ``noise`` fraction drawn uniformly
    from the other block (rated 1-4) and the rest from their own block (rated
    7-10), where own-block item ``r`` (0-based) is drawn with weight
    ``1 / (r + 1) ** skew``.
    """
    rng = np.random.default_rng(seed)
    half_u, half_i = n_users // 2, n_items // 2
    n_noise = int(round(noise * per_user))
    w = 1.0 / np.arange(1, half_i + 1) ** skew
    w /= w.sum()
    out = []
    for u in range(n_users):
        own = np.arange(half_i) if u < half_u else np.arange(half_i, n_items)
        other = np.arange(half_i, n_items) if u < half_u else np.arange(half_i)
        liked = rng.choice(own, per_user - n_noise, replace=False, p=w)
        disliked = rng.choice(other, n_noise, replace=False)
        for i in liked:
            out.append(Interaction(f"u{u:05d}", f"i{i:05d}", int(rng.integers(7, 11))))
        for i in disliked:
            out.append(Interaction(f"u{u:05d}", f"i{i:05d}", int(rng.integers(1, 5))))
    return out


@dataclass
class Corpus:
    interactions: list[Interaction]
    items: list[ItemRecord]
    themes: dict[int, str]

    def write(self, directory) -> dict[str, Path]:
        """Write ``interactions.csv``, ``items.csv`` and ``themes.csv``."""
        d = Path(directory)
        d.mkdir(parents=True, exist_ok=True)
        paths = {k: d / f"{k}.csv" for k in ("interactions", "items", "themes")}
        with paths["interactions"].open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["user_id", "item_id", "rating"])
            w.writerows(self.interactions)
        with paths["items"].open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["item_id", "theme_id", "title", "author"])
            for r in self.items:
                w.writerow([r.item_id, "" if r.theme_id is None else r.theme_id, r.title, r.author])
        with paths["themes"].open("w", encoding="utf-8", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["theme_id", "label"])
            w.writerows(sorted(self.themes.items()))
        return paths


def themed_corpus(
    n_users: int = 1000,
    n_items: int = 500,
    n_themes: int = 5,
    mean_ratings: float = 14.0,
    theme_sizes: Sequence[float] | None = None,
    popularity_skew: float = 0.8,
    taste_concentration: float = 0.5,
    amplified_theme: int | None = None,
    amplification: float = 30.0,
    seed: int = 0,
) -> Corpus:
    """
    Users with Dirichlet theme tastes rating Zipf-popular items.

    Args:
        theme_sizes:
            Relative number of items per theme (default equal).
        popularity_skew:
            Zipf exponent of item engagement weights; ``0`` makes popularity
            independent of anything, including theme.
        taste_concentration:
            Dirichlet concentration of user theme preferences; small values
            give specialists.
        amplified_theme:
            Theme whose items get their engagement weight multiplied by
            ``amplification``.
    """
    rng = np.random.default_rng(seed)
    sizes = np.ones(n_themes) if theme_sizes is None else np.asarray(theme_sizes, dtype=float)
    counts = np.floor(sizes / sizes.sum() * n_items).astype(int)
    counts[np.argmax(sizes)] += n_items - counts.sum()
    item_theme = rng.permutation(np.repeat(np.arange(n_themes), counts))
    weight = 1.0 / np.arange(1, n_items + 1) ** popularity_skew
    weight = rng.permutation(weight)
    if amplified_theme is not None:
        weight[item_theme == amplified_theme] *= amplification

    inter = []
    n_per = np.clip(rng.poisson(mean_ratings - 5, n_users) + 5, 5, min(200, n_items))
    for u in range(n_users):
        taste = rng.dirichlet(np.full(n_themes, taste_concentration))
        p = taste[item_theme] * weight
        p /= p.sum()
        n = min(n_per[u], int(np.count_nonzero(p)))
        chosen = rng.choice(n_items, n, replace=False, p=p)
        ratings = np.clip(np.round(rng.normal(7.8, 1.6, n)), 1, 10).astype(int)
        inter.extend(
            Interaction(f"u{u:05d}", f"b{i:05d}", int(r)) for i, r in zip(chosen, ratings)
        )
    items = [
        ItemRecord(f"b{i:05d}", int(item_theme[i]), f"Title {i}", f"Author {i % 97}")
        for i in range(n_items)
    ]
    themes = {t: f"theme_{t:02d}" for t in range(n_themes)}
    return Corpus(inter, items, themes)
