"""
User segmentation by popularity propensity and thematic diversity, and the
history-versus-recommendation comparison per segment.
"""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from enum import Enum
from typing import Iterable, Mapping, Sequence

import numpy as np

from .corpus import PopularitySet, Ratings, ThemeCatalog
from .errors import DataError
from .metrics.gini import SupportMode, gini
from .recengine.base import RecommendationSet

MAINSTREAM_ABOVE = 0.7
LONGTAIL_BELOW = 0.3


class PopularityGroup(str, Enum):
    MAINSTREAM = "Mainstream"
    MIXED = "Mixed"
    LONGTAIL = "LongTail"


class DiversityGroup(str, Enum):
    SPECIALIST = "Specialist"
    MODERATE = "Moderate"
    GENERALIST = "Generalist"


@dataclass(frozen=True, eq=False)
class UserProfileStats:
    user: int
    popular_share: float
    theme_count: int
    theme_counts: np.ndarray
    gini: float


def _profile(user, items: np.ndarray, popular: PopularitySet, positions, n_themes, support):
    if len(items) == 0:
        return None
    counts = np.bincount(positions[items], minlength=n_themes)
    return UserProfileStats(
        user,
        float(np.mean(popular.mask[items])),
        int(np.count_nonzero(counts)),
        counts,
        gini(counts, support),
    )


def profile_users(
    train: Ratings,
    popular: PopularitySet,
    catalog: ThemeCatalog,
    support: SupportMode = "nonzero",
) -> list[UserProfileStats]:
    """Popular share, theme histogram and theme Gini of each user's train history."""
    pos = catalog.positions(train.n_items)
    out = []
    csr = train.csr
    for u in range(train.n_users):
        items = csr.indices[csr.indptr[u] : csr.indptr[u + 1]]
        if len(items) == 0:
            raise DataError(f"user {u} has no train interactions")
        out.append(_profile(u, items, popular, pos, catalog.n_themes, support))
    return out


def profile_recommendations(
    recs: RecommendationSet,
    popular: PopularitySet,
    catalog: ThemeCatalog,
    support: SupportMode = "nonzero",
) -> list[UserProfileStats | None]:
    """Same statistics over each user's recommendation list (``None`` for an empty list)."""
    pos = catalog.positions(len(popular.counts))
    return [
        _profile(u, recs.items_for(u), popular, pos, catalog.n_themes, support)
        for u in range(recs.n_users)
    ]


def assign_popularity_group(stats: UserProfileStats | float) -> PopularityGroup:
    """Above 0.7 Mainstream, below 0.3 LongTail, the closed band between is Mixed."""
    share = stats.popular_share if isinstance(stats, UserProfileStats) else float(stats)
    if share > MAINSTREAM_ABOVE:
        return PopularityGroup.MAINSTREAM
    if share < LONGTAIL_BELOW:
        return PopularityGroup.LONGTAIL
    return PopularityGroup.MIXED


def nearest_rank(values: Sequence[float], q: float) -> float:
    """Nearest-rank percentile: the ``ceil(q * n)``-th smallest value (1-based)."""
    xs = sorted(values)
    if not xs:
        raise ValueError("empty population")
    rank = max(1, math.ceil(q * len(xs)))
    return xs[rank - 1]


@dataclass(frozen=True)
class DiversityThresholds:
    theme_count_p25: float
    theme_count_p75: float
    gini_p25: float
    gini_p75: float

    @property
    def degenerate(self) -> bool:
        """All users share the same theme count and Gini, so everyone is a Specialist."""
        return self.theme_count_p25 == self.theme_count_p75 and self.gini_p25 == self.gini_p75


def diversity_thresholds(stats: Sequence[UserProfileStats]) -> DiversityThresholds:
    if len(stats) < 4:
        raise DataError(f"diversity percentiles need at least 4 users, got {len(stats)}")
    tc = [s.theme_count for s in stats]
    gs = [s.gini for s in stats]
    return DiversityThresholds(
        nearest_rank(tc, 0.25), nearest_rank(tc, 0.75), nearest_rank(gs, 0.25), nearest_rank(gs, 0.75)
    )


def classify_diversity(s: UserProfileStats, th: DiversityThresholds) -> DiversityGroup:
    if s.theme_count <= th.theme_count_p25 and s.gini >= th.gini_p75:
        return DiversityGroup.SPECIALIST
    if s.theme_count >= th.theme_count_p75 and s.gini <= th.gini_p25:
        return DiversityGroup.GENERALIST
    return DiversityGroup.MODERATE


def assign_diversity_groups(stats: Sequence[UserProfileStats]) -> dict[int, DiversityGroup]:
    """
    Specialist: theme count at or below P25 and Gini at or above P75.
    Generalist: theme count at or above P75 and Gini at or below P25.
    Everyone else is Moderate.  Percentiles are population-wide, nearest rank.
    """
    th = diversity_thresholds(stats)
    return {s.user: classify_diversity(s, th) for s in stats}


Cell = tuple[PopularityGroup, DiversityGroup]


def intersect_groups(
    popularity: Mapping[int, PopularityGroup], diversity: Mapping[int, DiversityGroup]
) -> dict[int, Cell]:
    if set(popularity) != set(diversity):
        diff = sorted(set(popularity) ^ set(diversity))
        raise DataError(f"group maps cover different users: {diff[:20]}")
    return {u: (popularity[u], diversity[u]) for u in sorted(popularity)}


def all_cells() -> list[Cell]:
    return [(p, d) for p in PopularityGroup for d in DiversityGroup]


def cell_name(cell: Cell) -> str:
    return f"{cell[0].value}/{cell[1].value}"


def census(cells: Mapping[int, Cell]) -> dict[str, int]:
    """Population of all nine cells, zeros included."""
    out = {cell_name(c): 0 for c in all_cells()}
    for c in cells.values():
        out[cell_name(c)] += 1
    return out


@dataclass(frozen=True)
class GroupDelta:
    dimension: str  # "popularity", "diversity" or "cell"
    group: str
    population: int
    hist_theme_count: float | None = None
    rec_theme_count: float | None = None
    hist_gini: float | None = None
    rec_gini: float | None = None
    hist_popular_share: float | None = None
    rec_popular_share: float | None = None
    dominant_theme_hist: int | None = None
    dominant_theme_rec: int | None = None

    @property
    def theme_count_delta(self) -> float | None:
        if self.hist_theme_count is None or self.rec_theme_count is None:
            return None
        return self.rec_theme_count - self.hist_theme_count

    @property
    def gini_delta(self) -> float | None:
        if self.hist_gini is None or self.rec_gini is None:
            return None
        return self.rec_gini - self.hist_gini

    @property
    def popular_share_delta(self) -> float | None:
        if self.hist_popular_share is None or self.rec_popular_share is None:
            return None
        return self.rec_popular_share - self.hist_popular_share

    def to_dict(self) -> dict:
        d = asdict(self)
        d["theme_count_delta"] = self.theme_count_delta
        d["gini_delta"] = self.gini_delta
        d["popular_share_delta"] = self.popular_share_delta
        return d


@dataclass(frozen=True)
class GroupDeltaReport:
    algorithm: str
    rows: tuple[GroupDelta, ...]

    def row(self, dimension: str, group: str) -> GroupDelta:
        for r in self.rows:
            if r.dimension == dimension and r.group == group:
                return r
        raise KeyError((dimension, group))

    def table(self, dimension: str) -> list[GroupDelta]:
        return [r for r in self.rows if r.dimension == dimension]


def _mean(xs: Iterable[float]) -> float | None:
    xs = list(xs)
    return float(np.mean(xs)) if xs else None


def _dominant(hists: list[np.ndarray], theme_ids: list[int]) -> int | None:
    if not hists:
        return None
    total = np.sum(hists, axis=0)
    if total.sum() == 0:
        return None
    return theme_ids[int(np.argmax(total))]  # argmax takes the first, i.e. lowest theme id


def _delta_row(dimension, group, members, hist, rec, theme_ids) -> GroupDelta:
    if not members:
        return GroupDelta(dimension, group, 0)
    h = [hist[u] for u in members]
    r = [rec[u] for u in members if rec[u] is not None]
    return GroupDelta(
        dimension,
        group,
        len(members),
        _mean(s.theme_count for s in h),
        _mean(s.theme_count for s in r),
        _mean(s.gini for s in h),
        _mean(s.gini for s in r),
        _mean(s.popular_share for s in h),
        _mean(s.popular_share for s in r),
        _dominant([s.theme_counts for s in h], theme_ids),
        _dominant([s.theme_counts for s in r], theme_ids),
    )


def group_delta_report(
    recs: RecommendationSet,
    stats: Sequence[UserProfileStats],
    popularity: Mapping[int, PopularityGroup],
    diversity: Mapping[int, DiversityGroup],
    catalog: ThemeCatalog,
    popular: PopularitySet,
    support: SupportMode = "nonzero",
) -> GroupDeltaReport:
    """
    Per popularity group, diversity group and intersectional cell: mean theme
    count, Gini and popular share of history versus recommendations (users
    averaged individually), plus each side's dominant theme.
    """
    hist = {s.user: s for s in stats}
    missing = [u for u in hist if u >= recs.n_users]
    if missing:
        raise DataError(f"no recommendations for users {missing[:20]}")
    rec_stats = profile_recommendations(recs, popular, catalog, support)
    rec = {u: rec_stats[u] for u in hist}
    theme_ids = catalog.theme_ids
    rows = []
    for g in PopularityGroup:
        members = [u for u in hist if popularity[u] == g]
        rows.append(_delta_row("popularity", g.value, members, hist, rec, theme_ids))
    for g in DiversityGroup:
        members = [u for u in hist if diversity[u] == g]
        rows.append(_delta_row("diversity", g.value, members, hist, rec, theme_ids))
    for c in all_cells():
        members = [u for u in hist if (popularity[u], diversity[u]) == c]
        rows.append(_delta_row("cell", cell_name(c), members, hist, rec, theme_ids))
    return GroupDeltaReport(recs.algorithm, tuple(rows))
