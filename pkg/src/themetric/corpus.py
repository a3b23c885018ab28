"""
Rating and theme ingestion, preprocessing, splitting and the popular-item subset.

Everything downstream works on dense integer indices.  External user and item
keys survive only in :class:`IndexedDataset` (``user_ids`` / ``item_ids``),
which is what report writers use to translate indices back.
"""

from __future__ import annotations

import csv
import logging
import math
import re
import unicodedata
from collections import Counter
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path
from typing import Iterable, Mapping, NamedTuple, Sequence

import numpy as np
import scipy.sparse as sp

from .errors import DataError

_log = logging.getLogger(__name__)

MIN_USER_RATINGS = 5
MAX_USER_RATINGS = 200
MIN_ITEM_RATINGS = 5

INTERACTION_HEADER = ["user_id", "item_id", "rating"]
THEME_HEADER = ["theme_id", "label"]


class Interaction(NamedTuple):
    user_id: str
    item_id: str
    rating: int


class ItemRecord(NamedTuple):
    item_id: str
    theme_id: int | None = None
    title: str = ""
    author: str = ""


@dataclass(frozen=True, eq=False)
class Ratings:
    """
    A set of (user, item, rating) triples over a fixed index space.

    Triples are kept sorted by user, then item.  Train, validation and test
    partitions all use this type so every consumer sees the same shape.
    """

    users: np.ndarray
    items: np.ndarray
    ratings: np.ndarray
    n_users: int
    n_items: int

    @classmethod
    def from_arrays(cls, users, items, ratings, n_users: int, n_items: int) -> Ratings:
        users = np.asarray(users, dtype=np.int64)
        items = np.asarray(items, dtype=np.int64)
        ratings = np.asarray(ratings, dtype=np.float64)
        order = np.lexsort((items, users))
        return cls(users[order], items[order], ratings[order], n_users, n_items)

    def __len__(self) -> int:
        return len(self.users)

    @cached_property
    def csr(self) -> sp.csr_matrix:
        """User-by-item rating matrix."""
        m = sp.csr_matrix(
            (self.ratings, (self.users, self.items)), shape=(self.n_users, self.n_items)
        )
        m.sort_indices()
        return m

    @cached_property
    def csc(self) -> sp.csc_matrix:
        m = self.csr.tocsc()
        m.sort_indices()
        return m

    def user_items(self, u: int) -> np.ndarray:
        m = self.csr
        return m.indices[m.indptr[u] : m.indptr[u + 1]]

    def item_users(self, i: int) -> np.ndarray:
        m = self.csc
        return m.indices[m.indptr[i] : m.indptr[i + 1]]

    @cached_property
    def user_counts(self) -> np.ndarray:
        return np.bincount(self.users, minlength=self.n_users)

    @cached_property
    def item_counts(self) -> np.ndarray:
        return np.bincount(self.items, minlength=self.n_items)

    def pairs(self) -> set[tuple[int, int]]:
        return set(zip(self.users.tolist(), self.items.tolist()))

    def triples(self) -> set[tuple[int, int, float]]:
        return set(zip(self.users.tolist(), self.items.tolist(), self.ratings.tolist()))

    def subset(self, mask: np.ndarray) -> Ratings:
        return Ratings(
            self.users[mask], self.items[mask], self.ratings[mask], self.n_users, self.n_items
        )

    def relevant_sets(self, threshold: float | None = None) -> dict[int, set[int]]:
        """Per-user item sets, optionally keeping only ratings >= ``threshold``."""
        keep = np.ones(len(self), dtype=bool) if threshold is None else self.ratings >= threshold
        out: dict[int, set[int]] = {}
        for u, i in zip(self.users[keep].tolist(), self.items[keep].tolist()):
            out.setdefault(u, set()).add(i)
        return out


@dataclass(frozen=True, eq=False)
class IndexedDataset:
    user_ids: tuple[str, ...]
    item_ids: tuple[str, ...]
    ratings: Ratings
    #: original item key -> canonical key, for items merged as duplicates
    aliases: Mapping[str, str] = field(default_factory=dict)

    @property
    def n_users(self) -> int:
        return len(self.user_ids)

    @property
    def n_items(self) -> int:
        return len(self.item_ids)

    @cached_property
    def user_index(self) -> dict[str, int]:
        return {k: i for i, k in enumerate(self.user_ids)}

    @cached_property
    def item_index(self) -> dict[str, int]:
        return {k: i for i, k in enumerate(self.item_ids)}

    @property
    def sparsity(self) -> float:
        return 1.0 - len(self.ratings) / (self.n_users * self.n_items)

    def interactions(self) -> list[Interaction]:
        r = self.ratings
        return [
            Interaction(self.user_ids[u], self.item_ids[i], int(v))
            for u, i, v in zip(r.users.tolist(), r.items.tolist(), r.ratings.tolist())
        ]


@dataclass(frozen=True, eq=False)
class DataSplit:
    train: Ratings
    valid: Ratings
    test: Ratings
    seed: int


@dataclass(frozen=True, eq=False)
class PopularitySet:
    fraction: float
    members: frozenset[int]
    counts: np.ndarray

    @cached_property
    def mask(self) -> np.ndarray:
        m = np.zeros(len(self.counts), dtype=bool)
        m[list(self.members)] = True
        return m

    def __contains__(self, item: int) -> bool:
        return item in self.members

    def __len__(self) -> int:
        return len(self.members)


@dataclass(frozen=True, eq=False)
class ThemeCatalog:
    """
    Single-label item -> theme assignment.

    ``assignment`` is keyed by external item id as loaded, or by dense item
    index after :meth:`align`.
    """

    themes: Mapping[int, str]
    assignment: Mapping[object, int]
    records: tuple[ItemRecord, ...] = field(default=(), repr=False)
    _cache: dict = field(default_factory=dict, repr=False, compare=False)

    def __post_init__(self):
        dangling = sorted({t for t in self.assignment.values() if t not in self.themes})
        if dangling:
            raise DataError(f"items reference unknown theme ids: {dangling}")

    @property
    def theme_ids(self) -> list[int]:
        return sorted(self.themes)

    @property
    def n_themes(self) -> int:
        return len(self.themes)

    def align(self, ds: IndexedDataset) -> ThemeCatalog:
        """Re-key the assignment by ``ds`` item index, following duplicate merges."""
        by_canonical: dict[str, int] = {}
        for orig, canon in sorted(ds.aliases.items()):
            if orig in self.assignment and canon not in by_canonical:
                by_canonical[canon] = self.assignment[orig]
        out = {}
        for idx, key in enumerate(ds.item_ids):
            if key in self.assignment:
                out[idx] = self.assignment[key]
            elif key in by_canonical:
                out[idx] = by_canonical[key]
        return ThemeCatalog(dict(self.themes), out, self.records)

    def item_themes(self, n_items: int) -> np.ndarray:
        """Theme id per item index; every item must be assigned."""
        arr = np.empty(n_items, dtype=np.int64)
        missing = []
        for i in range(n_items):
            t = self.assignment.get(i)
            if t is None:
                missing.append(i)
            else:
                arr[i] = t
        if missing:
            raise DataError(f"items without a theme: {missing[:20]}")
        return arr

    def positions(self, n_items: int) -> np.ndarray:
        """Column position (in ``theme_ids`` order) of each item's theme."""
        key = ("positions", n_items)
        if key not in self._cache:
            self._cache[key] = self.theme_positions(self.item_themes(n_items))
        return self._cache[key]

    def theme_positions(self, item_themes: np.ndarray) -> np.ndarray:
        """Map theme ids to column positions in ``theme_ids`` order."""
        lookup = {t: p for p, t in enumerate(self.theme_ids)}
        return np.array([lookup[t] for t in item_themes.tolist()], dtype=np.int64)


def _open_csv(path, header: list[str], optional: Sequence[str] = ()):
    path = Path(path)
    if not path.is_file():
        raise DataError(f"missing file: {path}")
    fh = path.open("r", encoding="utf-8", newline="")
    reader = csv.reader(fh)
    got = next(reader, None)
    allowed = [header + list(optional[:n]) for n in range(len(optional) + 1)]
    if got is None or [h.strip() for h in got] not in allowed:
        fh.close()
        raise DataError(f"{path}:1: expected header {','.join(header + list(optional))}, got {got}")
    return fh, reader, len(got)


def load_interactions(path) -> list[Interaction]:
    """Parse an ``user_id,item_id,rating`` file, in file order."""
    fh, reader, _ = _open_csv(path, INTERACTION_HEADER)
    out = []
    with fh:
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != 3:
                raise DataError(f"{path}:{line}: expected 3 columns, got {len(row)}")
            user, item, raw = (c.strip() for c in row)
            try:
                rating = int(raw)
            except ValueError:
                raise DataError(f"{path}:{line}: rating {raw!r} is not an integer") from None
            if not 0 <= rating <= 10:
                raise DataError(f"{path}:{line}: rating {rating} outside [0, 10]")
            out.append(Interaction(user, item, rating))
    return out


def load_items(path) -> list[ItemRecord]:
    fh, reader, width = _open_csv(path, ["item_id", "theme_id"], optional=("title", "author"))
    out = []
    with fh:
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != width:
                raise DataError(f"{path}:{line}: expected {width} columns, got {len(row)}")
            row = row + [""] * (4 - width)
            item, theme, title, author = row
            theme = theme.strip()
            try:
                theme_id = int(theme) if theme else None
            except ValueError:
                raise DataError(f"{path}:{line}: theme_id {theme!r} is not an integer") from None
            out.append(ItemRecord(item.strip(), theme_id, title, author))
    return out


def load_themes(path) -> dict[int, str]:
    fh, reader, _ = _open_csv(path, THEME_HEADER)
    themes: dict[int, str] = {}
    with fh:
        for row in reader:
            line = reader.line_num
            if not row:
                continue
            if len(row) != 2:
                raise DataError(f"{path}:{line}: expected 2 columns, got {len(row)}")
            try:
                tid = int(row[0])
            except ValueError:
                raise DataError(f"{path}:{line}: theme_id {row[0]!r} is not an integer") from None
            if tid in themes:
                raise DataError(f"{path}:{line}: duplicate theme_id {tid}")
            themes[tid] = row[1]
    return dict(sorted(themes.items()))


def build_catalog(themes: Mapping[int, str], items: Iterable[ItemRecord]) -> ThemeCatalog:
    items = tuple(items)
    counts = Counter(r.item_id for r in items)
    dupes = sorted(k for k, n in counts.items() if n > 1)
    if dupes:
        raise DataError(f"duplicate item ids in catalog: {dupes}")
    assignment = {r.item_id: r.theme_id for r in items if r.theme_id is not None}
    return ThemeCatalog(dict(themes), assignment, items)


def load_theme_catalog(items_path, themes_path) -> ThemeCatalog:
    return build_catalog(load_themes(themes_path), load_items(items_path))


_PUNCT = dict.fromkeys(
    i for i in range(0x110000) if unicodedata.category(chr(i)).startswith("P")
)
_SPACE = re.compile(r"\s+")


def normalize_key(title: str, author: str) -> str:
    """Duplicate-merge key: lowercased, punctuation stripped, whitespace collapsed."""

    def norm(s: str) -> str:
        return _SPACE.sub(" ", s.lower().translate(_PUNCT)).strip()

    return f"{norm(title)}|{norm(author)}"


def duplicate_aliases(items: Iterable[ItemRecord]) -> dict[str, str]:
    """Map each item id to the smallest id sharing its normalized title+author."""
    groups: dict[str, list[str]] = {}
    for r in items:
        if r.title.strip() and r.author.strip():
            groups.setdefault(normalize_key(r.title, r.author), []).append(r.item_id)
    aliases = {}
    for ids in groups.values():
        if len(set(ids)) > 1:
            canon = min(ids)
            for i in ids:
                if i != canon:
                    aliases[i] = canon
    return aliases


def _filter_fixpoint(users: np.ndarray, items: np.ndarray) -> np.ndarray:
    n_users = int(users.max()) + 1
    n_items = int(items.max()) + 1
    keep = np.ones(len(users), dtype=bool)
    while True:
        uc = np.bincount(users[keep], minlength=n_users)
        ic = np.bincount(items[keep], minlength=n_items)
        ok_user = (uc >= MIN_USER_RATINGS) & (uc <= MAX_USER_RATINGS)
        ok_item = ic >= MIN_ITEM_RATINGS
        new_keep = keep & ok_user[users] & ok_item[items]
        if np.array_equal(new_keep, keep):
            return keep
        keep = new_keep


def preprocess(raw: Sequence[Interaction], items: Iterable[ItemRecord] = ()) -> IndexedDataset:
    """
    Clean raw interactions into an :class:`IndexedDataset`.

    Drops implicit (zero) ratings, merges duplicate items by normalized
    title+author, keeps the first rating when a user rated an item twice, then
    removes users outside [5, 200] ratings and items under 5 ratings, repeating
    until nothing changes.  Dense indices follow sorted external keys.
    """
    aliases = duplicate_aliases(items)
    seen: set[tuple[str, str]] = set()
    rows: list[tuple[str, str, int]] = []
    for r in raw:
        if r.rating == 0:
            continue
        item = aliases.get(r.item_id, r.item_id)
        key = (r.user_id, item)
        if key in seen:
            continue
        seen.add(key)
        rows.append((r.user_id, item, r.rating))
    if not rows:
        raise DataError("no data survives preprocessing")

    ukeys, uinv = np.unique([r[0] for r in rows], return_inverse=True)
    ikeys, iinv = np.unique([r[1] for r in rows], return_inverse=True)
    vals = np.array([r[2] for r in rows], dtype=np.float64)
    keep = _filter_fixpoint(uinv, iinv)
    if not keep.any():
        raise DataError("no data survives preprocessing")

    used_u = np.unique(uinv[keep])
    used_i = np.unique(iinv[keep])
    umap = np.full(len(ukeys), -1)
    umap[used_u] = np.arange(len(used_u))
    imap = np.full(len(ikeys), -1)
    imap[used_i] = np.arange(len(used_i))
    user_ids = tuple(str(k) for k in ukeys[used_u])
    item_ids = tuple(str(k) for k in ikeys[used_i])
    ratings = Ratings.from_arrays(
        umap[uinv[keep]], imap[iinv[keep]], vals[keep], len(user_ids), len(item_ids)
    )
    kept_items = set(item_ids)
    live_aliases = {k: v for k, v in aliases.items() if v in kept_items}
    _log.info(
        "preprocess: %d raw rows -> %d users, %d items, %d ratings",
        len(raw),
        len(user_ids),
        len(item_ids),
        len(ratings),
    )
    return IndexedDataset(user_ids, item_ids, ratings, live_aliases)


def dataset_summary(ds: IndexedDataset) -> dict:
    """Table-1 style statistics for a preprocessed dataset."""
    r = ds.ratings.ratings
    return {
        "users": ds.n_users,
        "items": ds.n_items,
        "interactions": len(r),
        "sparsity": ds.sparsity,
        "avg_rating": float(np.mean(r)),
        "median_rating": float(np.median(r)),
        "ratings_per_user": len(r) / ds.n_users,
        "ratings_per_item": len(r) / ds.n_items,
    }


def split(
    ds: IndexedDataset, seed: int, ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
) -> DataSplit:
    """
    Per-user shuffled train/validation/test split.

    Each user's interactions are permuted by a generator seeded once from
    ``seed``; the first ``floor(test_ratio * n)`` go to test, the next
    ``floor(valid_ratio * n)`` to validation and the remainder to train.
    """
    _, valid_ratio, test_ratio = ratios
    rng = np.random.default_rng(seed)
    r = ds.ratings
    part = np.zeros(len(r), dtype=np.int8)  # 0 train, 1 valid, 2 test
    bounds = np.concatenate([[0], np.cumsum(r.user_counts)])
    for u in range(ds.n_users):
        lo, hi = bounds[u], bounds[u + 1]
        n = hi - lo
        n_test = math.floor(test_ratio * n + 1e-9)
        n_valid = math.floor(valid_ratio * n + 1e-9)
        perm = rng.permutation(n) + lo
        part[perm[:n_test]] = 2
        part[perm[n_test : n_test + n_valid]] = 1
    return DataSplit(r.subset(part == 0), r.subset(part == 1), r.subset(part == 2), seed)


def _top_count(fraction: float, n: int) -> int:
    return max(1, math.ceil(fraction * n - 1e-9))


def popular_set(train: Ratings, fraction: float = 0.2) -> PopularitySet:
    """Top ``ceil(fraction * n_items)`` items by train count, ties to lower index."""
    if not 0 < fraction <= 1:
        raise ValueError(f"fraction must be in (0, 1], got {fraction}")
    if len(train) == 0:
        raise DataError("cannot define popular items from an empty train set")
    counts = train.item_counts
    order = np.lexsort((np.arange(len(counts)), -counts))
    n_pop = _top_count(fraction, train.n_items)
    return PopularitySet(fraction, frozenset(order[:n_pop].tolist()), counts)


def theme_distribution(item_set: Iterable[int], catalog: ThemeCatalog) -> dict[int, float]:
    """Share of each theme among a set of unique items (zero-share themes included)."""
    counts = dict.fromkeys(catalog.theme_ids, 0)
    n = 0
    for i in set(item_set):
        t = catalog.assignment.get(i)
        if t is None:
            raise DataError(f"item {i} has no theme")
        counts[t] += 1
        n += 1
    if n == 0:
        return {t: 0.0 for t in counts}
    return {t: c / n for t, c in counts.items()}
