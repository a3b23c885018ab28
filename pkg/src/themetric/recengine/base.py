from __future__ import annotations

import logging
from dataclasses import dataclass, field, fields, replace
from typing import Protocol

import numpy as np

from ..corpus import Ratings
from ..errors import TrainingError

_log = logging.getLogger(__name__)

ALGORITHMS = ("Random", "MostPop", "MF", "PMF", "NMF", "WMF", "BPR", "UserKNN")
BASELINES = ("Random", "MostPop")

_CHUNK = 512


@dataclass(frozen=True)
class TrainConfig:
    """Hyperparameters for one training run; fields irrelevant to an algorithm are ignored."""

    algorithm: str
    factors: int = 10
    learning_rate: float = 0.01
    regularization: float = 0.01
    epochs: int = 50
    n_negatives: int = 1
    confidence: float = 1.0  # WMF weight on observed pairs
    unobserved_confidence: float = 0.01  # WMF weight on unobserved pairs
    k_neighbors: int = 20
    seed: int = 42

    def __post_init__(self):
        if self.algorithm not in ALGORITHMS:
            raise ValueError(f"unknown algorithm {self.algorithm!r}; expected one of {ALGORITHMS}")
        if self.factors < 0 or self.epochs < 1 or self.n_negatives < 1 or self.k_neighbors < 1:
            raise ValueError(f"invalid config {self}")
        if self.learning_rate <= 0 or self.regularization < 0:
            raise ValueError(f"invalid config {self}")
        if self.algorithm == "WMF" and not self.confidence >= self.unobserved_confidence > 0:
            raise ValueError("WMF needs confidence >= unobserved_confidence > 0")

    def to_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}

    @classmethod
    def from_dict(cls, d: dict) -> TrainConfig:
        return cls(**d)

    def with_seed(self, seed: int) -> TrainConfig:
        return replace(self, seed=seed)


class Recommender(Protocol):
    kind: str
    n_users: int
    n_items: int

    def score(self, users: np.ndarray) -> np.ndarray:
        """Dense ``(len(users), n_items)`` score matrix; higher is better."""
        ...


@dataclass(frozen=True, eq=False)
class RecommendationSet:
    """
    Ranked top-k lists for every user of one model.

    ``items`` is ``(n_users, k)`` padded with ``-1`` where a user had fewer
    than ``k`` candidates; ``scores`` is padded with NaN in the same places.
    """

    k: int
    items: np.ndarray
    scores: np.ndarray
    algorithm: str = ""
    exclude_seen: bool = True
    meta: dict = field(default_factory=dict)

    @property
    def n_users(self) -> int:
        return self.items.shape[0]

    @property
    def lengths(self) -> np.ndarray:
        return np.sum(self.items >= 0, axis=1)

    @property
    def short_users(self) -> np.ndarray:
        return np.flatnonzero(self.lengths < self.k)

    def items_for(self, u: int) -> np.ndarray:
        row = self.items[u]
        return row[row >= 0]

    def list_for(self, u: int) -> list[tuple[int, float]]:
        row = self.items[u]
        keep = row >= 0
        return list(zip(row[keep].tolist(), self.scores[u][keep].tolist()))

    @property
    def lists(self) -> dict[int, list[tuple[int, float]]]:
        return {u: self.list_for(u) for u in range(self.n_users)}

    def same_lists(self, other: RecommendationSet) -> bool:
        return self.k == other.k and np.array_equal(self.items, other.items)


def topk_rows(scores: np.ndarray, k: int) -> tuple[np.ndarray, np.ndarray]:
    """
    Top-k of each row by descending score, ties to the lower column index.

    ``-inf`` entries are treated as unavailable and never returned.
    """
    n_rows, n_cols = scores.shape
    out_i = np.full((n_rows, k), -1, dtype=np.int64)
    out_s = np.full((n_rows, k), np.nan)
    if n_cols == 0:
        return out_i, out_s
    kk = min(k, n_cols)
    kth = np.partition(scores, n_cols - kk, axis=1)[:, n_cols - kk]
    for r in range(n_rows):
        row = scores[r]
        cand = np.flatnonzero((row >= kth[r]) & (row > -np.inf))
        order = np.lexsort((cand, -row[cand]))[:kk]
        sel = cand[order]
        out_i[r, : len(sel)] = sel
        out_s[r, : len(sel)] = row[sel]
    return out_i, out_s


def recommend_topk(
    model: Recommender, train: Ratings, k: int = 10, exclude_seen: bool = True, users=None
) -> RecommendationSet:
    """
    Score every item for every user and keep the top ``k``.

    With ``exclude_seen`` a user's train items are removed from the
    candidates.  Users with fewer than ``k`` candidates get shorter lists and
    are listed in ``meta["short_users"]``.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    n_users = model.n_users
    users = np.arange(n_users) if users is None else np.asarray(users)
    items = np.full((n_users, k), -1, dtype=np.int64)
    scores = np.full((n_users, k), np.nan)
    csr = train.csr
    for start in range(0, len(users), _CHUNK):
        chunk = users[start : start + _CHUNK]
        s = np.array(model.score(chunk), dtype=np.float64)
        if not np.all(np.isfinite(s)):
            raise TrainingError(f"{model.kind} produced non-finite scores")
        if exclude_seen:
            for r, u in enumerate(chunk):
                s[r, csr.indices[csr.indptr[u] : csr.indptr[u + 1]]] = -np.inf
        ti, ts = topk_rows(s, k)
        items[chunk] = ti
        scores[chunk] = ts
    rs = RecommendationSet(k, items, scores, model.kind, exclude_seen)
    short = rs.short_users
    if len(short):
        _log.warning("%s: %d users have fewer than %d candidates", model.kind, len(short), k)
    rs.meta["short_users"] = short.tolist()
    return rs
