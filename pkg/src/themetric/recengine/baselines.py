from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from ..corpus import Ratings
from ..errors import DataError
from .base import TrainConfig


@dataclass(eq=False)
class RandomModel:
    """Scores drawn per user from a generator keyed by (seed, user), so chunking never changes them."""

    n_users: int
    n_items: int
    seed: int
    config: TrainConfig | None = None
    kind: str = "Random"

    def score(self, users: np.ndarray) -> np.ndarray:
        out = np.empty((len(users), self.n_items))
        for r, u in enumerate(np.asarray(users).tolist()):
            out[r] = np.random.default_rng([self.seed, u]).random(self.n_items)
        return out


@dataclass(eq=False)
class PopularityModel:
    counts: np.ndarray
    n_users: int
    config: TrainConfig | None = None
    kind: str = "MostPop"

    @property
    def n_items(self) -> int:
        return len(self.counts)

    @property
    def ordering(self) -> np.ndarray:
        """Items by descending count, ties to the lower index."""
        return np.lexsort((np.arange(self.n_items), -self.counts))

    def score(self, users: np.ndarray) -> np.ndarray:
        return np.broadcast_to(self.counts.astype(np.float64), (len(users), self.n_items)).copy()


def fit_random(train: Ratings, config: TrainConfig) -> RandomModel:
    return RandomModel(train.n_users, train.n_items, config.seed, config)


def fit_mostpop(train: Ratings, config: TrainConfig) -> PopularityModel:
    if len(train) == 0:
        raise DataError("MostPop: empty train set")
    return PopularityModel(train.item_counts.copy(), train.n_users, config)
