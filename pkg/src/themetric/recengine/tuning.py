from __future__ import annotations

import itertools
import logging
import math
from dataclasses import dataclass

from ..corpus import DataSplit, Ratings
from ..errors import TrainingError
from ..metrics.ranking import evaluate_accuracy
from .base import BASELINES, RecommendationSet, TrainConfig, recommend_topk
from .baselines import fit_mostpop, fit_random
from .factor import fit_bpr, fit_mf, fit_nmf, fit_pmf
from .knn import fit_userknn
from .wmf import fit_wmf

_log = logging.getLogger(__name__)

FITTERS = {
    "Random": fit_random,
    "MostPop": fit_mostpop,
    "MF": fit_mf,
    "PMF": fit_pmf,
    "NMF": fit_nmf,
    "WMF": fit_wmf,
    "BPR": fit_bpr,
    "UserKNN": fit_userknn,
}

_SGD_GRID = {
    "factors": [10, 50],
    "learning_rate": [0.005, 0.02],
    "regularization": [0.01, 0.1],
    "epochs": [50],
}

DEFAULT_GRIDS: dict[str, dict[str, list]] = {
    "Random": {},
    "MostPop": {},
    "MF": _SGD_GRID,
    "PMF": _SGD_GRID,
    "NMF": _SGD_GRID,
    "BPR": _SGD_GRID,
    "WMF": {
        "factors": [10, 50],
        "regularization": [0.01, 0.1],
        "epochs": [15],
        "confidence": [1.0],
        "unobserved_confidence": [0.01],
    },
    "UserKNN": {"k_neighbors": [20, 50]},
}


def fit(train: Ratings, config: TrainConfig):
    """Train the model named by ``config.algorithm``."""
    return FITTERS[config.algorithm](train, config)


def expand_grid(algorithm: str, grid: dict[str, list] | None = None, seed: int = 42) -> list[TrainConfig]:
    """Cartesian product of a parameter grid, in listed order (last key varies fastest)."""
    grid = DEFAULT_GRIDS[algorithm] if grid is None else grid
    keys = list(grid)
    combos = itertools.product(*(grid[k] for k in keys)) if keys else [()]
    return [TrainConfig(algorithm, seed=seed, **dict(zip(keys, c))) for c in combos]


@dataclass(frozen=True)
class GridResult:
    best: TrainConfig
    scores: list[tuple[TrainConfig, float | None]]

    @property
    def best_score(self) -> float:
        return dict(self.scores)[self.best]


def grid_search(
    split: DataSplit,
    grid: list[TrainConfig],
    k: int = 10,
    threshold: float | None = None,
) -> GridResult:
    """
    Train each config on the train partition and keep the best validation NDCG@k.

    Ties go to the earlier config.  A config whose training fails scores
    ``None``; if every config fails the last failure is re-raised.
    """
    if not grid:
        raise ValueError("empty grid")
    if len(split.valid) == 0:
        raise ValueError("validation partition is empty")
    scores: list[tuple[TrainConfig, float | None]] = []
    best, best_score, last_err = None, -math.inf, None
    for cfg in grid:
        try:
            model = fit(split.train, cfg)
            recs = recommend_topk(model, split.train, k, exclude_seen=True)
        except TrainingError as e:
            _log.warning("config %s failed: %s", cfg, e)
            scores.append((cfg, None))
            last_err = e
            continue
        ndcg = evaluate_accuracy(recs, split.valid, k, threshold).ndcg
        _log.info("%s %s: valid NDCG@%d = %.4f", cfg.algorithm, cfg, k, ndcg)
        scores.append((cfg, ndcg))
        if ndcg > best_score:
            best, best_score = cfg, ndcg
    if best is None:
        raise TrainingError(f"every config in the grid failed: {last_err}")
    return GridResult(best, scores)


def train_and_recommend(
    split: DataSplit, config: TrainConfig, k: int = 10, exclude_seen: bool = True
) -> tuple[object, RecommendationSet]:
    model = fit(split.train, config)
    return model, recommend_topk(model, split.train, k, exclude_seen)


def needs_tuning(algorithm: str) -> bool:
    return algorithm not in BASELINES
