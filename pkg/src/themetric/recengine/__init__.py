"""Recommender training, top-k ranking and hyperparameter search."""

from .base import ALGORITHMS, BASELINES, RecommendationSet, TrainConfig, recommend_topk, topk_rows
from .baselines import PopularityModel, RandomModel, fit_mostpop, fit_random
from .factor import FactorModel, bpr_triples, fit_bpr, fit_mf, fit_nmf, fit_pmf
from .knn import NeighborModel, fit_userknn
from .serialize import dump_model, load_model
from .tuning import DEFAULT_GRIDS, GridResult, expand_grid, fit, grid_search, needs_tuning
from .wmf import fit_wmf

__all__ = [
    "ALGORITHMS",
    "BASELINES",
    "DEFAULT_GRIDS",
    "FactorModel",
    "GridResult",
    "NeighborModel",
    "PopularityModel",
    "RandomModel",
    "RecommendationSet",
    "TrainConfig",
    "bpr_triples",
    "dump_model",
    "expand_grid",
    "fit",
    "fit_bpr",
    "fit_mf",
    "fit_mostpop",
    "fit_nmf",
    "fit_pmf",
    "fit_random",
    "fit_userknn",
    "fit_wmf",
    "grid_search",
    "load_model",
    "needs_tuning",
    "recommend_topk",
    "topk_rows",
]
