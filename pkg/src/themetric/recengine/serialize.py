"""
JSON model dumps for audit reproducibility.

Factor models carry their dense arrays.  The baselines and UserKNN are cheap
and deterministic to refit, so their dumps hold the config and are rebuilt from
the train partition on load.
"""

from __future__ import annotations

from ..corpus import Ratings
from .base import TrainConfig
from .factor import FactorModel


def dump_model(model) -> dict:
    if isinstance(model, FactorModel):
        return model.to_dict()
    return {"kind": model.kind, "config": model.config.to_dict()}


def load_model(d: dict, train: Ratings):
    if "user_factors" in d:
        return FactorModel.from_dict(d)
    from .tuning import fit

    return fit(train, TrainConfig.from_dict(d["config"]))
