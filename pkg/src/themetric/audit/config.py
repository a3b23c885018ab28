from __future__ import annotations

import json
from dataclasses import asdict, dataclass, field, fields, replace
from pathlib import Path

from ..errors import ConfigError
from ..recengine.base import ALGORITHMS, TrainConfig

STAGES = ("data", "recs", "groups")


@dataclass(frozen=True)
class AuditConfig:
    """
    Everything that determines an audit run.

    Paths in a config file are resolved relative to that file.  ``grids``
    overrides the default hyperparameter grid per algorithm, as a mapping of
    ``TrainConfig`` field name to a list of values.
    """

    interactions: str
    items: str
    themes: str
    output_dir: str = "audit_out"
    seed: int = 42
    split_ratios: tuple[float, float, float] = (0.8, 0.1, 0.1)
    k: int = 10
    popular_fraction: float = 0.2
    relevance_threshold: float | None = None
    gini_support: str = "nonzero"
    exclude_seen: bool = True
    algorithms: tuple[str, ...] = ALGORITHMS
    grids: dict = field(default_factory=dict)
    exposure_rec_basis: str = "slots"
    exposure_train_basis: str = "unique"
    top_theme_fraction: float = 0.2
    stages: tuple[str, ...] = STAGES

    def __post_init__(self):
        if abs(sum(self.split_ratios) - 1.0) > 1e-9 or len(self.split_ratios) != 3:
            raise ConfigError(f"split_ratios must be three values summing to 1, got {self.split_ratios}")
        if any(r < 0 for r in self.split_ratios):
            raise ConfigError("split_ratios must be nonnegative")
        if self.k < 1:
            raise ConfigError("k must be >= 1")
        if not 0 < self.popular_fraction <= 1:
            raise ConfigError("popular_fraction must be in (0, 1]")
        if not 0 < self.top_theme_fraction <= 1:
            raise ConfigError("top_theme_fraction must be in (0, 1]")
        if self.gini_support not in ("nonzero", "full"):
            raise ConfigError(f"gini_support must be 'nonzero' or 'full', got {self.gini_support!r}")
        if self.exposure_rec_basis not in ("slots", "unique"):
            raise ConfigError(f"bad exposure_rec_basis {self.exposure_rec_basis!r}")
        if self.exposure_train_basis not in ("unique", "interactions"):
            raise ConfigError(f"bad exposure_train_basis {self.exposure_train_basis!r}")
        bad = [a for a in self.algorithms if a not in ALGORITHMS]
        if bad or not self.algorithms:
            raise ConfigError(f"unknown algorithms {bad}; choose from {list(ALGORITHMS)}")
        if len(set(self.algorithms)) != len(self.algorithms):
            raise ConfigError("algorithms listed twice")
        bad = [s for s in self.stages if s not in STAGES]
        if bad:
            raise ConfigError(f"unknown stages {bad}; choose from {list(STAGES)}")
        tc_fields = {f.name for f in fields(TrainConfig)} - {"algorithm", "seed"}
        for algo, grid in self.grids.items():
            if algo not in ALGORITHMS:
                raise ConfigError(f"grid given for unknown algorithm {algo!r}")
            if not isinstance(grid, dict):
                raise ConfigError(f"grid for {algo} must be an object")
            for key, vals in grid.items():
                if key not in tc_fields:
                    raise ConfigError(f"grid for {algo}: unknown parameter {key!r}")
                if not isinstance(vals, list) or not vals:
                    raise ConfigError(f"grid for {algo}.{key} must be a non-empty list")

    @classmethod
    def from_dict(cls, d: dict, base_dir: Path | None = None) -> AuditConfig:
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {unknown}")
        missing = [k for k in ("interactions", "items", "themes") if k not in d]
        if missing:
            raise ConfigError(f"missing config keys: {missing}")
        d = dict(d)
        if base_dir is not None:
            for key in ("interactions", "items", "themes", "output_dir"):
                if key in d and not Path(d[key]).is_absolute():
                    d[key] = str(base_dir / d[key])
        for key in ("split_ratios", "algorithms", "stages"):
            if key in d:
                d[key] = tuple(d[key])
        try:
            return cls(**d)
        except TypeError as e:
            raise ConfigError(str(e)) from None

    @classmethod
    def load(cls, path) -> AuditConfig:
        path = Path(path)
        try:
            raw = json.loads(path.read_text(encoding="utf-8"))
        except FileNotFoundError:
            raise ConfigError(f"config file not found: {path}") from None
        except json.JSONDecodeError as e:
            raise ConfigError(f"{path}: invalid JSON: {e}") from None
        if not isinstance(raw, dict):
            raise ConfigError(f"{path}: config must be a JSON object")
        return cls.from_dict(raw, path.resolve().parent)

    def to_dict(self) -> dict:
        d = asdict(self)
        for key in ("split_ratios", "algorithms", "stages"):
            d[key] = list(d[key])
        return d

    def with_overrides(self, **kw) -> AuditConfig:
        return replace(self, **{k: v for k, v in kw.items() if v is not None})
