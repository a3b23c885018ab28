"""
End-to-end audit: preprocess, split, tune, train, recommend, then the data,
recommendation and user-group bias stages.

Report sections are plain JSON-ready dicts with floats already rounded, so what
is written to disk and what the caller holds in memory are the same object.
"""

from __future__ import annotations

import contextlib
import datetime as _dt
import json
import logging
import math
from dataclasses import dataclass, field
from functools import cached_property
from pathlib import Path

import numpy as np

from .. import __version__
from ..corpus import (
    DataSplit,
    IndexedDataset,
    PopularitySet,
    Ratings,
    ThemeCatalog,
    dataset_summary,
    load_interactions,
    load_items,
    load_themes,
    build_catalog,
    popular_set,
    preprocess,
    split,
    theme_distribution,
)
from ..errors import ConfigError, ThemetricError
from ..metrics import (
    avg_popularity_ratio,
    chi_square_theme,
    evaluate_accuracy,
    exposure_ratio,
    item_coverage,
    rec_theme_shares,
    train_theme_shares,
)
from ..recengine import (
    RecommendationSet,
    TrainConfig,
    dump_model,
    expand_grid,
    fit,
    grid_search,
    load_model,
    needs_tuning,
    recommend_topk,
)
from ..segmentation import (
    assign_popularity_group,
    census,
    cell_name,
    classify_diversity,
    diversity_thresholds,
    group_delta_report,
    profile_users,
)
from .config import AuditConfig

_log = logging.getLogger(__name__)

FLOAT_DECIMALS = 6


def clean(obj):
    """Make ``obj`` JSON-ready: round floats, NaN/inf to None, numpy to Python, keys to str."""
    if isinstance(obj, dict):
        return {str(k): clean(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [clean(v) for v in obj]
    if isinstance(obj, (bool, np.bool_)):
        return bool(obj)
    if isinstance(obj, (int, np.integer)):
        return int(obj)
    if isinstance(obj, (float, np.floating)):
        x = float(obj)
        return round(x, FLOAT_DECIMALS) + 0.0 if math.isfinite(x) else None
    return obj


@contextlib.contextmanager
def stage(name: str):
    """Prefix errors escaping a pipeline stage with the stage name."""
    try:
        yield
    except ThemetricError as e:
        if not getattr(e, "stage", None):
            e.stage = name
            e.args = (f"[{name}] {e.args[0] if e.args else e}",) + e.args[1:]
        raise


def top_fraction_count(fraction: float, n: int) -> int:
    return max(1, math.ceil(fraction * n - 1e-9))


def run_data_bias_audit(
    train: Ratings,
    catalog: ThemeCatalog,
    popular: PopularitySet,
    top_fraction: float = 0.2,
) -> dict:
    """
    Theme imbalance in the input: theme shares over unique train items, the
    cumulative share of the largest ``top_fraction`` of themes, per-theme
    chi-squared tests of theme versus popular-set membership, and average
    item popularity ratio per theme.
    """
    train_items = np.flatnonzero(train.item_counts > 0)
    dist = theme_distribution(train_items.tolist(), catalog)
    pop_dist = theme_distribution(sorted(popular.members), catalog)
    ranked = sorted(dist, key=lambda t: (-dist[t], t))
    n_top = top_fraction_count(top_fraction, catalog.n_themes)
    chi = {t: chi_square_theme(t, popular, catalog) for t in catalog.theme_ids}
    sizes = np.bincount(catalog.positions(train.n_items), minlength=catalog.n_themes)
    return clean(
        {
            "n_themes": catalog.n_themes,
            "n_items": train.n_items,
            "n_train_items": len(train_items),
            "n_popular_items": len(popular),
            "popular_fraction": popular.fraction,
            "theme_labels": dict(catalog.themes),
            "theme_item_counts": dict(zip(catalog.theme_ids, sizes.tolist())),
            "theme_distribution": dist,
            "popular_theme_distribution": pop_dist,
            "top_theme_fraction": top_fraction,
            "top_themes": ranked[:n_top],
            "top_theme_share": sum(dist[t] for t in ranked[:n_top]),
            "chi_square": {
                t: {
                    "statistic": r.statistic,
                    "p_value": r.p_value,
                    "degrees_of_freedom": r.degrees_of_freedom,
                    "significant": r.significant,
                    "testable": r.testable,
                }
                for t, r in chi.items()
            },
            "alpha": 0.05,
            "significant_themes": sum(r.significant for r in chi.values()),
            "avg_popularity_ratio": avg_popularity_ratio(train, catalog),
        }
    )


def rec_bias_entry(
    recs: RecommendationSet,
    data: DataSplit,
    catalog: ThemeCatalog,
    rec_basis: str = "slots",
    train_basis: str = "unique",
    threshold: float | None = None,
) -> dict:
    n_items = data.train.n_items
    acc = evaluate_accuracy(recs, data.test, recs.k, threshold)
    exp = exposure_ratio(recs, data.train, catalog, rec_basis, train_basis)
    return {
        "accuracy": acc.to_dict(),
        "coverage": item_coverage(recs, n_items),
        "theme_share_slots": rec_theme_shares(recs, catalog, n_items, "slots"),
        "theme_share_unique": rec_theme_shares(recs, catalog, n_items, "unique"),
        "train_theme_share_unique": train_theme_shares(data.train, catalog, "unique"),
        "train_theme_share_interactions": train_theme_shares(data.train, catalog, "interactions"),
        "exposure": {
            t: {
                "share_in_recs": e.share_in_recs,
                "share_in_train": e.share_in_train,
                "ratio": e.ratio,
                "defined": e.defined,
            }
            for t, e in exp.themes.items()
        },
        "exposure_basis": {"recs": rec_basis, "train": train_basis},
        "exposure_ranked": [[t, r] for t, r in exp.ranked()],
        "short_lists": len(recs.short_users),
    }


def run_rec_bias_audit(
    recs: dict[str, RecommendationSet],
    data: DataSplit,
    catalog: ThemeCatalog,
    rec_basis: str = "slots",
    train_basis: str = "unique",
    threshold: float | None = None,
) -> dict:
    """Accuracy on test, catalog coverage, theme shares and exposure ratios per algorithm."""
    return clean(
        {
            algo: rec_bias_entry(r, data, catalog, rec_basis, train_basis, threshold)
            for algo, r in recs.items()
        }
    )


@dataclass
class Segmentation:
    stats: list
    popularity: dict
    diversity: dict
    thresholds: object

    @property
    def cells(self) -> dict:
        return {u: (self.popularity[u], self.diversity[u]) for u in self.popularity}


def segment_users(train: Ratings, popular: PopularitySet, catalog: ThemeCatalog, support="nonzero") -> Segmentation:
    stats = profile_users(train, popular, catalog, support)
    th = diversity_thresholds(stats)
    pop = {s.user: assign_popularity_group(s) for s in stats}
    div = {s.user: classify_diversity(s, th) for s in stats}
    return Segmentation(stats, pop, div, th)


def run_group_bias_audit(
    recs: dict[str, RecommendationSet],
    seg: Segmentation,
    catalog: ThemeCatalog,
    popular: PopularitySet,
    support: str = "nonzero",
) -> dict:
    """History-versus-recommendation deltas for 3 popularity groups, 3 diversity groups and 9 cells."""
    th = seg.thresholds
    out = {
        "segmentation": {
            "population": len(seg.stats),
            "census": census(seg.cells),
            "popularity_groups": _count(seg.popularity),
            "diversity_groups": _count(seg.diversity),
            "thresholds": {
                "theme_count_p25": th.theme_count_p25,
                "theme_count_p75": th.theme_count_p75,
                "gini_p25": th.gini_p25,
                "gini_p75": th.gini_p75,
            },
            "degenerate": th.degenerate,
            "gini_support": support,
        },
        "algorithms": {},
    }
    for algo, r in recs.items():
        rep = group_delta_report(r, seg.stats, seg.popularity, seg.diversity, catalog, popular, support)
        out["algorithms"][algo] = [row.to_dict() for row in rep.rows]
    return clean(out)


def _count(groups: dict) -> dict:
    out: dict[str, int] = {}
    for g in groups.values():
        out[g.value] = out.get(g.value, 0) + 1
    return dict(sorted(out.items()))


@dataclass(eq=False)
class BiasReportBundle:
    data_bias: dict | None
    rec_bias: dict | None
    group_bias: dict | None
    provenance: dict
    recommendations: dict[str, RecommendationSet] = field(default_factory=dict)
    segments: list[dict] = field(default_factory=list)
    user_ids: tuple[str, ...] = ()
    item_ids: tuple[str, ...] = ()

    @property
    def algorithms(self) -> list[str]:
        return list(self.recommendations)


class Pipeline:
    """
    Lazily evaluated audit stages for one config.

    With ``reuse=True`` the split, tuning results and model dumps found in the
    output directory are loaded instead of recomputed.
    """

    def __init__(self, config: AuditConfig, reuse: bool = False):
        self.config = config
        self.reuse = reuse
        self.out = Path(config.output_dir)
        self.started_at = _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds")

    @cached_property
    def _loaded(self) -> tuple[IndexedDataset, ThemeCatalog, int]:
        cfg = self.config
        with stage("preprocess"):
            raw = load_interactions(cfg.interactions)
            records = load_items(cfg.items)
            catalog = build_catalog(load_themes(cfg.themes), records)
            known = {r.item_id for r in records}
            kept = [r for r in raw if r.item_id in known]
            dropped = len(raw) - len(kept)
            if dropped:
                _log.info("dropping %d interactions with items absent from the catalog", dropped)
            ds = preprocess(kept, records)
            aligned = catalog.align(ds)
            aligned.item_themes(ds.n_items)
        return ds, aligned, dropped

    @property
    def dataset(self) -> IndexedDataset:
        return self._loaded[0]

    @property
    def catalog(self) -> ThemeCatalog:
        return self._loaded[1]

    @cached_property
    def split(self) -> DataSplit:
        with stage("split"):
            path = self.out / "split.json"
            if self.reuse and path.exists():
                from .report import read_split

                sp = read_split(path, self.dataset, self.config.seed, self.config.split_ratios)
                if sp is not None:
                    return sp
                _log.warning("ignoring %s: it was made for a different seed, ratio or dataset", path)
            return split(self.dataset, self.config.seed, self.config.split_ratios)

    @cached_property
    def popular(self) -> PopularitySet:
        with stage("split"):
            return popular_set(self.split.train, self.config.popular_fraction)

    @cached_property
    def tuning(self) -> dict[str, dict]:
        """Per algorithm: chosen config, its validation NDCG and the full grid."""
        cfg = self.config
        path = self.out / "tuning.json"
        if self.reuse and path.exists():
            saved = json.loads(path.read_text(encoding="utf-8"))
            algos = saved.get("algorithms", {})
            if saved.get("seed") == cfg.seed and all(a in algos for a in cfg.algorithms):
                return {a: algos[a] for a in cfg.algorithms}
            _log.warning("ignoring %s: seed or algorithm set differs", path)
        out = {}
        for algo in cfg.algorithms:
            with stage(f"tune:{algo}"):
                if not needs_tuning(algo):
                    out[algo] = {"config": TrainConfig(algo, seed=cfg.seed).to_dict(), "tuned": False,
                                 "validation_ndcg": None, "grid": []}
                    continue
                try:
                    grid = expand_grid(algo, cfg.grids.get(algo), seed=cfg.seed)
                except (TypeError, ValueError) as e:
                    raise ConfigError(f"grid for {algo}: {e}") from None
                res = grid_search(self.split, grid, cfg.k, cfg.relevance_threshold)
                out[algo] = clean(
                    {
                        "config": res.best.to_dict(),
                        "tuned": True,
                        "validation_ndcg": res.best_score,
                        "grid": [{"config": c.to_dict(), "ndcg": s} for c, s in res.scores],
                    }
                )
        return out

    @cached_property
    def models(self) -> dict:
        out = {}
        for algo in self.config.algorithms:
            with stage(f"train:{algo}"):
                path = self.out / "models" / f"{algo}.json"
                if self.reuse and path.exists():
                    out[algo] = load_model(json.loads(path.read_text(encoding="utf-8")), self.split.train)
                else:
                    out[algo] = fit(self.split.train, TrainConfig.from_dict(self.tuning[algo]["config"]))
        return out

    @cached_property
    def recommendations(self) -> dict[str, RecommendationSet]:
        out = {}
        for algo, model in self.models.items():
            with stage(f"recommend:{algo}"):
                out[algo] = recommend_topk(model, self.split.train, self.config.k, self.config.exclude_seen)
        return out

    @cached_property
    def segmentation(self) -> Segmentation:
        with stage("audit-groups"):
            return segment_users(self.split.train, self.popular, self.catalog, self.config.gini_support)

    def data_bias(self) -> dict:
        with stage("audit-data"):
            return run_data_bias_audit(
                self.split.train, self.catalog, self.popular, self.config.top_theme_fraction
            )

    def rec_bias(self) -> dict:
        cfg = self.config
        with stage("audit-recs"):
            per_algo = run_rec_bias_audit(
                self.recommendations, self.split, self.catalog,
                cfg.exposure_rec_basis, cfg.exposure_train_basis, cfg.relevance_threshold,
            )
            for algo, entry in per_algo.items():
                t = self.tuning[algo]
                entry["config"] = clean(t["config"])
                entry["tuned"] = t["tuned"]
                entry["validation_ndcg"] = clean(t["validation_ndcg"])
                entry["grid"] = clean(t["grid"])
            return {"k": cfg.k, "exclude_seen": cfg.exclude_seen, "algorithms": per_algo}

    def group_bias(self) -> dict:
        with stage("audit-groups"):
            return run_group_bias_audit(
                self.recommendations, self.segmentation, self.catalog, self.popular,
                self.config.gini_support,
            )

    def segment_rows(self) -> list[dict]:
        seg = self.segmentation
        ids = self.dataset.user_ids
        return [
            {
                "user_id": ids[s.user],
                "popular_share": s.popular_share,
                "theme_count": s.theme_count,
                "gini": s.gini,
                "pop_group": seg.popularity[s.user].value,
                "div_group": seg.diversity[s.user].value,
                "cell": cell_name((seg.popularity[s.user], seg.diversity[s.user])),
            }
            for s in seg.stats
        ]

    def provenance(self) -> dict:
        sp = self.split
        return clean(
            {
                "version": __version__,
                "seed": self.config.seed,
                "config": self.config.to_dict(),
                "dataset": dataset_summary(self.dataset),
                "dropped_uncatalogued_interactions": self._loaded[2],
                "split_sizes": {"train": len(sp.train), "valid": len(sp.valid), "test": len(sp.test)},
                "started_at": self.started_at,
                "finished_at": _dt.datetime.now(_dt.timezone.utc).isoformat(timespec="seconds"),
            }
        )

    def bundle(self) -> BiasReportBundle:
        stages = self.config.stages
        data = self.data_bias() if "data" in stages else None
        recs = self.rec_bias() if "recs" in stages else None
        groups = self.group_bias() if "groups" in stages else None
        return BiasReportBundle(
            data,
            recs,
            groups,
            self.provenance(),
            dict(self.recommendations),
            self.segment_rows() if "groups" in stages else [],
            self.dataset.user_ids,
            self.dataset.item_ids,
        )


def run_full(config: AuditConfig, reuse: bool = False, write: bool = True) -> BiasReportBundle:
    """Run every configured stage and (by default) write the report files."""
    from .report import emit_reports

    pipe = Pipeline(config, reuse)
    bundle = pipe.bundle()
    if write:
        emit_reports(bundle, config.output_dir)
        save_checkpoints(pipe)
    return bundle


def save_checkpoints(pipe: Pipeline, models: bool = False) -> list[Path]:
    """Write the split and tuning results (and optionally model dumps) for ``--reuse``."""
    from .report import atomic_write_text, write_split

    out = pipe.out
    paths = [out / "split.json", out / "tuning.json"]
    write_split(pipe.split, pipe.config.split_ratios, paths[0])
    atomic_write_text(
        paths[1], json.dumps({"seed": pipe.config.seed, "algorithms": pipe.tuning}, sort_keys=True, indent=2)
    )
    if models:
        for algo, model in pipe.models.items():
            p = out / "models" / f"{algo}.json"
            atomic_write_text(p, json.dumps(dump_model(model), sort_keys=True))
            paths.append(p)
    return paths
