import csv
import json
import os
from pathlib import Path

import numpy as np
import pytest

from conftest import catalog_from, ratings_from
from themetric.audit import (
    AuditConfig,
    Pipeline,
    emit_reports,
    load_reports,
    run_data_bias_audit,
    run_full,
    run_rec_bias_audit,
)
from themetric.audit.cli import main
from themetric.audit.report import atomic_write_text
from themetric.corpus import DataSplit, build_catalog, popular_set, preprocess, split
from themetric.errors import ConfigError, DataError, ReportIOError
from themetric.recengine import TrainConfig, fit_random, recommend_topk
from themetric.synthetic import themed_corpus

FAST_GRIDS = {
    "MF": {"factors": [5], "epochs": [10]},
    "WMF": {"factors": [5], "epochs": [3]},
    "BPR": {"factors": [5], "epochs": [10], "learning_rate": [0.05]},
}
SHARED = {"data_bias.json", "rec_bias.json", "group_bias.json", "summary.csv", "segments.csv"}


def write_config(directory, **kw):
    corpus = themed_corpus(n_users=300, n_items=150, n_themes=5, seed=3)
    corpus.write(directory / "data")
    cfg = {
        "interactions": "data/interactions.csv",
        "items": "data/items.csv",
        "themes": "data/themes.csv",
        "output_dir": "out",
        "algorithms": ["Random", "MostPop", "MF"],
        "grids": FAST_GRIDS,
        **kw,
    }
    path = directory / "config.json"
    path.write_text(json.dumps(cfg))
    return path


@pytest.fixture(scope="module")
def run(tmp_path_factory):
    d = tmp_path_factory.mktemp("audit")
    cfg = AuditConfig.load(write_config(d))
    return cfg, run_full(cfg)


def report_bytes(out):
    return {p.name: p.read_bytes() for p in sorted(out.iterdir()) if p.is_file() and p.name != "provenance.json"}


# config


def test_config_validation(tmp_path):
    base = {"interactions": "a", "items": "b", "themes": "c"}
    with pytest.raises(ConfigError, match="unknown config keys"):
        AuditConfig.from_dict({**base, "colour": 1})
    with pytest.raises(ConfigError, match="missing"):
        AuditConfig.from_dict({"items": "b"})
    for bad in ({"split_ratios": [0.8, 0.1, 0.2]}, {"k": 0}, {"popular_fraction": 0}, {"popular_fraction": 1.5}):
        with pytest.raises(ConfigError):
            AuditConfig.from_dict({**base, **bad})
    with pytest.raises(ConfigError, match="unknown parameter"):
        AuditConfig.from_dict({**base, "grids": {"MF": {"depth": [1]}}})
    cfg = AuditConfig.from_dict(base, tmp_path)
    assert cfg.interactions == str(tmp_path / "a")
    assert AuditConfig.from_dict(cfg.to_dict()) == cfg


# data stage


def test_data_bias_equal_themes():
    cat = catalog_from([i % 5 for i in range(50)])
    train = ratings_from([(u, i, 5) for i in range(50) for u in range(1 + i % 7)])
    d = run_data_bias_audit(train, cat, popular_set(train, 0.2))
    assert d["top_theme_share"] == 0.2
    assert len(d["theme_distribution"]) == 5 == d["n_themes"]
    assert set(d["chi_square"]) == {"0", "1", "2", "3", "4"}


def test_data_bias_dominant_theme():
    cat = catalog_from([0] * 30 + [1, 2, 3, 4] * 5)
    train = ratings_from([(0, i, 5) for i in range(50)])
    d = run_data_bias_audit(train, cat, popular_set(train, 0.2))
    assert d["top_theme_share"] == 0.6
    assert d["top_themes"] == [0]


def test_data_bias_null_has_few_significant_themes():
    corpus = themed_corpus(n_users=1500, n_items=400, n_themes=5, popularity_skew=0.8, seed=11)
    ds = preprocess(corpus.interactions, corpus.items)
    cat = build_catalog(corpus.themes, corpus.items).align(ds)
    train = split(ds, 0).train
    d = run_data_bias_audit(train, cat, popular_set(train, 0.2))
    assert d["significant_themes"] <= 1
    assert abs(d["top_theme_share"] - 0.2) < 0.03


# recommendation stage


def test_rec_bias_random_exposure_balanced():
    n_users, n_items = 2000, 100
    cat = catalog_from([i % 5 for i in range(n_items)])
    g = np.random.default_rng(0)
    train = ratings_from([(u, int(i), 5) for u in range(n_users) for i in g.choice(n_items, 3, replace=False)], n_users, n_items)
    empty = ratings_from([], n_users, n_items)
    recs = {"Random": recommend_topk(fit_random(train, TrainConfig("Random")), train, 10)}
    out = run_rec_bias_audit(recs, DataSplit(train, empty, empty, 0), cat)
    assert list(out) == ["Random"]
    for e in out["Random"]["exposure"].values():
        assert 0.8 <= e["ratio"] <= 1.2


def test_rec_bias_bundle(run):
    cfg, bundle = run
    algos = bundle.rec_bias["algorithms"]
    assert list(algos) == list(cfg.algorithms) == list(bundle.group_bias["algorithms"])
    cov = {a: e["coverage"] for a, e in algos.items()}
    assert cov["MostPop"] == min(cov.values())
    assert algos["MostPop"]["tuned"] is False and algos["MostPop"]["grid"] == []
    assert algos["MF"]["tuned"] is True and len(algos["MF"]["grid"]) == 1
    for e in algos.values():
        assert 0 <= e["accuracy"]["ndcg"] <= 1
        assert abs(sum(e["theme_share_slots"].values()) - 1) < 1e-5


def test_group_bias_bundle(run):
    cfg, bundle = run
    seg = bundle.group_bias["segmentation"]
    assert sum(seg["census"].values()) == seg["population"] == len(bundle.segments)
    for rows in bundle.group_bias["algorithms"].values():
        assert [r["dimension"] for r in rows] == ["popularity"] * 3 + ["diversity"] * 3 + ["cell"] * 9
    assert bundle.provenance["seed"] == cfg.seed


# files


def test_report_files(run):
    cfg, bundle = run
    names = {p.name for p in os.scandir(cfg.output_dir)}
    recs = {f"recommendations_{a}.csv" for a in cfg.algorithms}
    assert SHARED | recs <= names
    assert not [n for n in names if n.endswith(".tmp")]
    loaded = load_reports(cfg.output_dir)
    assert loaded["data_bias"] == bundle.data_bias
    assert loaded["rec_bias"] == bundle.rec_bias
    assert loaded["group_bias"] == bundle.group_bias
    text = (Path(cfg.output_dir) / "rec_bias.json").read_text()
    assert text == json.dumps(json.loads(text), sort_keys=True, indent=2) + "\n"


def test_recommendation_csv(run):
    cfg, bundle = run
    with open(os.path.join(cfg.output_dir, "recommendations_MostPop.csv")) as fh:
        rows = list(csv.DictReader(fh))
    first = [r for r in rows if r["user_id"] == bundle.user_ids[0]]
    assert [int(r["rank"]) for r in first] == list(range(1, 11))
    assert all(len(r["score"].split(".")[1]) == 6 for r in first)


def test_summary_traceable_to_bundle(run):
    cfg, bundle = run
    with open(os.path.join(cfg.output_dir, "summary.csv")) as fh:
        rows = list(csv.DictReader(fh))
    assert rows
    for r in rows:
        algo, metric, value = r["algorithm"], r["metric"], r["value"]
        name, _, key = metric.partition(":")
        if algo == "*":
            src = bundle.data_bias
            v = src[name] if not key else src["theme_distribution" if name == "theme_share" else name][key]
        elif name in ("precision", "recall", "f1", "ndcg"):
            v = bundle.rec_bias["algorithms"][algo]["accuracy"][name]
        elif name == "exposure_ratio":
            v = bundle.rec_bias["algorithms"][algo]["exposure"][key]["ratio"]
        elif name in ("coverage", "validation_ndcg"):
            v = bundle.rec_bias["algorithms"][algo][name]
        else:
            (row,) = [x for x in bundle.group_bias["algorithms"][algo] if x["group"] == key and x["dimension"] != "cell"]
            v = row[name]
        assert value == ("" if v is None else (str(v) if isinstance(v, int) else f"{v:.6f}"))


def test_segments_csv_header(run):
    cfg, _ = run
    with open(os.path.join(cfg.output_dir, "segments.csv")) as fh:
        assert fh.readline().strip() == "user_id,popular_share,theme_count,gini,pop_group,div_group,cell"


def test_rerun_is_byte_identical_and_reuse_matches(run, tmp_path):
    cfg, _ = run
    first = report_bytes(Path(cfg.output_dir))
    out2 = tmp_path / "again"
    run_full(cfg.with_overrides(output_dir=str(out2)))
    assert report_bytes(out2) == first
    run_full(cfg.with_overrides(output_dir=str(out2)), reuse=True)
    assert report_bytes(out2) == first


def test_stage_isolation(run, tmp_path):
    cfg, _ = run
    out = tmp_path / "nogroups"
    run_full(cfg.with_overrides(output_dir=str(out), stages=("data", "recs")))
    assert not (out / "group_bias.json").exists()
    for name in ("data_bias.json", "rec_bias.json"):
        assert (out / name).read_bytes() == open(os.path.join(cfg.output_dir, name), "rb").read()


def test_baselines_only(run, tmp_path):
    cfg, _ = run
    bundle = run_full(cfg.with_overrides(output_dir=str(tmp_path), algorithms=("Random", "MostPop")), write=False)
    assert list(bundle.rec_bias["algorithms"]) == ["Random", "MostPop"]
    assert all(not e["tuned"] for e in bundle.rec_bias["algorithms"].values())


def test_three_algorithms_give_eight_files(run, tmp_path):
    _, bundle = run
    written = emit_reports(bundle, tmp_path)
    names = {p.name for p in written} - {"provenance.json"}
    assert len(names) == 8 and SHARED <= names
    emit_reports(bundle, tmp_path)  # overwrite in place
    assert sorted(p.name for p in tmp_path.iterdir()) == sorted(p.name for p in written)


def test_unwritable_path(tmp_path):
    blocker = tmp_path / "file"
    blocker.write_text("x")
    with pytest.raises(ReportIOError):
        atomic_write_text(blocker / "sub" / "a.json", "{}")


def test_stage_name_in_errors(tmp_path):
    path = write_config(tmp_path)
    (tmp_path / "data" / "interactions.csv").write_text("user_id,item_id,rating\nu1,b1,eleven\n")
    with pytest.raises(DataError, match=r"^\[preprocess\].*line|^\[preprocess\].*:2:"):
        Pipeline(AuditConfig.load(path)).dataset


# CLI


def test_cli_exit_codes(tmp_path, capsys):
    path = write_config(tmp_path, algorithms=["MostPop"])
    assert main(["audit-data", "--config", str(path)]) == 0
    assert (tmp_path / "out" / "data_bias.json").exists()
    assert main(["run-all", "--config", str(path), "--algos", "Nope"]) == 2
    assert main(["run-all", "--config", str(tmp_path / "missing.json")]) == 2
    blocker = tmp_path / "blocker"
    blocker.write_text("")
    assert main(["preprocess", "--config", str(path), "--out", str(blocker / "x")]) == 5
    bad_grid = write_config(tmp_path, algorithms=["MF"], grids={"MF": {"learning_rate": [50.0], "epochs": [30]}})
    assert main(["tune", "--config", str(bad_grid)]) == 4
    (tmp_path / "data" / "items.csv").write_text("item_id,theme_id\nb00000,77\n")
    assert main(["preprocess", "--config", str(path)]) == 3
    err = capsys.readouterr().err
    assert "[preprocess]" in err and "77" in err


def test_cli_stage_commands_chain(tmp_path):
    path = write_config(tmp_path, algorithms=["MostPop", "MF"])
    out = tmp_path / "staged"
    for cmd in ("preprocess", "split", "tune", "train", "recommend", "audit-recs", "audit-groups"):
        assert main([cmd, "--config", str(path), "--out", str(out), "--reuse"]) == 0
    for name in ("dataset.json", "split.json", "tuning.json", "models/MF.json", "recommendations_MF.csv", "rec_bias.json", "group_bias.json", "segments.csv"):
        assert (out / name).exists(), name
    full = tmp_path / "full"
    assert main(["run-all", "--config", str(path), "--out", str(full)]) == 0
    for name in ("rec_bias.json", "group_bias.json", "recommendations_MF.csv", "segments.csv"):
        assert (out / name).read_bytes() == (full / name).read_bytes(), name


def test_cli_seed_override(tmp_path):
    path = write_config(tmp_path, algorithms=["Random"])
    assert main(["run-all", "--config", str(path), "--seed", "7"]) == 0
    prov = json.loads((tmp_path / "out" / "provenance.json").read_text())
    assert prov["seed"] == 7 == prov["config"]["seed"]
