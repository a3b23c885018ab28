"""Report files: JSON sections, flat CSV tables, and the reuse checkpoints."""

from __future__ import annotations

import contextlib
import csv
import io
import json
import os
import tempfile
from pathlib import Path

import numpy as np

from ..corpus import DataSplit, IndexedDataset
from ..errors import ReportIOError

JSON_FILES = ("data_bias.json", "rec_bias.json", "group_bias.json")
SEGMENT_COLUMNS = ("user_id", "popular_share", "theme_count", "gini", "pop_group", "div_group", "cell")


def atomic_write_text(path, text: str) -> None:
    """Write to a temp file in the target directory, then rename over ``path``."""
    path = Path(path)
    try:
        path.parent.mkdir(parents=True, exist_ok=True)
        fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
        try:
            with os.fdopen(fd, "w", encoding="utf-8", newline="") as fh:
                fh.write(text)
            os.chmod(tmp, 0o644)
            os.replace(tmp, path)
        except BaseException:
            with contextlib.suppress(OSError):
                os.unlink(tmp)
            raise
    except OSError as e:
        raise ReportIOError(f"cannot write {path}: {e.strerror or e}") from e


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2, allow_nan=False) + "\n"


def fmt(x) -> str:
    if x is None:
        return ""
    if isinstance(x, (bool, np.bool_)):
        return str(bool(x)).lower()
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        return "" if not np.isfinite(x) else f"{float(x):.6f}"
    return str(x)


def _csv(header, rows) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([fmt(v) for v in r])
    return buf.getvalue()


def summary_rows(bundle) -> list[tuple[str, str, object]]:
    """
    Flat (algorithm, metric, value) rows.  Dataset-level rows use the
    algorithm name ``*``; every value is copied from a bundle field.
    """
    rows = []
    if bundle.data_bias is not None:
        d = bundle.data_bias
        rows.append(("*", "top_theme_share", d["top_theme_share"]))
        rows.append(("*", "significant_themes", d["significant_themes"]))
        for t, share in d["theme_distribution"].items():
            rows.append(("*", f"theme_share:{t}", share))
        for t, r in d["avg_popularity_ratio"].items():
            rows.append(("*", f"avg_popularity_ratio:{t}", r))
    if bundle.rec_bias is not None:
        for algo, e in bundle.rec_bias["algorithms"].items():
            for m in ("precision", "recall", "f1", "ndcg"):
                rows.append((algo, m, e["accuracy"][m]))
            rows.append((algo, "coverage", e["coverage"]))
            rows.append((algo, "validation_ndcg", e["validation_ndcg"]))
            for t, x in e["exposure"].items():
                rows.append((algo, f"exposure_ratio:{t}", x["ratio"]))
    if bundle.group_bias is not None:
        for algo, table in bundle.group_bias["algorithms"].items():
            for row in table:
                if row["dimension"] == "cell":
                    continue
                for m in ("popular_share_delta", "theme_count_delta", "gini_delta"):
                    rows.append((algo, f"{m}:{row['group']}", row[m]))
    return rows


def recommendation_rows(recs, user_ids, item_ids):
    for u in range(recs.n_users):
        for rank, (i, s) in enumerate(recs.list_for(u), start=1):
            yield user_ids[u], rank, item_ids[i], s


def emit_reports(bundle, out_dir) -> list[Path]:
    """
    Write the three JSON sections (those present), ``summary.csv``,
    ``segments.csv`` and one ``recommendations_<algo>.csv`` per algorithm.
    Returns the written paths.
    """
    out = Path(out_dir)
    written = []

    def put(name, text):
        p = out / name
        atomic_write_text(p, text)
        written.append(p)

    for name, section in zip(JSON_FILES, (bundle.data_bias, bundle.rec_bias, bundle.group_bias)):
        if section is not None:
            put(name, dumps(section))
    put("summary.csv", _csv(("algorithm", "metric", "value"), summary_rows(bundle)))
    put("segments.csv", _csv(SEGMENT_COLUMNS, ([r[c] for c in SEGMENT_COLUMNS] for r in bundle.segments)))
    for algo, recs in bundle.recommendations.items():
        put(
            f"recommendations_{algo}.csv",
            _csv(("user_id", "rank", "item_id", "score"), recommendation_rows(recs, bundle.user_ids, bundle.item_ids)),
        )
    put("provenance.json", dumps(bundle.provenance))
    return written


def load_reports(out_dir) -> dict:
    """Parse the JSON sections of an emitted report directory, keyed by section name."""
    out = Path(out_dir)
    loaded = {}
    for name in JSON_FILES + ("provenance.json",):
        p = out / name
        if p.exists():
            try:
                loaded[name[: -len(".json")]] = json.loads(p.read_text(encoding="utf-8"))
            except (OSError, json.JSONDecodeError) as e:
                raise ReportIOError(f"cannot read {p}: {e}") from e
    return loaded


def write_split(sp: DataSplit, ratios, path) -> None:
    """Store the partition of every rating (0 train, 1 valid, 2 test) in dataset order."""
    parts = (sp.train, sp.valid, sp.test)
    n = sum(len(p) for p in parts)
    users = np.concatenate([p.users for p in parts])
    items = np.concatenate([p.items for p in parts])
    labels = np.repeat(np.arange(3), [len(p) for p in parts])
    # the dataset is (user, item) ordered, so sorting the union restores its order
    codes = "".join(map(str, labels[np.lexsort((items, users))].tolist()))
    atomic_write_text(
        path, dumps({"seed": sp.seed, "ratios": list(ratios), "n_ratings": n, "partition": codes})
    )


def read_split(path, ds: IndexedDataset, seed: int, ratios) -> DataSplit | None:
    """Rebuild a saved split, or ``None`` if it does not match ``ds``, ``seed`` and ``ratios``."""
    try:
        d = json.loads(Path(path).read_text(encoding="utf-8"))
    except (OSError, json.JSONDecodeError) as e:
        raise ReportIOError(f"cannot read {path}: {e}") from e
    r = ds.ratings
    if d.get("seed") != seed or d.get("ratios") != list(ratios) or d.get("n_ratings") != len(r):
        return None
    part = np.frombuffer(d["partition"].encode("ascii"), dtype=np.uint8) - ord("0")
    return DataSplit(r.subset(part == 0), r.subset(part == 1), r.subset(part == 2), seed)
