import numpy as np
import pytest

from themetric.corpus import Interaction, Ratings, ThemeCatalog
from themetric.recengine import RecommendationSet


def ratings_from(triples, n_users=None, n_items=None) -> Ratings:
    """Ratings from (user, item, rating) index triples."""
    u, i, r = (np.array(x) for x in zip(*triples)) if triples else (np.array([], int),) * 3
    return Ratings.from_arrays(
        u.astype(np.int64),
        i.astype(np.int64),
        r.astype(float),
        n_users if n_users is not None else int(u.max()) + 1,
        n_items if n_items is not None else int(i.max()) + 1,
    )


def recs_from(lists, k=None, algorithm="test") -> RecommendationSet:
    """RecommendationSet from plain per-user item lists (scores descending dummies)."""
    k = k or max((len(x) for x in lists), default=1)
    items = np.full((len(lists), k), -1, dtype=np.int64)
    scores = np.full((len(lists), k), np.nan)
    for u, lst in enumerate(lists):
        items[u, : len(lst)] = lst
        scores[u, : len(lst)] = -np.arange(len(lst), dtype=float)
    return RecommendationSet(k, items, scores, algorithm)


def catalog_from(item_themes, n_themes=None) -> ThemeCatalog:
    """Catalog over item indices 0..n-1 with the given theme ids."""
    n_themes = n_themes or (max(item_themes) + 1)
    return ThemeCatalog({t: f"t{t}" for t in range(n_themes)}, dict(enumerate(item_themes)))


def interactions(rows):
    return [Interaction(u, i, r) for u, i, r in rows]


def write_csv(path, header, rows):
    path.write_text(header + "\n" + "".join(",".join(map(str, r)) + "\n" for r in rows), encoding="utf-8")
    return path


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.addinivalue_line("markers", "slow: long-running scale check")


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod and mod.RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in mod.RESULTS:
            terminalreporter.write_line(line)
