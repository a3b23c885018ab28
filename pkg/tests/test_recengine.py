import math
from dataclasses import dataclass

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import catalog_from, ratings_from
from themetric.corpus import preprocess, split
from themetric.errors import DivergenceError, SingularSystemError, TrainingError
from themetric.metrics import rec_theme_shares
from themetric.recengine import (
    ALGORITHMS,
    TrainConfig,
    bpr_triples,
    dump_model,
    expand_grid,
    fit,
    fit_bpr,
    fit_mf,
    fit_mostpop,
    fit_nmf,
    fit_pmf,
    fit_random,
    fit_userknn,
    fit_wmf,
    grid_search,
    load_model,
    recommend_topk,
    topk_rows,
)
from themetric.recengine.wmf import normal_matrix
from themetric.synthetic import block_interactions

SMALL = {
    "MF": dict(factors=5, epochs=15, learning_rate=0.01),
    "PMF": dict(factors=5, epochs=15, learning_rate=0.01),
    "NMF": dict(factors=5, epochs=15, learning_rate=0.01),
    "BPR": dict(factors=5, epochs=15, learning_rate=0.05),
    "WMF": dict(factors=5, epochs=5, regularization=0.1),
    "UserKNN": dict(k_neighbors=10),
    "Random": {},
    "MostPop": {},
}


def small_config(algo, seed=42, **kw):
    return TrainConfig(algo, seed=seed, **{**SMALL[algo], **kw})


@pytest.fixture(scope="module")
def block():
    ds = preprocess(block_interactions(n_users=60, n_items=50, per_user=20, seed=4))
    return ds, split(ds, 4)


def random_train(seed, n_users=30, n_items=50, density=0.2):
    g = np.random.default_rng(seed)
    mask = g.random((n_users, n_items)) < density
    mask[np.arange(n_users), g.integers(0, n_items, n_users)] = True
    u, i = np.nonzero(mask)
    r = g.integers(1, 11, len(u))
    return ratings_from(list(zip(u, i, r)), n_users, n_items)


# top-k mechanics


def test_topk_ties_to_lower_index():
    items, scores = topk_rows(np.array([[1.0, 3.0, 3.0, 2.0, 3.0]]), 3)
    assert items.tolist() == [[1, 2, 4]]
    assert scores.tolist() == [[3.0, 3.0, 3.0]]


def test_topk_short_rows_are_padded():
    items, scores = topk_rows(np.array([[1.0, -np.inf, 0.5]]), 5)
    assert items.tolist() == [[0, 2, -1, -1, -1]]
    assert np.isnan(scores[0, 2:]).all()


@settings(max_examples=100, deadline=None)
@given(st.integers(0, 2**31), st.integers(1, 15))
def test_topk_matches_full_sort(seed, k):
    g = np.random.default_rng(seed)
    s = g.integers(0, 6, (4, 12)).astype(float)  # many ties
    s[g.random((4, 12)) < 0.2] = -np.inf
    items, _ = topk_rows(s, k)
    for r in range(4):
        want = sorted((j for j in range(12) if s[r, j] > -np.inf), key=lambda j: (-s[r, j], j))[:k]
        assert items[r][items[r] >= 0].tolist() == want


@dataclass
class Shifted:
    inner: object
    shift: float

    @property
    def n_users(self):
        return self.inner.n_users

    @property
    def kind(self):
        return self.inner.kind

    def score(self, users):
        return self.inner.score(users) + self.shift


@pytest.mark.parametrize("algo", ALGORITHMS)
def test_recommend_invariants_for_every_model(algo):
    train = random_train(1)
    model = fit(train, small_config(algo))
    recs = recommend_topk(model, train, 10)
    scores = model.score(np.arange(train.n_users))
    for u in range(train.n_users):
        seen = set(train.user_items(u).tolist())
        got = recs.items_for(u).tolist()
        assert not seen & set(got)
        assert len(got) == len(set(got)) == min(10, 50 - len(seen))
        s = recs.scores[u][: len(got)]
        assert np.all(np.isfinite(s)) and np.all(np.diff(s) <= 0)
        # brute force: full sort of unseen items, ties by index
        want = sorted((i for i in range(50) if i not in seen), key=lambda i: (-scores[u, i], i))[:10]
        assert got == want
    shifted = recommend_topk(Shifted(model, 3.0), train, 10)
    assert shifted.same_lists(recs)


@pytest.mark.parametrize("algo", ALGORITHMS)
def test_models_are_deterministic(algo):
    train = random_train(2)
    a = recommend_topk(fit(train, small_config(algo)), train, 10)
    b = recommend_topk(fit(train, small_config(algo)), train, 10)
    assert a.same_lists(b)
    assert np.array_equal(a.scores, b.scores, equal_nan=True)


def test_short_lists_flagged():
    train = ratings_from([(0, i, 5) for i in range(8)] + [(1, 0, 5)], 2, 10)
    recs = recommend_topk(fit_mostpop(train, TrainConfig("MostPop")), train, 5)
    assert recs.lengths.tolist() == [2, 5]
    assert recs.meta["short_users"] == [0]


# baselines


def test_random_seed_behaviour():
    train = random_train(3, n_users=100)
    a = recommend_topk(fit_random(train, TrainConfig("Random", seed=1)), train, 10)
    b = recommend_topk(fit_random(train, TrainConfig("Random", seed=1)), train, 10)
    c = recommend_topk(fit_random(train, TrainConfig("Random", seed=2)), train, 10)
    assert a.same_lists(b) and not a.same_lists(c)


def test_random_theme_shares_track_catalog():
    g = np.random.default_rng(0)
    n_items = 200
    themes = g.integers(0, 5, n_items).tolist()
    train = ratings_from([(u, int(g.integers(n_items)), 5) for u in range(2000)], 2000, n_items)
    recs = recommend_topk(fit_random(train, TrainConfig("Random", seed=9)), train, 10, exclude_seen=False)
    cat = catalog_from(themes, 5)
    got = rec_theme_shares(recs, cat, n_items)
    catalog_share = {t: themes.count(t) / n_items for t in range(5)}
    for t in range(5):
        assert abs(got[t] - catalog_share[t]) < 0.02


def test_mostpop_identical_lists_and_coverage():
    train = random_train(4)
    model = fit_mostpop(train, TrainConfig("MostPop"))
    recs = recommend_topk(model, train, 10, exclude_seen=False)
    assert all(recs.items_for(u).tolist() == recs.items_for(0).tolist() for u in range(train.n_users))
    assert recs.items_for(0)[0] == int(np.argmax(train.item_counts))
    assert sorted(model.ordering.tolist()) == list(range(train.n_items))


def test_mostpop_seen_top_item_gets_eleventh():
    # 12 items, item i rated by 12 - i users; user 0 has rated only item 0
    rows = [(u, i, 5) for i in range(12) for u in range(1, 13 - i)] + [(0, 0, 5)]
    train = ratings_from(rows, 13, 12)
    recs = recommend_topk(fit_mostpop(train, TrainConfig("MostPop")), train, 10)
    assert recs.items_for(0).tolist() == list(range(1, 11))
    # user 12 rated only item 0 as well
    assert recs.items_for(12).tolist() == list(range(1, 11))


# factor models


def test_mf_constant_ratings():
    train = ratings_from([(u, i, 8) for u in range(20) for i in range(15) if (u + i) % 3], 20, 15)
    m = fit_mf(train, TrainConfig("MF", factors=4, epochs=30))
    pred = m.predict(np.repeat(np.arange(20), 15), np.tile(np.arange(15), 20))
    assert np.all(np.abs(pred - 8) < 0.1)


def test_mf_biases_only():
    train = random_train(5)
    m = fit_mf(train, TrainConfig("MF", factors=0, epochs=10))
    u, i = np.array([0, 3, 7]), np.array([1, 2, 9])
    assert np.array_equal(m.predict(u, i), m.global_mean + m.user_bias[u] + m.item_bias[i])
    assert m.global_mean == train.ratings.mean()


def test_mf_loss_non_increasing_in_stable_regime(block):
    m = fit_mf(block[1].train, TrainConfig("MF", factors=5, learning_rate=0.002, epochs=20))
    assert all(b <= a for a, b in zip(m.loss_history, m.loss_history[1:]))


def test_pmf_constant_and_loss(block):
    train = ratings_from([(u, i, 6) for u in range(20) for i in range(15) if (u + i) % 3], 20, 15)
    m = fit_pmf(train, TrainConfig("PMF", factors=5, learning_rate=0.01, regularization=0.001, epochs=150))
    assert np.all(np.abs(m.predict(train.users, train.items) - 6) < 0.2)
    trace = fit_pmf(block[1].train, TrainConfig("PMF", factors=5, learning_rate=0.002, epochs=10)).loss_history
    assert all(b < a for a, b in zip(trace, trace[1:]))


def test_pmf_bitwise_deterministic():
    train = random_train(6)
    a = fit_pmf(train, small_config("PMF"))
    b = fit_pmf(train, small_config("PMF"))
    assert np.array_equal(a.user_factors, b.user_factors) and np.array_equal(a.item_factors, b.item_factors)


def test_nmf_nonnegative_after_every_epoch(block):
    train = block[1].train
    for epochs in range(1, 6):
        m = fit_nmf(train, TrainConfig("NMF", factors=4, learning_rate=0.02, epochs=epochs))
        assert m.user_factors.min() >= 0 and m.item_factors.min() >= 0


def test_nmf_rank_one_reconstruction():
    g = np.random.default_rng(3)
    a, b = g.uniform(1, 3, 40), g.uniform(1, 3, 30)
    mask = g.random((40, 30)) < 0.5
    u, i = np.nonzero(mask)
    train = ratings_from(list(zip(u, i, a[u] * b[i])), 40, 30)
    m = fit_nmf(train, TrainConfig("NMF", factors=2, learning_rate=0.01, regularization=0.0, epochs=200))
    rmse = math.sqrt(np.mean((m.predict(u, i) - a[u] * b[i]) ** 2))
    assert rmse < 0.5
    again = fit_nmf(train, TrainConfig("NMF", factors=2, learning_rate=0.01, regularization=0.0, epochs=200))
    assert np.array_equal(m.item_factors, again.item_factors)


def test_divergence_names_epoch():
    train = random_train(7)
    with pytest.raises(DivergenceError, match="epoch"):
        fit_mf(train, TrainConfig("MF", factors=10, learning_rate=5.0, epochs=50))


# WMF


def test_wmf_normal_matrix_positive_definite():
    g = np.random.default_rng(0)
    Y = g.normal(size=(30, 6))
    for obs in (np.array([], int), np.array([1, 4, 9])):
        A = normal_matrix(Y, obs, 1.0, 0.01, 0.1)
        assert np.all(np.linalg.eigvalsh(A) > 0)


def test_wmf_equal_confidence_gives_shared_system():
    g = np.random.default_rng(1)
    Y = g.normal(size=(12, 4))
    A1 = normal_matrix(Y, np.array([0, 1, 2]), 0.5, 0.5, 0.1)
    A2 = normal_matrix(Y, np.array([7, 9]), 0.5, 0.5, 0.1)
    assert np.allclose(A1, A2)


def test_wmf_equal_confidence_identical_histories_rank_identically():
    rows = [(u, i, 5) for u in range(5) for i in ([0, 1, 2] if u < 3 else [3, 4, 5])]
    train = ratings_from(rows, 5, 8)
    m = fit_wmf(train, TrainConfig("WMF", factors=3, confidence=0.5, unobserved_confidence=0.5, epochs=5))
    recs = recommend_topk(m, train, 5, exclude_seen=False)
    assert recs.items_for(0).tolist() == recs.items_for(1).tolist() == recs.items_for(2).tolist()
    assert recs.items_for(3).tolist() == recs.items_for(4).tolist()


def test_wmf_observed_outscore_unobserved(block):
    train = block[1].train
    m = fit_wmf(train, TrainConfig("WMF", factors=8, regularization=0.1, epochs=10))
    S = m.user_factors @ m.item_factors.T
    observed = np.zeros_like(S, dtype=bool)
    observed[train.users, train.items] = True
    assert S[observed].mean() > S[~observed].mean() + 0.2
    assert all(b <= a + 1e-9 for a, b in zip(m.loss_history, m.loss_history[1:]))


def test_wmf_singular_without_regularization():
    # one factor and an item nobody interacts with, b small: still PD; force singularity with d > n_items
    train = ratings_from([(0, 0, 5), (1, 1, 5)], 2, 2)
    with pytest.raises(SingularSystemError, match="regularization > 0"):
        fit_wmf(train, TrainConfig("WMF", factors=5, regularization=0.0, epochs=2))


# BPR


def test_bpr_dominance():
    train = ratings_from([(u, 0, 5) for u in range(50)], 50, 2)
    m = fit_bpr(train, TrainConfig("BPR", factors=4, learning_rate=0.05, epochs=30))
    S = m.user_factors @ m.item_factors.T
    assert np.mean(S[:, 0] > S[:, 1]) >= 0.95


def test_bpr_auc_after_one_epoch(block):
    train = block[1].train
    m = fit_bpr(train, TrainConfig("BPR", factors=8, learning_rate=0.1, epochs=1))
    us, ps, ns = bpr_triples(train, 3, np.random.default_rng(99))
    xs = np.einsum("ij,ij->i", m.user_factors[us], m.item_factors[ps] - m.item_factors[ns])
    assert np.mean(xs > 0) > 0.5


def test_bpr_triples_are_valid_and_seeded():
    train = random_train(8)
    a = bpr_triples(train, 2, np.random.default_rng(5))
    b = bpr_triples(train, 2, np.random.default_rng(5))
    assert all(np.array_equal(x, y) for x, y in zip(a, b))
    pairs = train.pairs()
    us, ps, ns = a
    assert len(us) == 2 * len(train)
    assert all((u, p) in pairs and (u, n) not in pairs for u, p, n in zip(us.tolist(), ps.tolist(), ns.tolist()))


# UserKNN


def test_knn_hand_example():
    # items 0,1,2; u0 = (8, 6, .), u1 = (8, 6, 4), u2 = (2, 9, 7)
    train = ratings_from([(0, 0, 8), (0, 1, 6), (1, 0, 8), (1, 1, 6), (1, 2, 4), (2, 0, 2), (2, 1, 9), (2, 2, 7)])
    m = fit_userknn(train, TrainConfig("UserKNN", k_neighbors=5))
    mean = [7.0, 6.0, 6.0]
    c0 = [8 - 7, 6 - 7]
    c1 = [8 - 6, 6 - 6]
    c2 = [2 - 6, 9 - 6]

    def cos(x, y):
        return sum(a * b for a, b in zip(x, y)) / math.sqrt(sum(a * a for a in x) * sum(b * b for b in y))

    s1, s2 = cos(c0, c1), cos(c0, c2)
    expected = mean[0] + (s1 * (4 - mean[1]) + s2 * (7 - mean[2])) / (abs(s1) + abs(s2))
    assert m.score(np.array([0]))[0, 2] == pytest.approx(expected, abs=1e-9)
    assert expected == pytest.approx(5.5833, abs=1e-4)


def test_knn_similarity_edge_cases():
    train = ratings_from(
        [(0, 0, 8), (0, 1, 4), (1, 0, 8), (1, 1, 4), (2, 2, 3), (2, 3, 9)], 3, 4
    )
    m = fit_userknn(train, TrainConfig("UserKNN", k_neighbors=2))
    S = m.similarity.toarray()
    assert S[0, 1] == pytest.approx(1.0)
    assert S[0, 2] == 0.0 and S[2, 0] == 0.0
    assert np.all(np.diag(S) == 0)
    assert S.min() >= -1 and S.max() <= 1
    # user 2 has no neighbours who rated items 0/1: falls back to own mean
    assert m.score(np.array([2]))[0, 0] == pytest.approx(6.0)


# tuning and persistence


def test_grid_single_config(block):
    cfg = small_config("MF")
    res = grid_search(block[1], [cfg])
    assert res.best == cfg and len(res.scores) == 1


def test_grid_prefers_mf_over_random(block):
    grid = [TrainConfig("Random"), TrainConfig("MF", factors=8, learning_rate=0.01, epochs=40)]
    res = grid_search(block[1], grid)
    assert res.best.algorithm == "MF"
    assert [c for c, _ in res.scores] == grid


def test_grid_all_fail(block):
    bad = [TrainConfig("MF", learning_rate=50.0, epochs=30), TrainConfig("PMF", learning_rate=50.0, epochs=30)]
    with pytest.raises(TrainingError, match="every config"):
        grid_search(block[1], bad)


def test_expand_grid_order():
    grid = expand_grid("MF", {"factors": [1, 2], "epochs": [3, 4]}, seed=7)
    assert [(c.factors, c.epochs) for c in grid] == [(1, 3), (1, 4), (2, 3), (2, 4)]
    assert all(c.seed == 7 for c in grid)
    assert len(expand_grid("MostPop")) == 1


@pytest.mark.parametrize("algo", ALGORITHMS)
def test_dump_load_round_trip(algo):
    train = random_train(9)
    model = fit(train, small_config(algo))
    again = load_model(dump_model(model), train)
    assert recommend_topk(again, train, 10).same_lists(recommend_topk(model, train, 10))


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig("HPF")
    with pytest.raises(ValueError):
        TrainConfig("WMF", confidence=0.01, unobserved_confidence=1.0)
    cfg = TrainConfig("BPR", factors=3)
    assert TrainConfig.from_dict(cfg.to_dict()) == cfg
