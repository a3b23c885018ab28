"""
Training the recommenders
=========================

Eight algorithms share one interface: ``fit`` a model from a ``TrainConfig``,
then ``recommend_topk`` scores every unseen item and keeps the best ten.
"""

from themetric.corpus import preprocess, split
from themetric.metrics import evaluate_accuracy, item_coverage
from themetric.recengine import ALGORITHMS, TrainConfig, expand_grid, grid_search
from themetric.recengine.tuning import needs_tuning, train_and_recommend
from themetric.synthetic import block_interactions

# Two reader groups, each loving its own half of the catalog, with 5% noise.
ds = preprocess(block_interactions(n_users=200, n_items=100, seed=0))
data = split(ds, seed=0)
print(f"train {len(data.train)}, valid {len(data.valid)}, test {len(data.test)}")

print(f"{'model':<8} {'NDCG@10':>8} {'P@10':>6} {'coverage':>9}")
for algo in ALGORITHMS:
    if needs_tuning(algo):
        # pick hyperparameters by validation NDCG@10 over the default grid
        config = grid_search(data, expand_grid(algo, seed=0)).best
    else:
        config = TrainConfig(algo, seed=0)
    model, recs = train_and_recommend(data, config)
    acc = evaluate_accuracy(recs, data.test)
    print(f"{algo:<8} {acc.ndcg:8.3f} {acc.precision:6.3f} {item_coverage(recs, ds.n_items):9.2%}")

# Every list excludes what the reader already rated, and ties go to the lower item index.
