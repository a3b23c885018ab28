"""
Exposure of an over-engaged theme
=================================

A small theme whose books attract many interactions can end up filling a
large share of recommendation slots.  The exposure ratio compares that share
with the theme's share of unique training books.
"""

from themetric.corpus import build_catalog, preprocess, split
from themetric.metrics import exposure_ratio
from themetric.recengine import TrainConfig, fit, recommend_topk
from themetric.synthetic import themed_corpus

corpus = themed_corpus(
    n_users=1000, n_items=500, n_themes=5, theme_sizes=[0.25, 1, 1, 1, 1],
    amplified_theme=0, amplification=30, seed=0,
)
ds = preprocess(corpus.interactions, corpus.items)
catalog = build_catalog(corpus.themes, corpus.items).align(ds)
train = split(ds, seed=1).train

for algo in ("Random", "MostPop", "WMF", "BPR"):
    model = fit(train, TrainConfig(algo, factors=20, epochs=15, learning_rate=0.02, seed=1))
    recs = recommend_topk(model, train, k=10)
    rep = exposure_ratio(recs, train, catalog)
    e = rep.themes[0]
    print(f"{algo:<8} theme 0: {e.share_in_recs:6.1%} of slots vs {e.share_in_train:6.1%} of books "
          f"-> ratio {e.ratio:.2f}")

# Counting distinct recommended books instead of slots gives a softer picture.
unique = exposure_ratio(recs, train, catalog, rec_basis="unique")
print(f"BPR, unique-book basis: ratio {unique.ratio(0):.2f}")
