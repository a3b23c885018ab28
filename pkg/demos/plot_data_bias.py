"""
Theme imbalance in the input data
=================================

Before any model is trained, the catalog itself can be skewed: a handful of
themes may own most of the books, and popularity may cluster in some themes.
"""

import numpy as np

from themetric.audit import run_data_bias_audit
from themetric.corpus import build_catalog, popular_set, preprocess, split
from themetric.synthetic import themed_corpus

# 25 themes whose sizes fall off linearly, 3000 readers
corpus = themed_corpus(
    n_users=3000, n_items=1500, n_themes=25, theme_sizes=np.linspace(3, 0.3, 25), seed=5
)
ds = preprocess(corpus.interactions, corpus.items)
catalog = build_catalog(corpus.themes, corpus.items).align(ds)
train = split(ds, seed=42).train
popular = popular_set(train, 0.2)
print(f"{ds.n_users} users, {ds.n_items} books, {len(ds.ratings)} ratings")

report = run_data_bias_audit(train, catalog, popular, top_fraction=0.2)
print(f"the top 20% of themes ({len(report['top_themes'])}) hold "
      f"{100 * report['top_theme_share']:.1f}% of unique books")

# per-theme chi-squared: is theme membership independent of being popular?
print(f"{report['significant_themes']} of {report['n_themes']} themes deviate at alpha = 0.05")
for tid, res in sorted(report["chi_square"].items(), key=lambda kv: kv[1]["p_value"])[:5]:
    print(f"  theme {tid:>2}: chi2 = {res['statistic']:7.3f}  p = {res['p_value']:.4f}")

# average popularity ratio: mean share of all interactions per book, by theme
apr = report["avg_popularity_ratio"]
top = sorted(apr, key=lambda t: -apr[t])[:3]
print("themes with the most-read books on average:", ", ".join(f"{t} ({apr[t]:.2e})" for t in top))
