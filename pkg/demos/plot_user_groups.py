"""
Who gets pushed toward the mainstream?
======================================

Readers are grouped twice: by the share of popular books in their history
(Mainstream above 70%, LongTail below 30%) and by thematic diversity
(Specialists read few themes unevenly, Generalists many themes evenly).
Comparing each group's history with its recommendations shows whose taste
the model flattens.
"""

from themetric.audit import segment_users
from themetric.corpus import build_catalog, popular_set, preprocess, split
from themetric.recengine import TrainConfig, fit, recommend_topk
from themetric.segmentation import group_delta_report
from themetric.synthetic import themed_corpus

corpus = themed_corpus(n_users=1500, n_items=600, n_themes=8, taste_concentration=0.3, seed=2)
ds = preprocess(corpus.interactions, corpus.items)
catalog = build_catalog(corpus.themes, corpus.items).align(ds)
train = split(ds, seed=3).train
popular = popular_set(train, 0.2)

seg = segment_users(train, popular, catalog)
th = seg.thresholds
print(f"theme count P25/P75 = {th.theme_count_p25}/{th.theme_count_p75}, "
      f"Gini P25/P75 = {th.gini_p25:.3f}/{th.gini_p75:.3f}")

recs = recommend_topk(fit(train, TrainConfig("MostPop")), train)
report = group_delta_report(recs, seg.stats, seg.popularity, seg.diversity, catalog, popular)

print(f"\n{'group':<11} {'users':>6} {'themes':>13} {'gini':>15} {'popular share':>17}")
for row in report.table("popularity") + report.table("diversity"):
    if not row.population:
        continue
    print(f"{row.group:<11} {row.population:>6} "
          f"{row.hist_theme_count:5.2f} -> {row.rec_theme_count:5.2f} "
          f"{row.hist_gini:6.3f} -> {row.rec_gini:6.3f} "
          f"{row.hist_popular_share:7.2f} -> {row.rec_popular_share:5.2f}")

# the 3 x 3 intersection, including empty cells
for row in report.table("cell"):
    print(f"{row.group:<24} {row.population:>5}")
