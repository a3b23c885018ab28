"""
Small metric kernels by hand
============================

The ranking, concentration and significance metrics on inputs small enough
to check with pencil and paper.
"""

import math

from themetric.metrics import chi2_sf, chi_square_2x2, gini, ndcg_at_k, precision_recall_f1_at_k

# Relevant items sit at ranks 1 and 4 of a ten-item list.
recs = [11, 3, 5, 12, 7, 8, 9, 1, 2, 4]
relevant = {11, 12}
print("P/R/F1 @10:", precision_recall_f1_at_k(recs, relevant, 10))
print("NDCG@10:", round(ndcg_at_k(recs, relevant, 10), 4),
      "=", round((1 + 1 / math.log2(5)) / (1 + 1 / math.log2(3)), 4))

# Gini of a reader's theme histogram.  Empty themes are ignored unless asked for.
hist = [0, 0, 1, 3]
print("Gini, nonzero themes:", gini(hist), " all four themes:", gini(hist, "full"))

# 2x2 table: rows in-theme / other, columns popular / not popular
res = chi_square_2x2([[10, 20], [20, 10]])
print(f"chi2 = {res.statistic:.4f}, p = {res.p_value:.5f}, significant: {res.significant}")
print(f"upper tail at the 5% critical value 3.841: {chi2_sf(3.841):.4f}")
