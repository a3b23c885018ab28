"""Top-k accuracy under binary relevance."""

from __future__ import annotations

import math
from dataclasses import asdict, dataclass
from typing import Collection, Sequence

import numpy as np

from ..corpus import Ratings
from ..recengine.base import RecommendationSet


def precision_recall_f1_at_k(
    recs: Sequence[int], relevant: Collection[int], k: int = 10
) -> tuple[float, float, float] | None:
    """
    Precision, recall and F1 of the first ``k`` recommendations.

    Returns ``None`` when ``relevant`` is empty (the user is not evaluable).
    Precision divides by ``k`` even when the list is shorter.
    """
    if k < 1:
        raise ValueError("k must be >= 1")
    if not relevant:
        return None
    rel = set(relevant)
    hits = sum(1 for i in list(recs)[:k] if i in rel)
    p = hits / k
    r = hits / len(rel)
    f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return p, r, f1


def ndcg_at_k(recs: Sequence[int], relevant: Collection[int], k: int = 10) -> float | None:
    if k < 1:
        raise ValueError("k must be >= 1")
    if not relevant:
        return None
    rel = set(relevant)
    dcg = sum(1.0 / math.log2(pos + 2) for pos, i in enumerate(list(recs)[:k]) if i in rel)
    idcg = sum(1.0 / math.log2(pos + 2) for pos in range(min(k, len(rel))))
    return dcg / idcg


@dataclass(frozen=True)
class AccuracyReport:
    precision: float
    recall: float
    f1: float
    ndcg: float
    n_users: int
    k: int

    def to_dict(self) -> dict:
        return asdict(self)


def evaluate_accuracy(
    recs: RecommendationSet, truth: Ratings, k: int | None = None, threshold: float | None = None
) -> AccuracyReport:
    """
    Mean precision/recall/NDCG over users with at least one relevant item in
    ``truth``; F1 is the harmonic mean of the averaged precision and recall.
    """
    k = recs.k if k is None else k
    relevant = truth.relevant_sets(threshold)
    ps, rs, ns = [], [], []
    for u in sorted(relevant):
        lst = recs.items_for(u).tolist()
        prf = precision_recall_f1_at_k(lst, relevant[u], k)
        if prf is None:
            continue
        ps.append(prf[0])
        rs.append(prf[1])
        ns.append(ndcg_at_k(lst, relevant[u], k))
    if not ps:
        return AccuracyReport(0.0, 0.0, 0.0, 0.0, 0, k)
    p = float(np.mean(ps))
    r = float(np.mean(rs))
    f1 = 0.0 if p + r == 0 else 2 * p * r / (p + r)
    return AccuracyReport(p, r, f1, float(np.mean(ns)), len(ps), k)


def mean_ndcg(recs: RecommendationSet, truth: Ratings, k: int = 10, threshold=None) -> float:
    return evaluate_accuracy(recs, truth, k, threshold).ndcg
