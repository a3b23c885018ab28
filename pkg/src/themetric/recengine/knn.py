"""
User-based k-nearest-neighbour rating prediction.

Similarity is mean-centered cosine restricted to co-rated items: both the dot
product and the two norms run over items rated by both users, with each user
centered on their own mean rating.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp
from numba import njit

from ..corpus import Ratings
from ..errors import DataError
from .base import TrainConfig

_BLOCK = 256


@njit(cache=True)
def _similarity_block(rows, r_ptr, r_idx, r_val, c_ptr, c_idx, c_val, n_users):
    out = np.zeros((rows.shape[0], n_users))
    num = np.zeros(n_users)
    nu = np.zeros(n_users)
    nv = np.zeros(n_users)
    touched = np.zeros(n_users, dtype=np.bool_)
    for b in range(rows.shape[0]):
        u = rows[b]
        for p in range(r_ptr[u], r_ptr[u + 1]):
            i = r_idx[p]
            cu = r_val[p]
            for q in range(c_ptr[i], c_ptr[i + 1]):
                v = c_idx[q]
                if v == u:
                    continue
                cv = c_val[q]
                num[v] += cu * cv
                nu[v] += cu * cu
                nv[v] += cv * cv
                touched[v] = True
        for v in range(n_users):
            if touched[v]:
                den = nu[v] * nv[v]
                if den > 0.0:
                    s = num[v] / np.sqrt(den)
                    if s > 1.0:
                        s = 1.0
                    elif s < -1.0:
                        s = -1.0
                    out[b, v] = s
                num[v] = 0.0
                nu[v] = 0.0
                nv[v] = 0.0
                touched[v] = False
    return out


@njit(cache=True)
def _score_block(rows, s_ptr, s_idx, s_val, c_ptr, c_idx, c_val, means, k, n_users):
    n_items = c_ptr.shape[0] - 1
    out = np.empty((rows.shape[0], n_items))
    sim = np.zeros(n_users)
    max_col = 0
    for i in range(n_items):
        if c_ptr[i + 1] - c_ptr[i] > max_col:
            max_col = c_ptr[i + 1] - c_ptr[i]
    buf_s = np.empty(max_col)
    buf_c = np.empty(max_col)
    for b in range(rows.shape[0]):
        u = rows[b]
        for p in range(s_ptr[u], s_ptr[u + 1]):
            sim[s_idx[p]] = s_val[p]
        for i in range(n_items):
            n = 0
            for q in range(c_ptr[i], c_ptr[i + 1]):
                v = c_idx[q]
                if v != u and sim[v] != 0.0:
                    buf_s[n] = sim[v]
                    buf_c[n] = c_val[q]
                    n += 1
            acc = 0.0
            norm = 0.0
            if n <= k:
                for t in range(n):
                    acc += buf_s[t] * buf_c[t]
                    norm += abs(buf_s[t])
            else:
                # raters are in ascending user order, so a stable sort breaks ties by index
                order = np.argsort(-buf_s[:n], kind="mergesort")
                for t in range(k):
                    j = order[t]
                    acc += buf_s[j] * buf_c[j]
                    norm += abs(buf_s[j])
            out[b, i] = means[u] + acc / norm if norm > 0.0 else means[u]
        for p in range(s_ptr[u], s_ptr[u + 1]):
            sim[s_idx[p]] = 0.0
    return out


@dataclass(eq=False)
class NeighborModel:
    similarity: sp.csr_matrix
    k_neighbors: int
    user_means: np.ndarray
    centered: sp.csc_matrix
    config: TrainConfig | None = None
    kind: str = "UserKNN"

    @property
    def n_users(self) -> int:
        return self.similarity.shape[0]

    @property
    def n_items(self) -> int:
        return self.centered.shape[1]

    def score(self, users: np.ndarray) -> np.ndarray:
        """``mean_u + sum_v sim(u,v) (r_vi - mean_v) / sum_v |sim(u,v)|`` over the k most similar raters of each item."""
        s, c = self.similarity, self.centered
        return _score_block(
            np.asarray(users, dtype=np.int64),
            s.indptr, s.indices, s.data,
            c.indptr, c.indices, c.data,
            self.user_means, self.k_neighbors, self.n_users,
        )


def user_means(train: Ratings) -> np.ndarray:
    sums = np.bincount(train.users, weights=train.ratings, minlength=train.n_users)
    counts = train.user_counts
    return np.divide(sums, counts, out=np.zeros(train.n_users), where=counts > 0)


def fit_userknn(train: Ratings, config: TrainConfig) -> NeighborModel:
    if len(train) == 0:
        raise DataError("UserKNN: empty train set")
    means = user_means(train)
    # keep explicit zeros: a rating equal to the user mean still marks a co-rated item
    r_ptr, r_idx, r_val = _pattern_csr(train, means)
    csc = _pattern_csc(train, means)
    blocks = []
    for start in range(0, train.n_users, _BLOCK):
        rows = np.arange(start, min(start + _BLOCK, train.n_users))
        dense = _similarity_block(
            rows, r_ptr, r_idx, r_val, csc.indptr, csc.indices, csc.data, train.n_users
        )
        blocks.append(sp.csr_matrix(dense))
    sim = sp.vstack(blocks, format="csr")
    sim.sort_indices()
    return NeighborModel(sim, config.k_neighbors, means, csc, config)


def _pattern_csr(train: Ratings, means: np.ndarray):
    # Ratings is (user, item) sorted, so it is already CSR order
    ptr = np.concatenate([[0], np.cumsum(train.user_counts)])
    return ptr, train.items, train.ratings - means[train.users]


def _pattern_csc(train: Ratings, means: np.ndarray) -> sp.csc_matrix:
    order = np.lexsort((train.users, train.items))
    vals = (train.ratings - means[train.users])[order]
    ptr = np.concatenate([[0], np.cumsum(train.item_counts)])
    return sp.csc_matrix((vals, train.users[order], ptr), shape=(train.n_users, train.n_items))
