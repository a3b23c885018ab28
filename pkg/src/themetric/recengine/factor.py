"""
Latent-factor models trained by stochastic gradient descent.

MF, PMF and NMF regress the raw ratings; BPR ranks observed items above
unobserved ones.  All four draw every random number from a generator seeded
by ``TrainConfig.seed``, so a (data, config) pair fixes the model bit for bit.
"""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field

import numpy as np
from numba import njit

from ..corpus import Ratings
from ..errors import DataError, DivergenceError
from .base import TrainConfig

_log = logging.getLogger(__name__)

INIT_STD = 0.1


@dataclass(eq=False)
class FactorModel:
    kind: str
    user_factors: np.ndarray
    item_factors: np.ndarray
    user_bias: np.ndarray | None = None
    item_bias: np.ndarray | None = None
    global_mean: float = 0.0
    config: TrainConfig | None = None
    loss_history: list[float] = field(default_factory=list)

    @property
    def n_users(self) -> int:
        return self.user_factors.shape[0]

    @property
    def n_items(self) -> int:
        return self.item_factors.shape[0]

    def predict(self, users, items) -> np.ndarray:
        """Scores for aligned (user, item) index arrays."""
        users = np.asarray(users)
        items = np.asarray(items)
        s = np.einsum("ij,ij->i", self.user_factors[users], self.item_factors[items])
        if self.user_bias is not None:
            s = s + self.global_mean + self.user_bias[users] + self.item_bias[items]
        return s

    def score(self, users: np.ndarray) -> np.ndarray:
        s = self.user_factors[users] @ self.item_factors.T
        if self.user_bias is not None:
            s += self.global_mean + self.user_bias[users, None] + self.item_bias[None, :]
        return s

    def to_dict(self) -> dict:
        def dense(a):
            return None if a is None else a.tolist()

        return {
            "kind": self.kind,
            "config": self.config.to_dict() if self.config else None,
            "global_mean": self.global_mean,
            "user_factors": dense(self.user_factors),
            "item_factors": dense(self.item_factors),
            "user_bias": dense(self.user_bias),
            "item_bias": dense(self.item_bias),
            "loss_history": list(self.loss_history),
        }

    @classmethod
    def from_dict(cls, d: dict) -> FactorModel:
        def arr(key):
            v = d.get(key)
            return None if v is None else np.asarray(v, dtype=np.float64)

        cfg = d.get("config")
        return cls(
            d["kind"],
            arr("user_factors"),
            arr("item_factors"),
            arr("user_bias"),
            arr("item_bias"),
            d.get("global_mean", 0.0),
            TrainConfig.from_dict(cfg) if cfg else None,
            list(d.get("loss_history", [])),
        )


@njit(cache=True)
def _sgd_epoch(users, items, ratings, order, P, Q, bu, bi, mu, lr, reg, use_bias, nonneg):
    d = P.shape[1]
    for t in range(order.shape[0]):
        idx = order[t]
        u = users[idx]
        i = items[idx]
        pred = 0.0
        for f in range(d):
            pred += P[u, f] * Q[i, f]
        if use_bias:
            pred += mu + bu[u] + bi[i]
        e = ratings[idx] - pred
        if use_bias:
            bu[u] += lr * (e - reg * bu[u])
            bi[i] += lr * (e - reg * bi[i])
        for f in range(d):
            pf = P[u, f]
            qf = Q[i, f]
            P[u, f] = pf + lr * (e * qf - reg * pf)
            Q[i, f] = qf + lr * (e * pf - reg * qf)
            if nonneg:
                if P[u, f] < 0.0:
                    P[u, f] = 0.0
                if Q[i, f] < 0.0:
                    Q[i, f] = 0.0


@njit(cache=True)
def _squared_loss(users, items, ratings, P, Q, bu, bi, mu, reg, use_bias):
    # sum over observed pairs of 0.5*e^2 + 0.5*reg*(|p_u|^2 + |q_i|^2 + b_u^2 + b_i^2)
    d = P.shape[1]
    total = 0.0
    for idx in range(users.shape[0]):
        u = users[idx]
        i = items[idx]
        pred = 0.0
        norm = 0.0
        for f in range(d):
            pred += P[u, f] * Q[i, f]
            norm += P[u, f] * P[u, f] + Q[i, f] * Q[i, f]
        if use_bias:
            pred += mu + bu[u] + bi[i]
            norm += bu[u] * bu[u] + bi[i] * bi[i]
        e = ratings[idx] - pred
        total += 0.5 * e * e + 0.5 * reg * norm
    return total


def _all_finite(*arrays) -> bool:
    return all(a is None or np.all(np.isfinite(a)) for a in arrays)


def _fit_sgd(train: Ratings, config: TrainConfig, kind: str, use_bias: bool, nonneg: bool):
    if len(train) == 0:
        raise DataError(f"{kind}: empty train set")
    rng = np.random.default_rng(config.seed)
    d = config.factors
    mu = float(train.ratings.mean()) if use_bias else 0.0
    if nonneg:
        scale = math.sqrt(2.0 * float(train.ratings.mean()) / d) if d else 0.0
        P = rng.uniform(0.0, scale, (train.n_users, d))
        Q = rng.uniform(0.0, scale, (train.n_items, d))
    else:
        P = rng.normal(0.0, INIT_STD, (train.n_users, d))
        Q = rng.normal(0.0, INIT_STD, (train.n_items, d))
    bu = np.zeros(train.n_users)
    bi = np.zeros(train.n_items)
    users, items, vals = train.users, train.items, train.ratings
    lr, reg = config.learning_rate, config.regularization
    history = []
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, config.epochs + 1):
            order = rng.permutation(len(train))
            _sgd_epoch(users, items, vals, order, P, Q, bu, bi, mu, lr, reg, use_bias, nonneg)
            if not _all_finite(P, Q, bu, bi):
                raise DivergenceError(kind, epoch)
            loss = _squared_loss(users, items, vals, P, Q, bu, bi, mu, reg, use_bias)
            history.append(float(loss))
    _log.debug("%s: final loss %.4f after %d epochs", kind, history[-1], config.epochs)
    if use_bias:
        return FactorModel(kind, P, Q, bu, bi, mu, config, history)
    return FactorModel(kind, P, Q, None, None, 0.0, config, history)


def fit_mf(train: Ratings, config: TrainConfig) -> FactorModel:
    """Biased matrix factorization: ``mu + b_u + b_i + p_u . q_i``."""
    return _fit_sgd(train, config, "MF", use_bias=True, nonneg=False)


def fit_pmf(train: Ratings, config: TrainConfig) -> FactorModel:
    """Probabilistic MF: Gaussian likelihood with Gaussian priors, i.e. L2-regularized ``p_u . q_i``."""
    return _fit_sgd(train, config, "PMF", use_bias=False, nonneg=False)


def fit_nmf(train: Ratings, config: TrainConfig) -> FactorModel:
    """Nonnegative MF by projected SGD; factors are clamped at zero after every step."""
    return _fit_sgd(train, config, "NMF", use_bias=False, nonneg=True)


def bpr_triples(train: Ratings, n_negatives: int, rng: np.random.Generator):
    """
    Sample one epoch of (user, positive, negative) triples.

    ``len(train) * n_negatives`` observed pairs are drawn uniformly with
    replacement; each gets a negative drawn uniformly from the items the user
    has not rated, by rejection.  Users who rated every item are skipped.
    """
    n_items = train.n_items
    eligible = np.flatnonzero(train.user_counts[train.users] < n_items)
    if len(eligible) == 0:
        raise DataError("BPR: no user has an unobserved item to sample")
    n = len(train) * n_negatives
    pick = eligible[rng.integers(0, len(eligible), n)]
    us = train.users[pick]
    ps = train.items[pick]
    keys = train.users * n_items + train.items  # sorted: Ratings is (user, item) ordered
    ns = rng.integers(0, n_items, n)
    bad = np.arange(n)
    while True:
        cand = us[bad] * n_items + ns[bad]
        pos = np.searchsorted(keys, cand)
        hit = (pos < len(keys)) & (keys[np.minimum(pos, len(keys) - 1)] == cand)
        bad = bad[hit]
        if len(bad) == 0:
            break
        ns[bad] = rng.integers(0, n_items, len(bad))
    return us, ps, ns


@njit(cache=True)
def _bpr_epoch(us, ps, ns, P, Q, lr, reg):
    d = P.shape[1]
    loss = 0.0
    for t in range(us.shape[0]):
        u = us[t]
        i = ps[t]
        j = ns[t]
        x = 0.0
        for f in range(d):
            x += P[u, f] * (Q[i, f] - Q[j, f])
        # -log(sigmoid(x)), computed stably
        if x > 0:
            loss += math.log1p(math.exp(-x))
            z = math.exp(-x) / (1.0 + math.exp(-x))
        else:
            loss += -x + math.log1p(math.exp(x))
            z = 1.0 / (1.0 + math.exp(x))
        for f in range(d):
            pu = P[u, f]
            qi = Q[i, f]
            qj = Q[j, f]
            P[u, f] = pu + lr * (z * (qi - qj) - reg * pu)
            Q[i, f] = qi + lr * (z * pu - reg * qi)
            Q[j, f] = qj + lr * (-z * pu - reg * qj)
    return loss


def fit_bpr(train: Ratings, config: TrainConfig) -> FactorModel:
    """Pairwise ranking by SGD on ``-log sigmoid(x_ui - x_uj)`` over sampled triples."""
    if len(train) == 0:
        raise DataError("BPR: empty train set")
    rng = np.random.default_rng(config.seed)
    d = config.factors
    P = rng.normal(0.0, INIT_STD, (train.n_users, d))
    Q = rng.normal(0.0, INIT_STD, (train.n_items, d))
    history = []
    with np.errstate(over="ignore", invalid="ignore"):
        for epoch in range(1, config.epochs + 1):
            us, ps, ns = bpr_triples(train, config.n_negatives, rng)
            loss = _bpr_epoch(us, ps, ns, P, Q, config.learning_rate, config.regularization)
            if not (_all_finite(P, Q) and math.isfinite(loss)):
                raise DivergenceError("BPR", epoch)
            history.append(float(loss))
    return FactorModel("BPR", P, Q, None, None, 0.0, config, history)
