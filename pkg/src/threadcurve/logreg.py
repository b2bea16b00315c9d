"""Logistic-regression engagement baseline.

Per-cluster binary classifiers over aggregated prefix features: merged-text
content/surface block plus a per-cluster social block (mean member vector
and mean reply-graph degree of the cluster's engaged users).
"""

from __future__ import annotations

import numpy as np

from .cooccur import reply_edges
from .features import _content_block, _surface_block
from .optim import Adam, OptimError, ParameterStore


def _sigmoid(z):
    return np.where(z >= 0, 1.0 / (1.0 + np.exp(-np.clip(z, -500, 500))),
                    np.exp(np.clip(z, -500, 500)) / (1.0 + np.exp(np.clip(z, -500, 500))))


def aggregate_step_features(discussion, prefix_comments, cluster, assignments,
                            lexicons, embedding):
    """Feature vector for one (discussion prefix, cluster) pair.

    Content/surface blocks come from the merged text of the post and the
    prefix comments; the social block is specific to `cluster`.
    """
    merged = discussion.post.title + " " + discussion.post.body
    for c in prefix_comments:
        merged += " " + c.text
    depth = max((c.depth for c in prefix_comments), default=0)
    elapsed = (prefix_comments[-1].timestamp - discussion.post.timestamp
               if prefix_comments else 0)
    content = _content_block(merged, lexicons)
    surface = _surface_block(merged, depth, elapsed)

    engaged = sorted({c.author for c in prefix_comments
                      if assignments.get(c.author) == cluster})
    d = embedding.dim
    if engaged:
        mean_vec = np.mean([embedding.vector(u) for u in engaged], axis=0)
        degree = {}
        for child, parent in reply_edges(discussion):
            if child != parent:
                degree[child] = degree.get(child, 0) + 1
                degree[parent] = degree.get(parent, 0) + 1
        mean_degree = float(np.mean([degree.get(u, 0) for u in engaged]))
    else:
        mean_vec = np.zeros(d)
        mean_degree = 0.0
    return np.concatenate([content, surface, mean_vec, [mean_degree]])


def nontemporal_features(discussion, lexicons, embedding):
    """Post-only features: merged-text blocks plus the author's vector."""
    merged = discussion.post.title + " " + discussion.post.body
    content = _content_block(merged, lexicons)
    surface = _surface_block(merged, 0, 0)
    author = discussion.post.author
    if author in embedding.index:
        vec = embedding.vector(author)
    else:
        vec = np.zeros(embedding.dim)
    return np.concatenate([content, surface, vec])


def logreg_loss(store, X, y, l2):
    """Mean BCE + l2 penalty; fills store gradients. Returns the loss."""
    w = store.get("w")
    b = store.get("b")[0]
    p = _sigmoid(X @ w + b)
    eps = 1e-12
    loss = float(-np.mean(y * np.log(p + eps) + (1 - y) * np.log(1 - p + eps))
                 + l2 * (np.dot(w, w) + b * b))
    resid = (p - y) / len(y)
    store.set_grad("w", X.T @ resid + 2 * l2 * w)
    store.set_grad("b", np.array([resid.sum() + 2 * l2 * b]))
    return loss


def fit_binary(X, y, l2=1e-4, seed=0, epochs=300, lr=0.1):
    """Fit one logistic unit by full-batch Adam. Deterministic per seed
    (zero init makes the seed moot, but the contract holds)."""
    del seed
    X = np.asarray(X, dtype=float)
    y = np.asarray(y, dtype=float)
    if len(X) == 0:
        raise OptimError("empty training set")
    store = ParameterStore()
    store.register("w", np.zeros(X.shape[1]))
    store.register("b", np.zeros(1))
    opt = Adam(store, lr=lr)
    for _ in range(epochs):
        store.zero_grad()
        logreg_loss(store, X, y, l2)
        opt.step()
    return store.get("w").copy(), float(store.get("b")[0])


class LogRegModel:
    """One weight vector per cluster (temporal) or a single unit."""

    def __init__(self, weights, biases):
        self.weights = np.asarray(weights, dtype=float)
        self.biases = np.asarray(biases, dtype=float)

    def predict_proba(self, cluster, x):
        return float(_sigmoid(self.weights[cluster] @ x + self.biases[cluster]))


def train_temporal(per_cluster_data, l2=1e-4, seed=0, epochs=300, lr=0.1):
    """per_cluster_data: list (length n) of (X, y) arrays."""
    weights, biases = [], []
    for X, y in per_cluster_data:
        w, b = fit_binary(X, y, l2=l2, seed=seed, epochs=epochs, lr=lr)
        weights.append(w)
        biases.append(b)
    return LogRegModel(np.stack(weights), np.array(biases))
