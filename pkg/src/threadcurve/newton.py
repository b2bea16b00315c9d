"""Inverse-square gravity baseline over flat embedding space.

Shares the post/window encoder and cumulative context with the curvature
model, but reduces the discussion to a scalar mass and a weighted-average
position, attracting each cluster by inverse squared distance.
"""

from __future__ import annotations

import numpy as np

from .autodiff import Var, stack
from .curvature import (_loss_into_store, cumulative_context, encode_post,
                        encode_window, temporal_loss, ForwardTrace, StepOutput)
from .optim import Adam, init_params

DIST_EPS = 1e-6


def param_spec(cfg, w):
    return [
        ("W1", (cfg.h1, cfg.post_width)),
        ("W2", (cfg.h1, cfg.comment_width)),
        ("B1", (cfg.h1,)),
        ("W3", (cfg.N + 1,)),
        ("Wp2", (cfg.h2, cfg.h1)),
        ("Bp1", (cfg.h2,)),
        ("Wp1", (1, cfg.h2)),
        ("Bp2", (1,)),
        ("Wp3", (cfg.N * w,)),
        ("Wp4", (cfg.n,)),
    ]


def init_model(cfg, w, seed):
    return init_params(param_spec(cfg, w), seed)


def _as_vars(store):
    return {name: Var(store.get(name)) for name in store.names()}


def newton_mass(pv, ctx):
    hidden = (pv["Wp2"] @ ctx + pv["Bp1"]).sigmoid()
    return (pv["Wp1"] @ hidden + pv["Bp2"]).sigmoid()[0]


def newton_position(pv, user_vectors, mask, prefix_len):
    """exp-weighted average of embedded commenters' vectors up to position
    prefix_len; zero vector when none commented."""
    d = user_vectors.shape[1]
    numer = None
    denom = None
    for j in range(prefix_len):
        if not mask[j]:
            continue
        omega = pv["Wp3"][j].exp()
        contrib = omega * Var(user_vectors[j])
        numer = contrib if numer is None else numer + contrib
        denom = omega if denom is None else denom + omega
    if numer is None:
        return Var(np.zeros(d))
    return numer / denom


def newton_heads(pv, mass, position, centers):
    """y1[l] = sigmoid(M / (|r - C_l|^2 + eps)); y2 = relu of the weighted sum."""
    args = []
    for l in range(len(centers)):
        diff = position - Var(centers[l])
        d2 = diff.square().sum() + DIST_EPS
        args.append(mass / d2)
    arg_vec = stack(args)
    y1 = arg_vec.sigmoid()
    y2 = (pv["Wp4"] @ arg_vec).relu()
    return y1, y2, arg_vec


def forward(store, x1, x2, centers, user_vectors, mask, w):
    """centers here are flat d-dimensional cluster centers (no time)."""
    pv = _as_vars(store)
    n_pred = x2.shape[0]
    encodings = [encode_post(pv, x1)]
    for k in range(n_pred - 1):
        encodings.append(encode_window(pv, x2[k]))
    trace = ForwardTrace()
    for i in range(n_pred):
        ctx = cumulative_context(pv, encodings[:i + 1], i)
        mass = newton_mass(pv, ctx)
        position = newton_position(pv, user_vectors, mask, i * w)
        y1, y2, arg_vec = newton_heads(pv, mass, position, centers)
        trace.steps.append(StepOutput(y1=y1, y2=y2, r_prime=arg_vec,
                                      r_total=y2, m_diag=mass, g_inv=None))
    return trace, pv


def discussion_loss(store, instance, w, lam=1.0):
    trace, pv = forward(store, instance["x1"], instance["x2"],
                        instance["flat_centers"], instance["user_vectors"],
                        instance["user_mask"], w)
    loss = temporal_loss(trace, instance["labels"], instance["growth"],
                         instance["mask"], lam=lam)
    return _loss_into_store(store, pv, loss)


def train_temporal(dataset, cfg, w, seed=0, epochs=30, lr=1e-3, store=None,
                   return_losses=False):
    if not dataset:
        raise ValueError("empty dataset")
    if store is None:
        store = init_model(cfg, w, seed)
    opt = Adam(store, lr=lr)
    epoch_losses = []
    for _ in range(epochs):
        total = 0.0
        for instance in dataset:
            store.zero_grad()
            total += discussion_loss(store, instance, w, lam=cfg.lam)
            opt.step()
        epoch_losses.append(total / len(dataset))
    if return_losses:
        return store, epoch_losses
    return store


def predict_temporal(store, instance, w, threshold=0.5):
    trace, _ = forward(store, instance["x1"], instance["x2"],
                       instance["flat_centers"], instance["user_vectors"],
                       instance["user_mask"], w)
    y1 = trace.y1_array()
    return {
        "y1": y1,
        "decisions": (y1 > threshold).astype(int),
        "y2": trace.y2_array(),
        "trace": trace,
    }
