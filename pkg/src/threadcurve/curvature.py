"""Curvature-based engagement model.

A discussion loads a learned diagonal "stress-energy" vector at each
cluster of the user spacetime; contracting it with a learned diagonal
inverse metric gives a per-cluster scalar curvature that drives the
engagement and growth heads.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .autodiff import Var, concat, stack
from .optim import Adam, ParameterStore, init_params

PROB_CLIP = 1e-7


@dataclass
class ModelConfig:
    comment_width: int      # per-comment feature width f
    post_width: int         # f + d_w (title block appended)
    d: int                  # user embedding dimension
    n: int                  # number of user clusters
    N: int                  # windows / prediction steps per discussion
    h1: int = 128
    h2: int = 64
    h3: int = 64
    lam: float = 1.0        # growth-loss weight


def param_spec(cfg):
    return [
        ("W1", (cfg.h1, cfg.post_width)),
        ("W2", (cfg.h1, cfg.comment_width)),
        ("B1", (cfg.h1,)),
        ("W3", (cfg.N + 1,)),
        ("W5", (cfg.h2, cfg.h1 + cfg.d + 1)),
        ("B4", (cfg.h2,)),
        ("W4", (cfg.d + 1, cfg.h2)),
        ("B3", (cfg.d + 1,)),
        ("W7", (cfg.h3, cfg.d + 1)),
        ("B6", (cfg.h3,)),
        ("W6", (cfg.d + 1, cfg.h3)),
        ("B5", (cfg.d + 1,)),
        ("W8", (cfg.n,)),
    ]


def init_model(cfg, seed):
    store = init_params(param_spec(cfg), seed)
    # positive head weights keep relu(R_total) alive at the start of
    # training (R' is positive, so negative W8 would zero the growth head
    # and its gradient permanently)
    store.set("W8", np.abs(store.get("W8")))
    return store


def _as_vars(store):
    return {name: Var(store.get(name)) for name in store.names()}


@dataclass
class StepOutput:
    y1: object          # Var, shape (n,)
    y2: object          # Var, scalar
    r_prime: object     # Var, shape (n,)
    r_total: object     # Var, scalar
    m_diag: object      # Var, shape (n, d+1)
    g_inv: object       # Var, shape (n, d+1)


@dataclass
class ForwardTrace:
    steps: list = field(default_factory=list)  # StepOutput per prediction step

    def y1_array(self):
        return np.stack([s.y1.data for s in self.steps])

    def y2_array(self):
        return np.array([float(s.y2.data) for s in self.steps])

    def g_inv_array(self):
        return np.stack([s.g_inv.data for s in self.steps])

    def m_array(self):
        return np.stack([s.m_diag.data for s in self.steps])


def encode_post(pv, x1):
    return (pv["W1"] @ Var(x1) + pv["B1"]).relu()


def encode_window(pv, x2_row):
    return (pv["W2"] @ Var(x2_row) + pv["B1"]).relu()


def cumulative_context(pv, encodings, i):
    """Softly weighted prefix mean of encodings[0..i]; weights exp(W3[j])."""
    omegas = [pv["W3"][j].exp() for j in range(i + 1)]
    numer = omegas[0] * encodings[0]
    denom = omegas[0]
    for j in range(1, i + 1):
        numer = numer + omegas[j] * encodings[j]
        denom = denom + omegas[j]
    return numer / denom


def stress_energy(pv, ctx, centers_step):
    """Diagonal stress-energy vectors for every cluster; (n, d+1) in (0,1)."""
    rows = [concat([ctx, Var(centers_step[l])]) for l in range(len(centers_step))]
    z = stack(rows)
    hidden = (z @ pv["W5"].T + pv["B4"]).sigmoid()
    return (hidden @ pv["W4"].T + pv["B3"]).sigmoid()


def inverse_metric(pv, centers_step):
    """Diagonal inverse metric per cluster; a pure function of the
    time-prepended cluster centers."""
    c = Var(np.asarray(centers_step, dtype=float))
    hidden = (c @ pv["W7"].T + pv["B6"]).sigmoid()
    return (hidden @ pv["W6"].T + pv["B5"]).sigmoid()


def curvature(pv, m_diag, g_inv):
    r_prime = (m_diag * g_inv).sum(axis=1)
    r_total = pv["W8"] @ r_prime
    return r_prime, r_total


def neutral_point(d):
    """Value of R' when every weight and bias is zero: Σ 0.5·0.5 over d+1.

    R' = Σ M·g_inv is strictly positive (both factors are sigmoid outputs),
    so σ2(R') alone could never cross the fixed 0.5 decision threshold.
    Centering the engagement head at this operating point lets y1 swing to
    either side of the threshold, mirroring the shifted growth target used
    for the (equally sign-limited) regression head.
    """
    return (d + 1) / 4.0


def heads(r_prime, r_total, neutral=0.0):
    return (r_prime - neutral).sigmoid(), r_total.relu()


def forward(store, x1, x2, centers, steps=None):
    """Run the model over prediction steps 0..steps-1.

    x2 rows are mean feature vectors of windows 1..N (row k = window k+1);
    step i consumes the post encoding plus windows 1..i and the step-i
    spacetime centers. Returns a ForwardTrace.
    """
    cfg_steps = len(centers) if steps is None else steps
    pv = _as_vars(store)
    encodings = [encode_post(pv, x1)]
    for k in range(cfg_steps - 1):
        encodings.append(encode_window(pv, x2[k]))
    trace = ForwardTrace()
    for i in range(cfg_steps):
        ctx = cumulative_context(pv, encodings[:i + 1], i)
        m_diag = stress_energy(pv, ctx, centers[i])
        g_inv = inverse_metric(pv, centers[i])
        r_prime, r_total = curvature(pv, m_diag, g_inv)
        y1, y2 = heads(r_prime, r_total,
                       neutral=neutral_point(m_diag.data.shape[1] - 1))
        trace.steps.append(StepOutput(y1=y1, y2=y2, r_prime=r_prime,
                                      r_total=r_total, m_diag=m_diag,
                                      g_inv=g_inv))
    return trace, pv


def bce(p, target):
    """Mean binary cross-entropy with clipped probabilities."""
    p = p.clip(PROB_CLIP, 1.0 - PROB_CLIP)
    t = Var(np.asarray(target, dtype=float))
    return -(t * p.log() + (1.0 - t) * (1.0 - p).log()).mean()


def temporal_loss(trace, labels, growth, mask, lam=1.0):
    """Mean over valid steps of BCE(y1, Y) + lam * (y2 - g)^2."""
    terms = []
    for i, step in enumerate(trace.steps):
        if not mask[i]:
            continue
        term = bce(step.y1, labels[i])
        if lam != 0.0:
            diff = step.y2 - float(growth[i])
            terms.append(term + lam * diff.square())
        else:
            terms.append(term)
    if not terms:
        raise ValueError("no valid prediction steps")
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    return total * (1.0 / len(terms))


def _loss_into_store(store, pv, loss):
    loss.backward()
    for name in store.names():
        g = pv[name].grad
        if g is None:  # parameter not on this graph (e.g. no window path)
            g = np.zeros_like(store.get(name))
        store.set_grad(name, g)
    return float(loss.data)


def discussion_loss(store, instance, lam=1.0):
    """Forward + loss for one discussion instance; fills gradients."""
    trace, pv = forward(store, instance["x1"], instance["x2"], instance["centers"])
    loss = temporal_loss(trace, instance["labels"], instance["growth"],
                         instance["mask"], lam=lam)
    return _loss_into_store(store, pv, loss)


def train_temporal(dataset, cfg, seed=0, epochs=30, lr=1e-3, store=None,
                   return_losses=False):
    """Adam over discussions: one optimizer step per discussion per epoch."""
    if not dataset:
        raise ValueError("empty dataset")
    if store is None:
        store = init_model(cfg, seed)
    opt = Adam(store, lr=lr)
    epoch_losses = []
    for _ in range(epochs):
        total = 0.0
        for instance in dataset:
            store.zero_grad()
            total += discussion_loss(store, instance, lam=cfg.lam)
            opt.step()
        epoch_losses.append(total / len(dataset))
    if return_losses:
        return store, epoch_losses
    return store


def predict_temporal(store, x1, x2, centers, threshold=0.5):
    """Per-step probabilities, thresholded decisions and growth estimates."""
    trace, _ = forward(store, x1, x2, centers)
    y1 = trace.y1_array()
    return {
        "y1": y1,
        "decisions": (y1 > threshold).astype(int),
        "y2": trace.y2_array(),
        "trace": trace,
    }


def nontemporal_forward(store, x1, centers0):
    """Step-0 pass from the post features alone; y3 = sigmoid(R_total)."""
    pv = _as_vars(store)
    ctx = encode_post(pv, x1)  # single-term cumulative context
    m_diag = stress_energy(pv, ctx, centers0)
    g_inv = inverse_metric(pv, centers0)
    _, r_total = curvature(pv, m_diag, g_inv)
    y3 = r_total.sigmoid()
    return y3, pv


def predict_nontemporal(store, x1, centers0):
    y3, _ = nontemporal_forward(store, x1, centers0)
    prob = float(y3.data)
    return prob, ("attract" if prob > 0.5 else "no-attract")


def nontemporal_batch_loss(store, instances):
    """Mean BCE of y3 over (x1, centers0, label) instances; fills grads."""
    pv = _as_vars(store)
    terms = []
    for inst in instances:
        ctx = encode_post(pv, inst["x1"])
        m_diag = stress_energy(pv, ctx, inst["centers0"])
        g_inv = inverse_metric(pv, inst["centers0"])
        _, r_total = curvature(pv, m_diag, g_inv)
        y3 = r_total.sigmoid().clip(PROB_CLIP, 1.0 - PROB_CLIP)
        t = float(inst["label"])
        terms.append(-(t * y3.log() + (1.0 - t) * (1.0 - y3).log()))
    total = terms[0]
    for t in terms[1:]:
        total = total + t
    loss = total * (1.0 / len(terms))
    return _loss_into_store(store, pv, loss)


def train_nontemporal(dataset, cfg, seed=0, epochs=100, lr=5e-3, store=None,
                      return_losses=False):
    if not dataset:
        raise ValueError("empty dataset")
    if store is None:
        store = init_model(cfg, seed)
    opt = Adam(store, lr=lr)
    losses = []
    for _ in range(epochs):
        store.zero_grad()
        losses.append(nontemporal_batch_loss(store, dataset))
        opt.step()
    if return_losses:
        return store, losses
    return store


def metric_distance(g_inv, x, y):
    """Diagonal-metric distance with the metric as elementwise 1/g_inv.

    Always >= the Euclidean distance when g_inv components are in (0,1).
    """
    g_inv = np.asarray(g_inv, dtype=float)
    diff = np.asarray(x, dtype=float) - np.asarray(y, dtype=float)
    return float(np.sqrt(np.sum(diff ** 2 / g_inv)))
