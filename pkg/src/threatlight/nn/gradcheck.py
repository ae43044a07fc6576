"""Finite-difference verification of the analytic gradients.

Runs in train-topology with dropout disabled and batch statistics
frozen to the running values, so the loss is a smooth deterministic
function of the parameters. Analytic gradients from manual backprop
are compared against central differences on a random sample of
parameters; the result is the worst relative disagreement.
"""

from __future__ import annotations

import numpy as np

from .model import BN_EPS, ModelBundle, sigmoid


def _forward_loss(W, B, G, Bt, RM, RV, x: np.ndarray, y: float) -> float:
    h = x
    for j in range(len(G)):
        z = h @ W[j].T + B[j]
        zh = (z - RM[j]) / np.sqrt(RV[j] + BN_EPS)
        h = np.maximum(G[j] * zh + Bt[j], 0.0)
    z = h @ W[-1].T + B[-1]
    p = sigmoid(z[:, 0])[0]
    return float(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def _analytic(W, B, G, Bt, RM, RV, x: np.ndarray, y: float):
    n_hidden = len(G)
    h = x
    acts = []
    for j in range(n_hidden):
        z = h @ W[j].T + B[j]
        inv_std = 1.0 / np.sqrt(RV[j] + BN_EPS)
        zh = (z - RM[j]) * inv_std
        a = G[j] * zh + Bt[j]
        mask = a > 0.0
        acts.append((h, zh, inv_std, mask))
        h = np.where(mask, a, 0.0)
    z_out = h @ W[-1].T + B[-1]
    p = sigmoid(z_out[:, 0])[0]
    loss = float(-(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))

    gW = [None] * len(W)
    gB = [None] * len(B)
    gG = [None] * n_hidden
    gBt = [None] * n_hidden
    dz = np.array([[p - y]])
    gW[-1] = dz.T @ h
    gB[-1] = dz.sum(axis=0)
    dh = dz @ W[-1]
    for j in range(n_hidden - 1, -1, -1):
        h_in, zh, inv_std, mask = acts[j]
        da = np.where(mask, dh, 0.0)
        gG[j] = (da * zh).sum(axis=0)
        gBt[j] = da.sum(axis=0)
        dz_in = da * G[j] * inv_std
        gW[j] = dz_in.T @ h_in
        gB[j] = dz_in.sum(axis=0)
        if j > 0:
            dh = dz_in @ W[j]
    return loss, gW + gB + gG + gBt


def gradient_check(
    model: ModelBundle,
    x,
    y: float,
    n_samples: int = 200,
    h: float = 1e-4,
    seed: int = 0,
) -> float:
    """Max relative error between analytic and numeric gradients.

    Samples at least `n_samples` parameters (all of them when the
    model is smaller). Near-zero gradient pairs (dead ReLU paths) are
    compared absolutely so 0-vs-0 never divides by zero.
    """
    X = np.asarray(x, dtype=np.float64).reshape(1, -1)
    if X.shape[1] != model.input_width:
        raise ValueError(f"expected {model.input_width} features")
    y = float(y)

    W = [w.astype(np.float64) for w in model.weights]
    B = [b.astype(np.float64) for b in model.biases]
    G = [g.astype(np.float64) for g in model.gamma]
    Bt = [b.astype(np.float64) for b in model.beta]
    RM = [m.astype(np.float64) for m in model.run_mean]
    RV = [v.astype(np.float64) for v in model.run_var]
    params = W + B + G + Bt

    _, grads = _analytic(W, B, G, Bt, RM, RV, X, y)

    sizes = [p.size for p in params]
    total = sum(sizes)
    rng = np.random.default_rng(seed)
    if total <= n_samples:
        flat_idx = np.arange(total)
    else:
        flat_idx = rng.choice(total, size=n_samples, replace=False)

    bounds = np.cumsum([0] + sizes)
    max_err = 0.0
    for fi in flat_idx:
        t = int(np.searchsorted(bounds, fi, side="right")) - 1
        off = int(fi - bounds[t])
        flat = params[t].reshape(-1)
        orig = flat[off]
        flat[off] = orig + h
        lp = _forward_loss(W, B, G, Bt, RM, RV, X, y)
        flat[off] = orig - h
        lm = _forward_loss(W, B, G, Bt, RM, RV, X, y)
        flat[off] = orig
        numeric = (lp - lm) / (2.0 * h)
        analytic = float(grads[t].reshape(-1)[off])
        denom = max(abs(analytic), abs(numeric))
        err = abs(analytic - numeric) if denom < 1e-6 else abs(analytic - numeric) / denom
        max_err = max(max_err, err)
    return max_err
