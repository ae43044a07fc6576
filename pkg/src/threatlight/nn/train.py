"""Training loop: Adam on binary cross-entropy with early stopping.

All optimisation runs on float64 copies of the parameters; the best
validation-loss snapshot is cast back to the float32 storage format.
Batch normalization uses batch statistics (population variance) in the
forward pass, with the full gradient through those statistics in the
backward pass, and running statistics updated with momentum.

Everything stochastic (split, shuffles, dropout masks) draws from one
seeded generator, so a (seed, dataset) pair reproduces its history
bit for bit.
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

from .model import BN_EPS, ModelBundle, sigmoid


class DegenerateDataset(ValueError):
    """Fewer than two classes present (or a split came out empty)."""


class NonFiniteLoss(FloatingPointError):
    """Training or validation loss became NaN or infinite."""


@dataclass(frozen=True, slots=True)
class TrainingConfig:
    batch_size: int = 32
    learning_rate: float = 0.001
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    dropout_rate: float = 0.3
    early_stop_patience: int = 10
    max_epochs: int = 200
    bn_momentum: float = 0.9
    seed: int = 0

    def __post_init__(self):
        if not 0.0 <= self.dropout_rate < 1.0:
            raise ValueError("dropout_rate must be in [0, 1)")
        if self.early_stop_patience < 1:
            raise ValueError("early_stop_patience must be >= 1")
        if self.batch_size < 1 or self.max_epochs < 1:
            raise ValueError("batch_size and max_epochs must be >= 1")


@dataclass(frozen=True)
class TrainingHistory:
    train_loss: tuple[float, ...]
    val_loss: tuple[float, ...]
    best_epoch: int
    best_val_loss: float
    epochs_run: int
    stopped_early: bool


def _bce(p: np.ndarray, y: np.ndarray) -> float:
    return float(-np.mean(y * np.log(p) + (1.0 - y) * np.log(1.0 - p)))


def _stratified_split(y: np.ndarray, rng: np.random.Generator) -> tuple[np.ndarray, np.ndarray]:
    """80/20 split preserving label proportions; deterministic per rng state."""
    train_idx: list[np.ndarray] = []
    val_idx: list[np.ndarray] = []
    for cls in np.unique(y):
        idx = np.flatnonzero(y == cls)
        idx = rng.permutation(idx)
        n_tr = max(1, int(len(idx) * 0.8))
        train_idx.append(idx[:n_tr])
        val_idx.append(idx[n_tr:])
    tr = np.concatenate(train_idx)
    va = np.concatenate(val_idx)
    return np.sort(tr), np.sort(va)


class _Workspace:
    """Float64 parameter set plus Adam moments."""

    def __init__(self, model: ModelBundle):
        self.dims = model.dims
        self.W = [w.astype(np.float64) for w in model.weights]
        self.B = [b.astype(np.float64) for b in model.biases]
        self.G = [g.astype(np.float64) for g in model.gamma]
        self.Bt = [b.astype(np.float64) for b in model.beta]
        self.RM = [m.astype(np.float64) for m in model.run_mean]
        self.RV = [v.astype(np.float64) for v in model.run_var]
        self.params = self.W + self.B + self.G + self.Bt
        self.m = [np.zeros_like(p) for p in self.params]
        self.v = [np.zeros_like(p) for p in self.params]
        self.t = 0

    def snapshot(self):
        return ([p.copy() for p in self.params],
                [m.copy() for m in self.RM],
                [v.copy() for v in self.RV])

    def predict(self, X: np.ndarray) -> np.ndarray:
        """Inference-mode forward on the float64 workspace."""
        h = X
        n_hidden = len(self.G)
        for j in range(n_hidden):
            z = h @ self.W[j].T + self.B[j]
            zh = (z - self.RM[j]) / np.sqrt(self.RV[j] + BN_EPS)
            h = np.maximum(self.G[j] * zh + self.Bt[j], 0.0)
        z = h @ self.W[-1].T + self.B[-1]
        return sigmoid(z[:, 0])


def _train_step(ws: _Workspace, X: np.ndarray, y: np.ndarray, cfg: TrainingConfig,
                rng: np.random.Generator) -> float:
    """One forward/backward/Adam update on a batch; returns the batch loss."""
    n_hidden = len(ws.G)
    batch = X.shape[0]

    # Forward, keeping everything the backward pass needs.
    h = X
    acts = []  # per hidden layer: (h_in, z, mu, inv_std, zh, relu_mask, drop_mask)
    for j in range(n_hidden):
        z = h @ ws.W[j].T + ws.B[j]
        mu = z.mean(axis=0)
        var = z.var(axis=0)
        inv_std = 1.0 / np.sqrt(var + BN_EPS)
        zh = (z - mu) * inv_std
        a = ws.G[j] * zh + ws.Bt[j]
        relu_mask = a > 0.0
        out = np.where(relu_mask, a, 0.0)
        if cfg.dropout_rate > 0.0:
            drop = (rng.random(out.shape) >= cfg.dropout_rate) / (1.0 - cfg.dropout_rate)
            out = out * drop
        else:
            drop = None
        acts.append((h, z, mu, inv_std, zh, relu_mask, drop))
        h = out
        ws.RM[j] = cfg.bn_momentum * ws.RM[j] + (1.0 - cfg.bn_momentum) * mu
        ws.RV[j] = cfg.bn_momentum * ws.RV[j] + (1.0 - cfg.bn_momentum) * var
    z_out = h @ ws.W[-1].T + ws.B[-1]
    p = sigmoid(z_out[:, 0])
    loss = _bce(p, y)

    # Backward.
    grads_W = [None] * len(ws.W)
    grads_B = [None] * len(ws.B)
    grads_G = [None] * n_hidden
    grads_Bt = [None] * n_hidden
    dz = ((p - y) / batch)[:, None]
    grads_W[-1] = dz.T @ h
    grads_B[-1] = dz.sum(axis=0)
    dh = dz @ ws.W[-1]
    for j in range(n_hidden - 1, -1, -1):
        h_in, z, mu, inv_std, zh, relu_mask, drop = acts[j]
        if drop is not None:
            dh = dh * drop
        da = np.where(relu_mask, dh, 0.0)
        grads_G[j] = (da * zh).sum(axis=0)
        grads_Bt[j] = da.sum(axis=0)
        dzh = da * ws.G[j]
        # gradient through batch statistics
        dvar = np.sum(dzh * (z - mu), axis=0) * (-0.5) * inv_std**3
        dmu = -np.sum(dzh, axis=0) * inv_std + dvar * (-2.0 / batch) * np.sum(z - mu, axis=0)
        dz_in = dzh * inv_std + dvar * (2.0 / batch) * (z - mu) + dmu / batch
        grads_W[j] = dz_in.T @ h_in
        grads_B[j] = dz_in.sum(axis=0)
        if j > 0:
            dh = dz_in @ ws.W[j]

    # Adam update.
    grads = grads_W + grads_B + grads_G + grads_Bt
    ws.t += 1
    b1c = 1.0 - cfg.beta1**ws.t
    b2c = 1.0 - cfg.beta2**ws.t
    for p_, g, m, v in zip(ws.params, grads, ws.m, ws.v):
        m *= cfg.beta1
        m += (1.0 - cfg.beta1) * g
        v *= cfg.beta2
        v += (1.0 - cfg.beta2) * g * g
        p_ -= cfg.learning_rate * (m / b1c) / (np.sqrt(v / b2c) + cfg.adam_eps)
    return loss


def train(
    model: ModelBundle,
    features: Sequence[Sequence[float]],
    labels: Sequence[int],
    cfg: TrainingConfig = TrainingConfig(),
) -> tuple[ModelBundle, TrainingHistory]:
    """Fit the model, returning the best-validation snapshot and history.

    The dataset is split 80/20 (stratified). Stops when validation
    loss has not improved for `early_stop_patience` epochs. Raises
    DegenerateDataset for single-class data, NonFiniteLoss if the loss
    diverges.
    """
    X = np.asarray(features, dtype=np.float64)
    y = np.asarray(labels, dtype=np.float64).ravel()
    if X.ndim != 2 or X.shape[0] != y.shape[0]:
        raise ValueError("features must be (n, width) with one label per row")
    if X.shape[1] != model.input_width:
        raise ValueError(f"expected {model.input_width} features, got {X.shape[1]}")
    if not np.all(np.isfinite(X)):
        raise ValueError("features contain non-finite values")
    if np.unique(y).size < 2:
        raise DegenerateDataset("training requires at least two classes")

    rng = np.random.default_rng(cfg.seed)
    tr_idx, va_idx = _stratified_split(y, rng)
    if va_idx.size == 0:
        raise DegenerateDataset("validation split is empty; dataset too small")
    X_tr, y_tr = X[tr_idx], y[tr_idx]
    X_va, y_va = X[va_idx], y[va_idx]

    ws = _Workspace(model)
    train_hist: list[float] = []
    val_hist: list[float] = []
    best_val = float("inf")
    best_epoch = -1
    best_snap = ws.snapshot()
    since_best = 0

    for epoch in range(cfg.max_epochs):
        order = rng.permutation(len(X_tr))
        losses = []
        for start in range(0, len(order), cfg.batch_size):
            idx = order[start : start + cfg.batch_size]
            loss = _train_step(ws, X_tr[idx], y_tr[idx], cfg, rng)
            if not np.isfinite(loss):
                raise NonFiniteLoss(f"batch loss became {loss} at epoch {epoch}")
            losses.append(loss)
        train_hist.append(float(np.mean(losses)))

        val_loss = _bce(ws.predict(X_va), y_va)
        if not np.isfinite(val_loss):
            raise NonFiniteLoss(f"validation loss became {val_loss} at epoch {epoch}")
        val_hist.append(val_loss)

        if val_loss < best_val:
            best_val = val_loss
            best_epoch = epoch
            best_snap = ws.snapshot()
            since_best = 0
        else:
            since_best += 1
            if since_best >= cfg.early_stop_patience:
                break

    params, run_mean, run_var = best_snap
    n_affine = len(ws.W)
    n_hidden = len(ws.G)
    W = params[:n_affine]
    B = params[n_affine : 2 * n_affine]
    G = params[2 * n_affine : 2 * n_affine + n_hidden]
    Bt = params[2 * n_affine + n_hidden :]
    epochs_run = len(train_hist)
    trained = ModelBundle(
        model.dims, W, B, G, Bt, run_mean, run_var, model.schema_hash,
        {"epochs_run": epochs_run, "best_val_loss": best_val, "seed": cfg.seed},
    )
    history = TrainingHistory(
        train_loss=tuple(train_hist),
        val_loss=tuple(val_hist),
        best_epoch=best_epoch,
        best_val_loss=best_val,
        epochs_run=epochs_run,
        stopped_early=epochs_run < cfg.max_epochs,
    )
    return trained, history
