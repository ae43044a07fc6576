"""Network definition: parameter container, initialization, forward pass.

Architecture: input → four hidden blocks (affine → batch norm → ReLU,
dropout while training) → affine → sigmoid. Parameters are held as
float32 (the storage format); arithmetic runs in float64 on cached
casts, so results are exactly reproducible across save/load cycles.

The sigmoid output is clamped to [1e-12, 1 − 1e-12]: confidences stay
strictly inside (0,1) and the cross-entropy loss never sees log(0).
"""

from __future__ import annotations

from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

from ..types import AnomalyVerdict, AttackType

DEFAULT_DIMS = (90, 256, 128, 64, 32, 1)
BN_EPS = 1e-5
CONFIDENCE_CLAMP = 1e-12
DEFAULT_THRESHOLD = 0.5


class SchemaMismatch(ValueError):
    """Model was built against a different feature schema."""


class NonFiniteInput(ValueError):
    """Feature vector contains NaN or infinity."""


class ModelBundle:
    """All learnable state plus the schema hash it is bound to.

    weights[i], biases[i] belong to affine layer i (0-based, the last
    one is the output head). gamma/beta/run_mean/run_var exist per
    hidden layer only. Arrays are float32; `f64()` returns cached
    float64 views used by the forward pass.
    """

    __slots__ = ("dims", "weights", "biases", "gamma", "beta",
                 "run_mean", "run_var", "schema_hash", "training_meta", "_cache64")

    def __init__(self, dims, weights, biases, gamma, beta, run_mean, run_var,
                 schema_hash: bytes, training_meta: Optional[dict] = None):
        self.dims = tuple(int(d) for d in dims)
        self.weights = [np.asarray(w, dtype=np.float32) for w in weights]
        self.biases = [np.asarray(b, dtype=np.float32) for b in biases]
        self.gamma = [np.asarray(g, dtype=np.float32) for g in gamma]
        self.beta = [np.asarray(b, dtype=np.float32) for b in beta]
        self.run_mean = [np.asarray(m, dtype=np.float32) for m in run_mean]
        self.run_var = [np.asarray(v, dtype=np.float32) for v in run_var]
        self.schema_hash = bytes(schema_hash)
        self.training_meta = dict(training_meta or {"epochs_run": 0, "best_val_loss": float("nan"), "seed": 0})
        self._cache64 = None
        self._validate()

    def _validate(self) -> None:
        dims = self.dims
        if len(dims) < 2 or any(d <= 0 for d in dims):
            raise ValueError("layer_dims must be a positive chain of length >= 2")
        n_affine = len(dims) - 1
        n_hidden = n_affine - 1
        if not (len(self.weights) == len(self.biases) == n_affine):
            raise ValueError("one weight/bias pair per affine layer")
        for i, (w, b) in enumerate(zip(self.weights, self.biases)):
            if w.shape != (dims[i + 1], dims[i]) or b.shape != (dims[i + 1],):
                raise ValueError(f"affine layer {i} shape mismatch: {w.shape} vs {(dims[i+1], dims[i])}")
        if not (len(self.gamma) == len(self.beta) == len(self.run_mean) == len(self.run_var) == n_hidden):
            raise ValueError("one batch-norm block per hidden layer")
        for j in range(n_hidden):
            expect = (dims[j + 1],)
            for arr in (self.gamma[j], self.beta[j], self.run_mean[j], self.run_var[j]):
                if arr.shape != expect:
                    raise ValueError(f"batch-norm block {j} shape mismatch")
            if not np.all(self.run_var[j] > 0):
                raise ValueError("running variances must be positive")
        if len(self.schema_hash) != 32:
            raise ValueError("schema_hash must be 32 bytes")

    @property
    def n_hidden(self) -> int:
        return len(self.dims) - 2

    @property
    def input_width(self) -> int:
        return self.dims[0]

    @property
    def parameter_count(self) -> int:
        """Trainable parameters: affine weights/biases plus γ and β."""
        affine = sum(w.size + b.size for w, b in zip(self.weights, self.biases))
        bn = sum(g.size + b.size for g, b in zip(self.gamma, self.beta))
        return affine + bn

    def f64(self):
        """Float64 casts of every tensor, cached until invalidate()."""
        if self._cache64 is None:
            self._cache64 = (
                [w.astype(np.float64) for w in self.weights],
                [b.astype(np.float64) for b in self.biases],
                [g.astype(np.float64) for g in self.gamma],
                [b.astype(np.float64) for b in self.beta],
                [m.astype(np.float64) for m in self.run_mean],
                [v.astype(np.float64) for v in self.run_var],
            )
        return self._cache64

    def invalidate(self) -> None:
        self._cache64 = None

    def copy(self) -> "ModelBundle":
        return ModelBundle(
            self.dims,
            [w.copy() for w in self.weights],
            [b.copy() for b in self.biases],
            [g.copy() for g in self.gamma],
            [b.copy() for b in self.beta],
            [m.copy() for m in self.run_mean],
            [v.copy() for v in self.run_var],
            self.schema_hash,
            dict(self.training_meta),
        )


def init_model(schema_hash: bytes, seed: int, dims: Sequence[int] = DEFAULT_DIMS) -> ModelBundle:
    """He-uniform weights, zero biases, identity batch norm. Deterministic per seed."""
    rng = np.random.default_rng(seed)
    dims = tuple(dims)
    weights, biases = [], []
    for i in range(len(dims) - 1):
        fan_in = dims[i]
        limit = np.sqrt(6.0 / fan_in)
        weights.append(rng.uniform(-limit, limit, size=(dims[i + 1], dims[i])).astype(np.float32))
        biases.append(np.zeros(dims[i + 1], dtype=np.float32))
    hidden = dims[1:-1]
    return ModelBundle(
        dims,
        weights,
        biases,
        gamma=[np.ones(h, dtype=np.float32) for h in hidden],
        beta=[np.zeros(h, dtype=np.float32) for h in hidden],
        run_mean=[np.zeros(h, dtype=np.float32) for h in hidden],
        run_var=[np.ones(h, dtype=np.float32) for h in hidden],
        schema_hash=schema_hash,
        training_meta={"epochs_run": 0, "best_val_loss": float("nan"), "seed": int(seed)},
    )


def sigmoid(z: np.ndarray) -> np.ndarray:
    """Numerically stable logistic, clamped inside (0,1)."""
    out = np.empty_like(z, dtype=np.float64)
    pos = z >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-z[pos]))
    ez = np.exp(z[~pos])
    out[~pos] = ez / (1.0 + ez)
    return np.clip(out, CONFIDENCE_CLAMP, 1.0 - CONFIDENCE_CLAMP)


def forward(
    model: ModelBundle,
    x,
    mode: str = "infer",
    dropout_rate: float = 0.0,
    rng: Optional[np.random.Generator] = None,
):
    """Run the network. 1-D input → float confidence; 2-D → 1-D array.

    infer mode normalizes with running statistics and is a pure
    function of (model, x). train mode normalizes with the current
    batch's statistics and applies inverted dropout when a rate and
    generator are supplied. Raises NonFiniteInput / SchemaMismatch.
    """
    X = np.asarray(x, dtype=np.float64)
    single = X.ndim == 1
    if single:
        X = X[None, :]
    if X.ndim != 2 or X.shape[1] != model.input_width:
        raise SchemaMismatch(f"expected {model.input_width} features, got shape {X.shape}")
    if not np.all(np.isfinite(X)):
        raise NonFiniteInput("feature vector contains non-finite values")
    if mode not in ("infer", "train"):
        raise ValueError(f"unknown mode {mode!r}")

    W, B, G, Bt, M, V = model.f64()
    train = mode == "train"
    h = X
    for j in range(model.n_hidden):
        z = h @ W[j].T + B[j]
        if train:
            mu = z.mean(axis=0)
            var = z.var(axis=0)
        else:
            mu, var = M[j], V[j]
        zh = (z - mu) / np.sqrt(var + BN_EPS)
        a = G[j] * zh + Bt[j]
        h = np.maximum(a, 0.0)
        if train and dropout_rate > 0.0 and rng is not None:
            mask = rng.random(h.shape) >= dropout_rate
            h = h * mask / (1.0 - dropout_rate)
    z = h @ W[-1].T + B[-1]
    conf = sigmoid(z[:, 0])
    return float(conf[0]) if single else conf


@dataclass(frozen=True, slots=True)
class RequestContext:
    """Event identity plus pipeline-side signals the network cannot see."""

    event_id: str
    timestamp: int
    source_ip: str
    repeated_auth_failures: bool = False


def label_verdict(
    confidence: float,
    http_vec: Optional[Sequence[float]],
    ctx: RequestContext,
    threshold: float = DEFAULT_THRESHOLD,
) -> AnomalyVerdict:
    """Turn a confidence into a labeled verdict.

    is_anomalous uses an inclusive threshold (confidence ≥ threshold).
    The label follows flag priority SQLi > XSS > traversal, then
    repeated auth failures, then generic network anomaly; benign
    verdicts are always labeled BENIGN.
    """
    anomalous = confidence >= threshold
    if not anomalous:
        attack = AttackType.BENIGN
    elif http_vec is not None and http_vec[9] >= 0.5:
        attack = AttackType.SQL_INJECTION
    elif http_vec is not None and http_vec[10] >= 0.5:
        attack = AttackType.XSS
    elif http_vec is not None and http_vec[11] >= 0.5:
        attack = AttackType.PATH_TRAVERSAL
    elif ctx.repeated_auth_failures:
        attack = AttackType.BRUTE_FORCE
    else:
        attack = AttackType.NETWORK_ANOMALY
    return AnomalyVerdict(
        event_id=ctx.event_id,
        timestamp=ctx.timestamp,
        confidence=confidence,
        is_anomalous=anomalous,
        attack_type=attack,
        source_ip=ctx.source_ip,
    )


def classify(
    model: ModelBundle,
    flow_vec: Optional[Sequence[float]],
    http_vec: Optional[Sequence[float]],
    ctx: RequestContext,
    expected_schema_hash: Optional[bytes] = None,
    threshold: float = DEFAULT_THRESHOLD,
) -> AnomalyVerdict:
    """Assemble sections, run inference, attach an attack label."""
    from .. import schema as _schema

    if expected_schema_hash is not None and model.schema_hash != expected_schema_hash:
        raise SchemaMismatch("model schema hash does not match the active feature schema")
    x = _schema.assemble(flow_vec, http_vec)
    conf = forward(model, x, mode="infer")
    return label_verdict(conf, http_vec, ctx, threshold)
