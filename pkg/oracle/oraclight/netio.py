"""Model container reader and plain-Python inference.

Reads the SSNN binary container (the interchange format the main
engine trains and saves) and evaluates the network with ordinary
Python floats: per-unit sequential dot products, inference batch
normalization against the stored running statistics, ReLU, and the
clamped stable sigmoid. float32 parameters widen exactly to doubles,
so the only divergence from an accelerated implementation is
summation order inside dot products, which stays far below the
equivalence tolerances.
"""

from __future__ import annotations

import math
import struct
from pathlib import Path
from typing import Union

MAGIC = b"SSNN"
FORMAT_VERSION = 1
BN_EPS = 1e-5
CONFIDENCE_CLAMP = 1e-12

_HEADER = struct.Struct("<4sH32sH")
_META = struct.Struct("<IQf")


class ModelFormatError(ValueError):
    """Container violates the SSNN layout."""


class Network:
    """Loaded parameters, ready for forward().

    weights[i] is a list of rows (one per output unit) for affine
    layer i; the last affine layer is the output head. Batch-norm
    vectors exist per hidden layer; `bn_std` caches sqrt(var + eps)
    per unit, and the forward divides by it rather than multiplying
    by a reciprocal so the rounding matches the trainer exactly.
    """

    __slots__ = ("dims", "weights", "biases", "gamma", "beta",
                 "run_mean", "bn_std", "schema_hash", "meta")

    def __init__(self, dims, weights, biases, gamma, beta, run_mean, run_var,
                 schema_hash: bytes, meta: dict):
        self.dims = tuple(dims)
        self.weights = weights
        self.biases = biases
        self.gamma = gamma
        self.beta = beta
        self.run_mean = run_mean
        self.bn_std = [[math.sqrt(v + BN_EPS) for v in layer] for layer in run_var]
        self.schema_hash = schema_hash
        self.meta = meta

    @property
    def input_width(self) -> int:
        return self.dims[0]

    @property
    def n_hidden(self) -> int:
        return len(self.dims) - 2

    @property
    def parameter_count(self) -> int:
        affine = sum(len(rows) * len(rows[0]) + len(b) for rows, b in zip(self.weights, self.biases))
        bn = sum(len(g) + len(b) for g, b in zip(self.gamma, self.beta))
        return affine + bn


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise ModelFormatError(
                f"needed {n} bytes at offset {self.pos}, file has {len(self.data)}")
        out = self.data[self.pos:self.pos + n]
        self.pos += n
        return out

    def floats(self, count: int) -> list[float]:
        return list(struct.unpack(f"<{count}f", self.take(count * 4)))


def load_network(path: Union[str, Path]) -> Network:
    """Read and verify an SSNN container."""
    data = Path(path).read_bytes()
    r = _Reader(data)
    magic, version, schema_hash, layer_count = _HEADER.unpack(r.take(_HEADER.size))
    if magic != MAGIC:
        raise ModelFormatError(f"expected magic {MAGIC!r}, found {magic!r}")
    if version != FORMAT_VERSION:
        raise ModelFormatError(f"format version {version} not supported")
    if layer_count < 2:
        raise ModelFormatError("dimension chain needs at least 2 entries")
    dims = struct.unpack(f"<{layer_count}I", r.take(4 * layer_count))
    if any(d == 0 for d in dims):
        raise ModelFormatError(f"zero-width layer in dims {dims}")

    weights, biases = [], []
    for i in range(layer_count - 1):
        out_d, in_d = dims[i + 1], dims[i]
        flat = r.floats(out_d * in_d)
        weights.append([flat[k * in_d:(k + 1) * in_d] for k in range(out_d)])
        biases.append(r.floats(out_d))
    gamma, beta, run_mean, run_var = [], [], [], []
    for j in range(layer_count - 2):
        width = dims[j + 1]
        gamma.append(r.floats(width))
        beta.append(r.floats(width))
        run_mean.append(r.floats(width))
        var = r.floats(width)
        if any(v <= 0 for v in var):
            raise ModelFormatError("running variances must be positive")
        run_var.append(var)
    epochs_run, seed, best_val_loss = _META.unpack(r.take(_META.size))
    if r.pos != len(data):
        raise ModelFormatError(f"{len(data) - r.pos} trailing bytes after meta footer")

    return Network(dims, weights, biases, gamma, beta, run_mean, run_var,
                   schema_hash, {"epochs_run": epochs_run, "seed": seed,
                                 "best_val_loss": best_val_loss})


def sigmoid(z: float) -> float:
    """Numerically stable logistic, clamped inside (0,1)."""
    if z >= 0:
        p = 1.0 / (1.0 + math.exp(-z))
    else:
        ez = math.exp(z)
        p = ez / (1.0 + ez)
    if p < CONFIDENCE_CLAMP:
        return CONFIDENCE_CLAMP
    if p > 1.0 - CONFIDENCE_CLAMP:
        return 1.0 - CONFIDENCE_CLAMP
    return p


def forward(net: Network, x: list[float]) -> float:
    """Single feature vector → confidence in (0,1).

    Zero activations are skipped inside the dot products; adding a
    0.0 term never changes an IEEE sum, so the result is identical
    to the dense evaluation while most of the work disappears (the
    input is sparse and ReLU silences roughly half of each layer).
    """
    if len(x) != net.dims[0]:
        raise ValueError(f"expected {net.dims[0]} features, got {len(x)}")
    for v in x:
        if math.isnan(v) or math.isinf(v):
            raise ValueError("feature vector contains non-finite values")

    h = x
    for j in range(net.n_hidden):
        W, b = net.weights[j], net.biases[j]
        g, bt = net.gamma[j], net.beta[j]
        m, sd = net.run_mean[j], net.bn_std[j]
        nz = [(k, hk) for k, hk in enumerate(h) if hk != 0.0]
        nxt = []
        for i in range(len(W)):
            row = W[i]
            s = 0.0
            for k, hk in nz:
                s += row[k] * hk
            z = s + b[i]
            a = g[i] * ((z - m[i]) / sd[i]) + bt[i]
            nxt.append(a if a > 0.0 else 0.0)
        h = nxt
    row = net.weights[-1][0]
    s = 0.0
    for k, hk in enumerate(h):
        if hk != 0.0:
            s += row[k] * hk
    return sigmoid(s + net.biases[-1][0])
