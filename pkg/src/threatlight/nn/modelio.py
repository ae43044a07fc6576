"""Versioned binary container for model weights.

Layout (all integers little-endian):

    magic       4 bytes  b"SSNN"
    version     u16      currently 1
    schema_hash 32 bytes  SHA-256 of the feature schema manifest
    layer_count u16      number of entries in the dims chain
    dims        u32 × layer_count
    tensors     float32 little-endian, row-major, in fixed order:
                  per affine layer:  W (out×in), b (out)
                  per hidden layer:  gamma, beta, run_mean, run_var
    meta        u32 epochs_run, u64 seed, f32 best_val_loss

Loading verifies magic, version, the dimension chain, and that the
byte count matches exactly, so a truncated or padded file never
produces a silently wrong model.
"""

from __future__ import annotations

import struct
from pathlib import Path
from typing import Union

import numpy as np

from .model import ModelBundle

MAGIC = b"SSNN"
FORMAT_VERSION = 1

_HEADER = struct.Struct("<4sH32sH")
_META = struct.Struct("<IQf")


class ModelFormatError(ValueError):
    pass


class BadMagic(ModelFormatError):
    pass


class VersionUnsupported(ModelFormatError):
    pass


class DimMismatch(ModelFormatError):
    pass


class TruncatedFile(ModelFormatError):
    pass


def save_model(model: ModelBundle, path: Union[str, Path]) -> int:
    """Write the container; returns bytes written."""
    parts = [_HEADER.pack(MAGIC, FORMAT_VERSION, model.schema_hash, len(model.dims))]
    parts.append(struct.pack(f"<{len(model.dims)}I", *model.dims))
    tensors = []
    for w, b in zip(model.weights, model.biases):
        tensors.append(w)
        tensors.append(b)
    for j in range(model.n_hidden):
        tensors.extend((model.gamma[j], model.beta[j], model.run_mean[j], model.run_var[j]))
    for t in tensors:
        arr = np.ascontiguousarray(t, dtype="<f4")
        parts.append(arr.tobytes())
    meta = model.training_meta
    best = meta.get("best_val_loss", float("nan"))
    parts.append(_META.pack(int(meta.get("epochs_run", 0)), int(meta.get("seed", 0)) & (2**64 - 1),
                            float("nan") if best is None else float(best)))
    blob = b"".join(parts)
    Path(path).write_bytes(blob)
    return len(blob)


class _Reader:
    def __init__(self, data: bytes):
        self.data = data
        self.pos = 0

    def take(self, n: int) -> bytes:
        if self.pos + n > len(self.data):
            raise TruncatedFile(f"needed {n} bytes at offset {self.pos}, file has {len(self.data)}")
        out = self.data[self.pos : self.pos + n]
        self.pos += n
        return out

    def tensor(self, shape: tuple[int, ...]) -> np.ndarray:
        count = 1
        for d in shape:
            count *= d
        raw = self.take(count * 4)
        return np.frombuffer(raw, dtype="<f4").reshape(shape).copy()


def load_model(path: Union[str, Path]) -> ModelBundle:
    """Read and verify a container written by save_model."""
    data = Path(path).read_bytes()
    r = _Reader(data)
    magic, version, schema_hash, layer_count = _HEADER.unpack(r.take(_HEADER.size))
    if magic != MAGIC:
        raise BadMagic(f"expected {MAGIC!r}, found {magic!r}")
    if version != FORMAT_VERSION:
        raise VersionUnsupported(f"format version {version} not supported (expected {FORMAT_VERSION})")
    if layer_count < 2:
        raise DimMismatch(f"dimension chain needs at least 2 entries, found {layer_count}")
    dims = struct.unpack(f"<{layer_count}I", r.take(4 * layer_count))
    if any(d == 0 for d in dims):
        raise DimMismatch(f"zero-width layer in dims {dims}")

    weights, biases = [], []
    for i in range(layer_count - 1):
        weights.append(r.tensor((dims[i + 1], dims[i])))
        biases.append(r.tensor((dims[i + 1],)))
    gamma, beta, run_mean, run_var = [], [], [], []
    for j in range(layer_count - 2):
        h = (dims[j + 1],)
        gamma.append(r.tensor(h))
        beta.append(r.tensor(h))
        run_mean.append(r.tensor(h))
        run_var.append(r.tensor(h))
    epochs_run, seed, best_val_loss = _META.unpack(r.take(_META.size))
    if r.pos != len(data):
        raise DimMismatch(f"{len(data) - r.pos} trailing bytes after meta footer")

    try:
        return ModelBundle(
            dims, weights, biases, gamma, beta, run_mean, run_var, schema_hash,
            {"epochs_run": epochs_run, "best_val_loss": float(best_val_loss), "seed": seed},
        )
    except ValueError as e:
        raise DimMismatch(str(e)) from None
