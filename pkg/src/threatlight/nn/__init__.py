"""From-scratch feedforward anomaly detector.

Dense layers with batch normalization and ReLU, a sigmoid head, Adam
training with early stopping, finite-difference gradient checking, and
a versioned binary weight container. numpy is the only dependency; no
autograd framework is involved.
"""

from .model import (
    DEFAULT_DIMS,
    BN_EPS,
    ModelBundle,
    NonFiniteInput,
    SchemaMismatch,
    RequestContext,
    init_model,
    forward,
    label_verdict,
    classify,
)
from .modelio import (
    BadMagic,
    DimMismatch,
    TruncatedFile,
    VersionUnsupported,
    load_model,
    save_model,
)
from .train import DegenerateDataset, NonFiniteLoss, TrainingConfig, TrainingHistory, train
from .gradcheck import gradient_check

__all__ = [
    "DEFAULT_DIMS",
    "BN_EPS",
    "ModelBundle",
    "NonFiniteInput",
    "SchemaMismatch",
    "RequestContext",
    "init_model",
    "forward",
    "label_verdict",
    "classify",
    "BadMagic",
    "DimMismatch",
    "TruncatedFile",
    "VersionUnsupported",
    "load_model",
    "save_model",
    "DegenerateDataset",
    "NonFiniteLoss",
    "TrainingConfig",
    "TrainingHistory",
    "train",
    "gradient_check",
]
