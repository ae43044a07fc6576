"""threatlight: streaming security event analytics.

Log ingestion → feature extraction → neural anomaly detection →
multiplicative threat scoring → live dashboard, in one process.
"""

__version__ = "0.1.0"

from .types import (
    AnomalyVerdict,
    AttackType,
    Band,
    FactorBreakdown,
    HttpRequestRecord,
    PacketRecord,
    Protocol,
    RawLogRecord,
    TcpFlag,
    ThreatAssessment,
    ValidationResult,
    validate,
)

__all__ = [
    "AnomalyVerdict",
    "AttackType",
    "Band",
    "FactorBreakdown",
    "HttpRequestRecord",
    "PacketRecord",
    "Protocol",
    "RawLogRecord",
    "TcpFlag",
    "ThreatAssessment",
    "ValidationResult",
    "validate",
    "__version__",
]
