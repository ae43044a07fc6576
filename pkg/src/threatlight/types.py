"""Shared domain types for the analytics pipeline.

Every type here is an immutable value object: records coming out of
ingestion, detector verdicts, and threat assessments. They carry no
behaviour beyond invariant checking (see `validate`), and are safe to
hand between worker threads after construction.

Timestamps are UTC microseconds since the epoch throughout; sub-second
resolution is required by the rate computations downstream.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

DEFAULT_DECISION_THRESHOLD = 0.5


class Protocol(str, Enum):
    TCP = "TCP"
    UDP = "UDP"
    OTHER = "OTHER"


class TcpFlag(str, Enum):
    FIN = "FIN"
    SYN = "SYN"
    RST = "RST"
    PSH = "PSH"
    ACK = "ACK"
    URG = "URG"
    ECE = "ECE"
    CWR = "CWR"


# Canonical flag order used by feature vectors and wire encoding.
TCP_FLAG_ORDER = (
    TcpFlag.FIN,
    TcpFlag.SYN,
    TcpFlag.RST,
    TcpFlag.PSH,
    TcpFlag.ACK,
    TcpFlag.URG,
    TcpFlag.ECE,
    TcpFlag.CWR,
)


class AttackType(str, Enum):
    BENIGN = "BENIGN"
    SQL_INJECTION = "SQL_INJECTION"
    XSS = "XSS"
    PATH_TRAVERSAL = "PATH_TRAVERSAL"
    BRUTE_FORCE = "BRUTE_FORCE"
    DDOS = "DDOS"
    PORT_SCAN = "PORT_SCAN"
    NETWORK_ANOMALY = "NETWORK_ANOMALY"


class Band(str, Enum):
    GREEN = "GREEN"
    YELLOW = "YELLOW"
    RED = "RED"


@dataclass(frozen=True, slots=True)
class RawLogRecord:
    """One raw line as received from a source, before any parsing."""

    source_id: str
    received_at: int  # UTC microseconds
    raw_line: bytes


@dataclass(frozen=True, slots=True)
class HttpRequestRecord:
    """Normalized HTTP request event.

    `headers` is an ordered name→value multimap, kept as a tuple of
    (name, value) pairs so duplicates and ordering survive round-trips.
    `query` is the raw text after the first "?" — percent-decoding is
    deliberately NOT applied here; the feature layer owns normalization.
    """

    event_id: str
    timestamp: int
    client_ip: str
    method: str
    path: str
    query: str = ""
    headers: tuple[tuple[str, str], ...] = ()
    body_length: int = 0
    status: int | None = None
    user_agent: str | None = None


@dataclass(frozen=True, slots=True)
class PacketRecord:
    """Single observed packet, the unit of flow aggregation."""

    timestamp: int
    src_ip: str
    src_port: int
    dst_ip: str
    dst_port: int
    protocol: Protocol
    length_bytes: int
    tcp_flags: frozenset[TcpFlag] = frozenset()


@dataclass(frozen=True, slots=True)
class AnomalyVerdict:
    """Detector output for one event; payload of the ad_events topic."""

    event_id: str
    timestamp: int
    confidence: float
    is_anomalous: bool
    attack_type: AttackType
    source_ip: str


@dataclass(frozen=True, slots=True)
class FactorBreakdown:
    """The five multiplicative terms behind a threat score."""

    base_score: float
    frequency_multiplier: float
    cluster_factor: float
    ip_factor: float
    diversity_factor: float

    def product(self) -> float:
        """Left-to-right product of all five terms (the canonical order)."""
        return (
            self.base_score
            * self.frequency_multiplier
            * self.cluster_factor
            * self.ip_factor
            * self.diversity_factor
        )


@dataclass(frozen=True, slots=True)
class ThreatAssessment:
    """Final scored threat state; payload of the threat_events topic."""

    timestamp: int
    final_score: float
    band: Band
    factors: FactorBreakdown
    window_event_count: int


@dataclass(frozen=True, slots=True)
class ValidationResult:
    ok: bool
    violations: tuple[str, ...] = ()

    def __bool__(self) -> bool:
        return self.ok


def _is_real(x) -> bool:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        return False
    return x == x and x not in (float("inf"), float("-inf"))


def _check_raw_log(rec: RawLogRecord, out: list[str]) -> None:
    if not isinstance(rec.raw_line, (bytes, bytearray)) or len(rec.raw_line) == 0:
        out.append("raw_line non-empty")
    if not isinstance(rec.received_at, int):
        out.append("received_at is integer microseconds")


def _check_http(rec: HttpRequestRecord, out: list[str]) -> None:
    if not isinstance(rec.method, str) or not rec.method or any(c.isspace() for c in rec.method):
        out.append("method is a non-empty token")
    if not isinstance(rec.path, str) or not rec.path.startswith("/"):
        out.append('path begins with "/"')
    if not isinstance(rec.body_length, int) or isinstance(rec.body_length, bool) or rec.body_length < 0:
        out.append("body_length ≥ 0")
    if rec.status is not None:
        if not isinstance(rec.status, int) or isinstance(rec.status, bool) or not (100 <= rec.status <= 599):
            out.append("status in 100–599 or absent")


def _check_packet(rec: PacketRecord, out: list[str]) -> None:
    for name, port in (("src_port", rec.src_port), ("dst_port", rec.dst_port)):
        if not isinstance(port, int) or isinstance(port, bool) or not (0 <= port <= 65535):
            out.append(f"{name} in 0–65535")
    if not isinstance(rec.length_bytes, int) or isinstance(rec.length_bytes, bool) or rec.length_bytes < 0:
        out.append("length_bytes ≥ 0")
    if rec.protocol is not Protocol.TCP and rec.tcp_flags:
        out.append("tcp_flags empty unless protocol = TCP")


def _check_verdict(rec: AnomalyVerdict, out: list[str], threshold: float) -> None:
    conf_ok = _is_real(rec.confidence) and 0.0 <= rec.confidence <= 1.0
    if not conf_ok:
        out.append("confidence ∈ [0,1]")
    if conf_ok and bool(rec.is_anomalous) != (rec.confidence >= threshold):
        out.append("is_anomalous ⇔ confidence ≥ threshold")
    if (rec.attack_type is AttackType.BENIGN) != (not rec.is_anomalous):
        out.append("attack_type = BENIGN ⇔ is_anomalous = false")


def _check_factors(f: FactorBreakdown, out: list[str]) -> None:
    checks = (
        ("base_score ∈ [0,100]", _is_real(f.base_score) and 0.0 <= f.base_score <= 100.0),
        ("frequency_multiplier ≥ 1", _is_real(f.frequency_multiplier) and f.frequency_multiplier >= 1.0),
        ("cluster_factor ≥ 1", _is_real(f.cluster_factor) and f.cluster_factor >= 1.0),
        ("ip_factor ∈ [0.5, 2.0]", _is_real(f.ip_factor) and 0.5 <= f.ip_factor <= 2.0),
        ("diversity_factor ≥ 1", _is_real(f.diversity_factor) and f.diversity_factor >= 1.0),
    )
    for name, ok in checks:
        if not ok:
            out.append(name)


def _check_assessment(rec: ThreatAssessment, out: list[str]) -> None:
    score_ok = _is_real(rec.final_score) and 0.0 <= rec.final_score <= 100.0
    if not score_ok:
        out.append("final_score ∈ [0,100]")
    if not isinstance(rec.window_event_count, int) or isinstance(rec.window_event_count, bool) or rec.window_event_count < 0:
        out.append("window_event_count ≥ 0")
    if isinstance(rec.factors, FactorBreakdown):
        _check_factors(rec.factors, out)
        if score_ok and not out and min(100.0, rec.factors.product()) != rec.final_score:
            out.append("min(100, factor product) = final_score")
    else:
        out.append("factors is a FactorBreakdown")
    if score_ok:
        expected = Band.GREEN if rec.final_score < 30.0 else Band.YELLOW if rec.final_score < 70.0 else Band.RED
        if rec.band is not expected:
            out.append("band consistent with final_score")


def validate(record, *, decision_threshold: float = DEFAULT_DECISION_THRESHOLD) -> ValidationResult:
    """Check a core type against its declared invariants.

    Returns a ValidationResult listing every violated invariant by name;
    never raises, whatever garbage the fields hold.
    """
    out: list[str] = []
    if isinstance(record, RawLogRecord):
        _check_raw_log(record, out)
    elif isinstance(record, HttpRequestRecord):
        _check_http(record, out)
    elif isinstance(record, PacketRecord):
        _check_packet(record, out)
    elif isinstance(record, AnomalyVerdict):
        _check_verdict(record, out, decision_threshold)
    elif isinstance(record, FactorBreakdown):
        _check_factors(record, out)
    elif isinstance(record, ThreatAssessment):
        _check_assessment(record, out)
    else:
        out.append(f"unknown record type {type(record).__name__}")
    return ValidationResult(ok=not out, violations=tuple(out))
