"""Canonical JSON wire encoding for pipeline messages.

Each core record type maps to a single-object JSON document with a
`kind` discriminator ("raw", "http", "packet", "verdict", "threat").
Field names are snake_case, timestamps are integer UTC microseconds,
enums are encoded as their string values, binary payloads as base64.

`kind` is always emitted first so consumers can sniff the type from a
line prefix without a full parse. decode() accepts any key order.
"""

from __future__ import annotations

import base64
import json

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
    TCP_FLAG_ORDER,
)

__all__ = ["WireError", "encode", "decode", "encode_bytes", "decode_bytes"]


class WireError(ValueError):
    """Malformed wire message: bad JSON, unknown kind, or bad fields."""


def _raw_to_dict(r: RawLogRecord) -> dict:
    return {
        "kind": "raw",
        "source_id": r.source_id,
        "received_at": r.received_at,
        "raw_line": base64.b64encode(r.raw_line).decode("ascii"),
    }


def _http_to_dict(r: HttpRequestRecord) -> dict:
    d = {
        "kind": "http",
        "event_id": r.event_id,
        "timestamp": r.timestamp,
        "client_ip": r.client_ip,
        "method": r.method,
        "path": r.path,
        "query": r.query,
        "headers": [[n, v] for n, v in r.headers],
        "body_length": r.body_length,
        "status": r.status,
        "user_agent": r.user_agent,
    }
    return d


def _packet_to_dict(r: PacketRecord) -> dict:
    return {
        "kind": "packet",
        "timestamp": r.timestamp,
        "src_ip": r.src_ip,
        "src_port": r.src_port,
        "dst_ip": r.dst_ip,
        "dst_port": r.dst_port,
        "protocol": r.protocol.value,
        "length_bytes": r.length_bytes,
        "tcp_flags": [f.value for f in TCP_FLAG_ORDER if f in r.tcp_flags],
    }


def _verdict_to_dict(r: AnomalyVerdict) -> dict:
    return {
        "kind": "verdict",
        "event_id": r.event_id,
        "timestamp": r.timestamp,
        "confidence": r.confidence,
        "is_anomalous": r.is_anomalous,
        "attack_type": r.attack_type.value,
        "source_ip": r.source_ip,
    }


def _threat_to_dict(r: ThreatAssessment) -> dict:
    return {
        "kind": "threat",
        "timestamp": r.timestamp,
        "final_score": r.final_score,
        "band": r.band.value,
        "factors": {
            "base_score": r.factors.base_score,
            "frequency_multiplier": r.factors.frequency_multiplier,
            "cluster_factor": r.factors.cluster_factor,
            "ip_factor": r.factors.ip_factor,
            "diversity_factor": r.factors.diversity_factor,
        },
        "window_event_count": r.window_event_count,
    }


_ENCODERS = {
    RawLogRecord: _raw_to_dict,
    HttpRequestRecord: _http_to_dict,
    PacketRecord: _packet_to_dict,
    AnomalyVerdict: _verdict_to_dict,
    ThreatAssessment: _threat_to_dict,
}


def to_dict(record) -> dict:
    """Plain-dict form of a record, `kind` first. Raises WireError on unknown types."""
    enc = _ENCODERS.get(type(record))
    if enc is None:
        raise WireError(f"cannot encode {type(record).__name__}")
    return enc(record)


def encode(record) -> str:
    """Record → one-line JSON string (no trailing newline)."""
    return json.dumps(to_dict(record), separators=(",", ":"), ensure_ascii=False)


def encode_bytes(record) -> bytes:
    return encode(record).encode("utf-8")


def _need(d: dict, key: str, types) -> object:
    try:
        v = d[key]
    except KeyError:
        raise WireError(f"missing field {key!r}") from None
    if types is not None and not isinstance(v, types):
        raise WireError(f"field {key!r} has wrong type {type(v).__name__}")
    if types is int and isinstance(v, bool):
        raise WireError(f"field {key!r} has wrong type bool")
    return v


def _raw_from_dict(d: dict) -> RawLogRecord:
    try:
        line = base64.b64decode(_need(d, "raw_line", str), validate=True)
    except (ValueError, TypeError) as e:
        raise WireError(f"raw_line is not valid base64: {e}") from None
    return RawLogRecord(
        source_id=_need(d, "source_id", str),
        received_at=_need(d, "received_at", int),
        raw_line=line,
    )


def _http_from_dict(d: dict) -> HttpRequestRecord:
    raw_headers = _need(d, "headers", list)
    headers: list[tuple[str, str]] = []
    for pair in raw_headers:
        if not isinstance(pair, (list, tuple)) or len(pair) != 2 or not all(isinstance(x, str) for x in pair):
            raise WireError("headers entries are [name, value] string pairs")
        headers.append((pair[0], pair[1]))
    status = d.get("status")
    if status is not None and (not isinstance(status, int) or isinstance(status, bool)):
        raise WireError("status is an integer or null")
    ua = d.get("user_agent")
    if ua is not None and not isinstance(ua, str):
        raise WireError("user_agent is a string or null")
    return HttpRequestRecord(
        event_id=_need(d, "event_id", str),
        timestamp=_need(d, "timestamp", int),
        client_ip=_need(d, "client_ip", str),
        method=_need(d, "method", str),
        path=_need(d, "path", str),
        query=_need(d, "query", str),
        headers=tuple(headers),
        body_length=_need(d, "body_length", int),
        status=status,
        user_agent=ua,
    )


def _enum_value(enum_cls, raw, field: str):
    try:
        return enum_cls(raw)
    except ValueError:
        raise WireError(f"field {field!r} has unknown value {raw!r}") from None


def _packet_from_dict(d: dict) -> PacketRecord:
    flags_raw = _need(d, "tcp_flags", list)
    flags = frozenset(_enum_value(TcpFlag, f, "tcp_flags") for f in flags_raw)
    return PacketRecord(
        timestamp=_need(d, "timestamp", int),
        src_ip=_need(d, "src_ip", str),
        src_port=_need(d, "src_port", int),
        dst_ip=_need(d, "dst_ip", str),
        dst_port=_need(d, "dst_port", int),
        protocol=_enum_value(Protocol, _need(d, "protocol", str), "protocol"),
        length_bytes=_need(d, "length_bytes", int),
        tcp_flags=flags,
    )


def _verdict_from_dict(d: dict) -> AnomalyVerdict:
    return AnomalyVerdict(
        event_id=_need(d, "event_id", str),
        timestamp=_need(d, "timestamp", int),
        confidence=float(_need(d, "confidence", (int, float))),
        is_anomalous=_need(d, "is_anomalous", bool),
        attack_type=_enum_value(AttackType, _need(d, "attack_type", str), "attack_type"),
        source_ip=_need(d, "source_ip", str),
    )


def _threat_from_dict(d: dict) -> ThreatAssessment:
    fd = _need(d, "factors", dict)
    factors = FactorBreakdown(
        base_score=float(_need(fd, "base_score", (int, float))),
        frequency_multiplier=float(_need(fd, "frequency_multiplier", (int, float))),
        cluster_factor=float(_need(fd, "cluster_factor", (int, float))),
        ip_factor=float(_need(fd, "ip_factor", (int, float))),
        diversity_factor=float(_need(fd, "diversity_factor", (int, float))),
    )
    return ThreatAssessment(
        timestamp=_need(d, "timestamp", int),
        final_score=float(_need(d, "final_score", (int, float))),
        band=_enum_value(Band, _need(d, "band", str), "band"),
        factors=factors,
        window_event_count=_need(d, "window_event_count", int),
    )


_DECODERS = {
    "raw": _raw_from_dict,
    "http": _http_from_dict,
    "packet": _packet_from_dict,
    "verdict": _verdict_from_dict,
    "threat": _threat_from_dict,
}


def from_dict(d: dict):
    kind = d.get("kind")
    dec = _DECODERS.get(kind)
    if dec is None:
        raise WireError(f"unknown kind {kind!r}")
    return dec(d)


def decode(text: str | bytes):
    """One JSON document → the corresponding record. Raises WireError."""
    try:
        d = json.loads(text)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise WireError(f"invalid JSON: {e}") from None
    if not isinstance(d, dict):
        raise WireError("wire message is not a JSON object")
    return from_dict(d)


def decode_bytes(data: bytes):
    return decode(data)
