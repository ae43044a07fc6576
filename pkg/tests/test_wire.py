"""Wire encoding: round-trip identity, kind discrimination, error handling."""

import json

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from threatlight import wire
from threatlight.types import (
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
)

SAMPLES = [
    RawLogRecord("access.log", 1_760_104_536_000_000, b"GET / HTTP/1.1 \xff"),
    HttpRequestRecord(
        event_id="abc123",
        timestamp=42,
        client_ip="1.2.3.4",
        method="POST",
        path="/a b",
        query="x=%27&y=2",
        headers=(("Host", "example.test"), ("Host", "dup.test")),
        body_length=17,
        status=201,
        user_agent="curl/8",
    ),
    HttpRequestRecord("min", 0, "::1", "GET", "/"),
    PacketRecord(7, "10.0.0.1", 1234, "10.0.0.2", 80, Protocol.TCP, 60,
                 frozenset({TcpFlag.SYN, TcpFlag.ACK})),
    PacketRecord(8, "10.0.0.1", 53, "10.0.0.3", 53, Protocol.UDP, 120),
    AnomalyVerdict("e9", 55, 0.875, True, AttackType.XSS, "9.9.9.9"),
    AnomalyVerdict("e10", 56, 0.01, False, AttackType.BENIGN, "9.9.9.9"),
    ThreatAssessment(60, 79.2, Band.RED, FactorBreakdown(40.0, 1.5, 1.2, 1.1, 1.0), 3),
]


@pytest.mark.parametrize("record", SAMPLES, ids=lambda r: type(r).__name__)
def test_roundtrip_identity(record):
    assert wire.decode(wire.encode(record)) == record
    assert wire.decode(wire.encode_bytes(record)) == record
    assert wire.from_dict(wire.to_dict(record)) == record


def test_kind_comes_first():
    for record in SAMPLES:
        enc = wire.encode(record)
        assert enc.startswith('{"kind":"'), enc


def test_encoding_is_single_line_json():
    for record in SAMPLES:
        enc = wire.encode(record)
        assert "\n" not in enc
        assert json.loads(enc) == wire.to_dict(record)


def test_timestamps_stay_integers():
    d = wire.to_dict(SAMPLES[1])
    assert isinstance(d["timestamp"], int)
    d = wire.to_dict(SAMPLES[-1])
    assert isinstance(d["timestamp"], int)


def test_unknown_kind_rejected():
    with pytest.raises(wire.WireError):
        wire.decode('{"kind":"nope"}')
    with pytest.raises(wire.WireError):
        wire.from_dict({"no_kind": 1})


def test_bad_json_rejected():
    with pytest.raises(wire.WireError):
        wire.decode("{truncated")
    with pytest.raises(wire.WireError):
        wire.decode('["a","list"]')


def test_missing_field_rejected():
    d = wire.to_dict(SAMPLES[5])
    del d["confidence"]
    with pytest.raises(wire.WireError):
        wire.from_dict(d)


def test_wrong_type_rejected():
    d = wire.to_dict(SAMPLES[5])
    d["timestamp"] = "yesterday"
    with pytest.raises(wire.WireError):
        wire.from_dict(d)
    d = wire.to_dict(SAMPLES[5])
    d["attack_type"] = "ALIEN"
    with pytest.raises(wire.WireError):
        wire.from_dict(d)


def test_unencodable_type_rejected():
    with pytest.raises(wire.WireError):
        wire.encode({"a": "plain dict"})


@settings(max_examples=120, deadline=None)
@given(
    st.text(min_size=1, max_size=20),
    st.integers(min_value=0, max_value=2**60),
    st.floats(min_value=0.0, max_value=1.0),
    st.sampled_from(sorted(AttackType, key=lambda a: a.value)),
    st.text(max_size=20),
)
def test_verdict_roundtrip_property(event_id, ts, conf, attack, ip):
    v = AnomalyVerdict(event_id, ts, conf, conf >= 0.5, attack, ip)
    assert wire.decode(wire.encode(v)) == v


@settings(max_examples=120, deadline=None)
@given(st.binary(min_size=1, max_size=64), st.integers(min_value=0, max_value=2**60))
def test_raw_bytes_roundtrip_property(line, ts):
    r = RawLogRecord("src", ts, line)
    assert wire.decode(wire.encode(r)) == r
