"""Twin self-checks: hand-computed values per stage, container format
errors, engine sequencing with a rigged always-anomalous model, CLI
smoke, and (when the production package is importable) a differential
run over a shared synthetic corpus.

Run from the repository root as: python3 -m pytest oracle/tests
"""

import json
import math
import struct

import pytest

from oraclight import (
    Calculator,
    CalculatorConfig,
    FLOW_FEATURE_NAMES,
    FlowTable,
    HttpRecord,
    ModelFormatError,
    OracleEngine,
    Ruleset,
    SchemaMismatch,
    extract_features,
    finalize,
    forward,
    load_calculator_config,
    load_network,
    map_band,
    normalize_decode,
    parse_line,
    schema_digest,
    subnet_key,
)
from oraclight.cli import main as cli_main

RULES_TEXT = b"""# test rules
sqli literal union select
sqli regex \\bor\\s+1\\s*=\\s*1
xss literal <script
traversal literal ../
"""


# --- fixtures ----------------------------------------------------------------


@pytest.fixture()
def rules_path(tmp_path):
    p = tmp_path / "rules_v1.txt"
    p.write_bytes(RULES_TEXT)
    return p


def tiny_model_bytes(schema_hash: bytes) -> bytes:
    """90->2->1 net rigged so every input scores sigmoid(0.125).

    gamma is zero, so each hidden activation is exactly its beta and the
    head sees h=[1,2]: z = 0.5*1 - 0.25*2 + 0.125 = 0.125.
    """
    out = struct.pack("<4sH32sH", b"SSNN", 1, schema_hash, 3)
    out += struct.pack("<3I", 90, 2, 1)
    out += struct.pack(f"<{2 * 90}f", *([0.0] * 180))  # W0
    out += struct.pack("<2f", 0.0, 0.0)  # b0
    out += struct.pack("<2f", 0.5, -0.25)  # W1 (head)
    out += struct.pack("<1f", 0.125)  # b1
    out += struct.pack("<2f", 0.0, 0.0)  # gamma
    out += struct.pack("<2f", 1.0, 2.0)  # beta
    out += struct.pack("<2f", 0.0, 0.0)  # run_mean
    out += struct.pack("<2f", 1.0, 1.0)  # run_var
    out += struct.pack("<IQf", 1, 0, 0.0)
    return out


RIGGED_CONF = 0.5312093733737563  # sigmoid(0.125)


@pytest.fixture()
def model_path(tmp_path, rules_path):
    digest = schema_digest(Ruleset(RULES_TEXT, name="rules_v1.txt"))
    p = tmp_path / "tiny.ssnn"
    p.write_bytes(tiny_model_bytes(digest))
    return p


@pytest.fixture()
def engine(model_path, rules_path):
    return OracleEngine(str(model_path), str(rules_path))


def clf(ip: str, target: str, second: int, status: int = 200) -> str:
    return (
        f'{ip} - - [01/Jan/2026:00:00:{second:02d} +0000] '
        f'"GET {target} HTTP/1.1" {status} 512 "-" "curl/8.5.0"'
    )


# --- decoding and HTTP features ----------------------------------------------


def test_percent_decode_rounds():
    assert normalize_decode("/plain") == ("/plain", 0)
    assert normalize_decode("%2e") == (".", 1)
    assert normalize_decode("%252e%252e%252f") == ("../", 2)
    assert normalize_decode("%25252e") == (".", 3)  # capped at 3 rounds
    assert normalize_decode("a+b", query_context=True) == ("a b", 1)
    assert normalize_decode("a+b") == ("a+b", 0)  # plus only decodes in queries
    assert normalize_decode("50%") == ("50%", 0)  # bare percent survives


def test_ruleset_flags(rules_path):
    rs = Ruleset(RULES_TEXT, name="rules_v1.txt")
    assert rs.match_flags("select union select now") == {
        "sqli": True, "xss": False, "traversal": False,
    }
    assert rs.match_flags("x or  1 = 1") == {"sqli": True, "xss": False, "traversal": False}
    assert rs.match_flags("<script>alert(1)") == {"sqli": False, "xss": True, "traversal": False}
    assert rs.match_flags("../../etc/passwd")["traversal"] is True
    assert rs.match_flags("ordinary text") == {"sqli": False, "xss": False, "traversal": False}
    with pytest.raises(ValueError):
        Ruleset(b"sqli nonsense pattern")


def test_http_features_hand_values():
    rs = Ruleset(RULES_TEXT)
    req = HttpRecord(
        event_id="e", timestamp=0, client_ip="10.0.0.1", method="GET",
        path="/a", query="x=1&y=2", headers=(("User-Agent", "abcd"),),
        body_length=0, status=200, user_agent="abcd",
    )
    vec = extract_features(req, rs)
    names = dict(zip(("url_length_norm", "param_count_norm", "header_count_norm",
                      "header_complexity", "payload_length_norm", "special_char_ratio",
                      "encoding_depth_norm", "method_rarity", "complexity_score",
                      "sqli_flag", "xss_flag", "traversal_flag"), vec))
    assert names["url_length_norm"] == 0.0048828125  # (2 + 1 + 7) / 2048
    assert names["param_count_norm"] == 0.0625  # 2 / 32
    assert names["header_count_norm"] == 0.025  # 1 / 40
    assert names["header_complexity"] == 0.0203125  # (0.025 + 4/256) / 2
    assert names["payload_length_norm"] == 0.0
    assert names["special_char_ratio"] == pytest.approx(1 / 3, abs=1e-15)  # "=", "&", "="
    assert names["encoding_depth_norm"] == 0.0
    assert names["method_rarity"] == 0.0
    assert names["complexity_score"] == pytest.approx(0.06802734375, abs=1e-15)
    assert (names["sqli_flag"], names["xss_flag"], names["traversal_flag"]) == (0.0, 0.0, 0.0)


def test_flag_features_decode_before_match():
    rs = Ruleset(RULES_TEXT)
    req = HttpRecord(
        event_id="e", timestamp=0, client_ip="10.0.0.1", method="GET",
        path="/dl", query="f=%252e%252e%252fetc", headers=(), body_length=0,
        status=200, user_agent=None,
    )
    vec = extract_features(req, rs)
    assert vec[11] == 1.0  # double-encoded ../ still trips the traversal rule
    assert vec[6] == pytest.approx(2 / 3)  # two decode rounds out of three


# --- flow statistics ----------------------------------------------------------


def test_flow_two_packet_hand_values():
    table = FlowTable()
    line1 = json.dumps({
        "kind": "packet", "timestamp": 1_000_000_000, "src_ip": "10.0.0.1",
        "src_port": 1000, "dst_ip": "10.0.0.2", "dst_port": 80,
        "protocol": "TCP", "length_bytes": 200, "tcp_flags": ["SYN"],
    })
    line2 = json.dumps({
        "kind": "packet", "timestamp": 1_000_500_000, "src_ip": "10.0.0.2",
        "src_port": 80, "dst_ip": "10.0.0.1", "dst_port": 1000,
        "protocol": "TCP", "length_bytes": 100, "tcp_flags": ["ACK"],
    })
    table.observe(parse_line(line1))
    state = table.observe(parse_line(line2))
    vec = dict(zip(FLOW_FEATURE_NAMES, finalize(state)))
    assert vec["duration_s"] == 0.5
    assert vec["fwd_packets"] == 1.0 and vec["bwd_packets"] == 1.0
    assert vec["len_mean"] == 150.0 and vec["len_max"] == 200.0 and vec["len_min"] == 100.0
    assert vec["len_std"] == 50.0
    assert vec["bytes_per_s"] == 600.0 and vec["packets_per_s"] == 4.0
    assert vec["flag_syn"] == 1.0 and vec["flag_ack"] == 1.0 and vec["flag_fin"] == 0.0
    assert vec["fwd_len_mean"] == 200.0 and vec["bwd_len_max"] == 100.0
    assert vec["total_bytes"] == 300.0
    assert state.initiator == ("10.0.0.1", 1000)
    assert len(state.event_id()) == 32 and int(state.event_id(), 16) >= 0


def test_flow_idle_expiry_boundary():
    table = FlowTable()
    table.observe(parse_line(json.dumps({
        "kind": "packet", "timestamp": 1_000_000_000, "src_ip": "10.0.0.1",
        "src_port": 1000, "dst_ip": "10.0.0.2", "dst_port": 80,
        "protocol": "TCP", "length_bytes": 60, "tcp_flags": ["SYN"],
    })))
    assert table.take_idle(1_000_000_000 + 120_000_000) == []  # not yet idle
    expired = table.take_idle(1_000_000_001 + 120_000_000)
    assert len(expired) == 1 and len(table) == 0


# --- scoring ------------------------------------------------------------------


def verdict(ts_s: float, ip: str, conf: float, attack: str = "NETWORK_ANOMALY") -> dict:
    return {
        "kind": "verdict", "event_id": "x", "timestamp": int(ts_s * 1_000_000),
        "confidence": conf, "is_anomalous": True, "attack_type": attack,
        "source_ip": ip,
    }


def test_band_edges():
    assert map_band(0.0) == "GREEN"
    assert map_band(29.999999) == "GREEN"
    assert map_band(30.0) == "YELLOW"
    assert map_band(69.999999) == "YELLOW"
    assert map_band(70.0) == "RED"
    assert map_band(100.0) == "RED"
    with pytest.raises(ValueError):
        map_band(100.1)
    with pytest.raises(ValueError):
        map_band(-0.1)


def test_subnet_key_grouping():
    assert subnet_key("203.0.113.7") == subnet_key("203.0.113.250")
    assert subnet_key("203.0.113.7") != subnet_key("203.0.114.7")
    assert subnet_key("2001:db8:1:2::5") == subnet_key("2001:db8:1:9::5")
    assert subnet_key("2001:db8:1::") != subnet_key("2001:db9:1::")
    assert subnet_key("not-an-ip") == ("raw", "not-an-ip")


def test_calculator_worked_sequence():
    calc = Calculator()
    benign = dict(verdict(1000.0, "10.0.0.1", 0.1), is_anomalous=False)
    assert calc.process(benign) is None

    # first anomaly: every multiplier at its floor (0.5 is exact in binary)
    a1 = calc.process(verdict(1000.0, "203.0.113.5", 0.5))
    assert a1["final_score"] == 50.0 and a1["band"] == "YELLOW"
    assert a1["factors"] == {
        "base_score": 50.0, "frequency_multiplier": 1.0, "cluster_factor": 1.0,
        "ip_factor": 1.0, "diversity_factor": 1.0,
    }
    assert a1["window_event_count"] == 1

    # same /24, new type: freq counts the prior entry, cluster and
    # diversity see both entries
    a2 = calc.process(verdict(1001.0, "203.0.113.9", 0.5, attack="XSS"))
    f = a2["factors"]
    assert f["frequency_multiplier"] == pytest.approx(1.1375035237499351, abs=1e-15)
    assert f["cluster_factor"] == pytest.approx(1.1)
    assert f["diversity_factor"] == pytest.approx(1.15)
    assert f["ip_factor"] == 1.0  # first offense is recorded after the read
    assert a2["final_score"] == pytest.approx(71.9470978771834, abs=1e-9)
    assert a2["band"] == "RED"
    assert a2["window_event_count"] == 2

    # repeat offender: one prior offense lifts the ip factor one step
    a3 = calc.process(verdict(1002.0, "203.0.113.5", 0.5))
    assert a3["factors"]["ip_factor"] == pytest.approx(1.1)

    # 61 s later everything at or before t+1 s has left the window
    a4 = calc.process(verdict(1061.0, "198.51.100.1", 0.5))
    assert a4["window_event_count"] == 2  # the t+2s entry plus this one


def test_calculator_offense_decay():
    calc = Calculator()
    calc.process(verdict(0.0, "203.0.113.5", 0.6))
    # two idle hours erase the single recorded offense
    later = calc.process(verdict(7200.0, "203.0.113.5", 0.6))
    assert later["factors"]["ip_factor"] == 1.0


def test_calculator_score_cap():
    calc = Calculator()
    for i in range(40):
        out = calc.process(verdict(100.0 + i, f"203.0.113.{i + 1}", 0.99,
                                   attack=("XSS", "SQL_INJECTION", "PATH_TRAVERSAL")[i % 3]))
    assert out["final_score"] == 100.0 and out["band"] == "RED"


def test_calculator_config_file(tmp_path):
    p = tmp_path / "calc.json"
    p.write_text(json.dumps({
        "window_span_s": 30, "freq_baseline": 5,
        "bands": {"yellow": 10, "red": 20}, "allowlist": ["192.0.2.1"],
    }))
    cfg = load_calculator_config(p)
    assert cfg.window_span_us == 30_000_000
    assert cfg.freq_baseline == 5.0
    assert (cfg.band_yellow, cfg.band_red) == (10.0, 20.0)
    calc = Calculator(cfg)
    pinned = calc.process(verdict(0.0, "192.0.2.1", 0.55))
    assert pinned["factors"]["ip_factor"] == 0.5
    assert pinned["band"] == "RED"  # 27.5 over a red line of 20


# --- model container ----------------------------------------------------------


def test_container_roundtrip_and_forward(model_path):
    net = load_network(model_path)
    assert net.dims == (90, 2, 1)
    assert net.parameter_count == 2 * 90 + 2 + 2 + 1 + 2 * 2  # gamma and beta count, running stats do not
    assert net.meta["epochs_run"] == 1
    conf = forward(net, [0.0] * 90)
    assert conf == RIGGED_CONF
    assert forward(net, [1.0] * 90) == conf  # gamma 0 makes inputs irrelevant
    with pytest.raises(ValueError):
        forward(net, [0.0] * 89)
    with pytest.raises(ValueError):
        forward(net, [float("nan")] + [0.0] * 89)


def test_container_rejects_malformed(tmp_path):
    good = tiny_model_bytes(b"\x00" * 32)

    bad_magic = tmp_path / "m1.ssnn"
    bad_magic.write_bytes(b"XXXX" + good[4:])
    with pytest.raises(ModelFormatError):
        load_network(bad_magic)

    trailing = tmp_path / "m2.ssnn"
    trailing.write_bytes(good + b"\x00")
    with pytest.raises(ModelFormatError):
        load_network(trailing)

    truncated = tmp_path / "m3.ssnn"
    truncated.write_bytes(good[:-10])
    with pytest.raises(ModelFormatError):
        load_network(truncated)

    # zero running variance is unusable for normalization
    var_off = len(good) - struct.calcsize("<IQf") - 8
    zero_var = tmp_path / "m4.ssnn"
    zero_var.write_bytes(good[:var_off] + struct.pack("<2f", 0.0, 1.0) + good[var_off + 8:])
    with pytest.raises(ModelFormatError):
        load_network(zero_var)


# --- engine sequencing ----------------------------------------------------------


def test_engine_schema_mismatch(model_path, tmp_path):
    other = tmp_path / "other.txt"
    other.write_bytes(b"sqli literal union select\n")
    with pytest.raises(SchemaMismatch):
        OracleEngine(str(model_path), str(other))


def test_engine_http_labels(engine):
    out = engine.process(clf("203.0.113.5", "/search?q=union%20select%20s", 1))
    assert [d["kind"] for d in out] == ["verdict", "threat"]
    v = out[0]
    assert v["attack_type"] == "SQL_INJECTION"
    assert v["confidence"] == RIGGED_CONF and v["is_anomalous"] is True
    assert set(v) == {"kind", "event_id", "timestamp", "confidence",
                      "is_anomalous", "attack_type", "source_ip"}
    t = out[1]
    assert set(t) == {"kind", "timestamp", "final_score", "band", "factors",
                      "window_event_count"}

    out = engine.process(clf("203.0.113.5", "/q?v=%3Cscript%3E", 2))
    assert out[0]["attack_type"] == "XSS"
    out = engine.process(clf("203.0.113.5", "/dl?f=..%2F..%2Fetc", 3))
    assert out[0]["attack_type"] == "PATH_TRAVERSAL"
    out = engine.process(clf("203.0.113.5", "/plain", 4))
    assert out[0]["attack_type"] == "NETWORK_ANOMALY"


def test_engine_brute_force_label(engine):
    assert engine.process(clf("198.51.100.7", "/login", 1, status=401))[0]["attack_type"] == "NETWORK_ANOMALY"
    assert engine.process(clf("198.51.100.7", "/login", 2, status=403))[0]["attack_type"] == "NETWORK_ANOMALY"
    # third failure inside 60 s crosses the repeated-failures threshold
    assert engine.process(clf("198.51.100.7", "/login", 3, status=401))[0]["attack_type"] == "BRUTE_FORCE"


def test_engine_flow_expiry_order(engine):
    pkt = {
        "kind": "packet", "timestamp": 1_767_225_600_000_000, "src_ip": "10.0.0.1",
        "src_port": 1000, "dst_ip": "10.0.0.2", "dst_port": 80,
        "protocol": "TCP", "length_bytes": 60, "tcp_flags": ["SYN"],
    }
    assert engine.process(json.dumps(pkt)) == []  # packets only fold into flows
    # an HTTP line 130 s later advances the event clock past the idle timeout:
    # its own verdict comes first, then the expired flow's
    out = engine.process(clf("203.0.113.5", "/plain", 0).replace(":00:00", ":02:10"))
    kinds = [(d["kind"], d.get("attack_type")) for d in out]
    assert kinds == [("verdict", "NETWORK_ANOMALY"), ("threat", None),
                     ("verdict", "NETWORK_ANOMALY"), ("threat", None)]
    assert out[2]["source_ip"] == "10.0.0.1"
    assert engine.finish() == []


def test_engine_finish_drains_live_flows(engine):
    pkt = {
        "kind": "packet", "timestamp": 1_767_225_600_000_000, "src_ip": "10.0.0.3",
        "src_port": 999, "dst_ip": "10.0.0.4", "dst_port": 443,
        "protocol": "UDP", "length_bytes": 120, "tcp_flags": [],
    }
    engine.process(json.dumps(pkt))
    out = engine.finish()
    assert [d["kind"] for d in out] == ["verdict", "threat"]
    assert out[0]["source_ip"] == "10.0.0.3"


# --- CLI ------------------------------------------------------------------------


def test_cli_classify_and_score(model_path, rules_path, capsys):
    argv = ["--model", str(model_path), "--rules", str(rules_path),
            "--line", clf("203.0.113.5", "/q?id=union%20select%20x", 1)]
    assert cli_main(["classify"] + argv) == 0
    v = json.loads(capsys.readouterr().out.strip())
    assert v["attack_type"] == "SQL_INJECTION"

    assert cli_main(["score"] + argv) == 0
    lines = capsys.readouterr().out.strip().splitlines()
    assert [json.loads(l)["kind"] for l in lines] == ["verdict", "threat"]


def test_cli_bench(model_path, rules_path, tmp_path, capsys):
    corpus = tmp_path / "corpus.log"
    corpus.write_text("\n".join(clf("10.0.0.1", "/a", s % 60) for s in range(50)) + "\n")
    rc = cli_main(["bench", "--model", str(model_path), "--rules", str(rules_path),
                   str(corpus)])
    assert rc == 0
    report = json.loads(capsys.readouterr().out.strip())
    assert report["engine_id"] == "reference"
    assert report["events"] == 50
    assert report["emitted"] == 100  # rigged model marks everything anomalous
    assert report["throughput_eps"] > 0


# --- differential vs the production engine --------------------------------------

threatlight = pytest.importorskip("threatlight", reason="production package not installed")


def test_differential_http_corpus():
    from threatlight.bench import PrimaryEngine, generate_lines, make_reference_engine, verify_equivalence

    lines = generate_lines(1500, seed=11)
    pri, ref = PrimaryEngine(), make_reference_engine()
    a, b = [], []
    for ln in lines:
        a.extend(pri.process(ln))
        b.extend(ref.process(ln))
    a.extend(pri.finish())
    b.extend(ref.finish())
    assert verify_equivalence(a, b) == len(a) > 1500


def test_differential_mixed_corpus(tmp_path):
    from threatlight.bench import PrimaryEngine, make_reference_engine, verify_equivalence, write_corpus

    corpus = write_corpus(tmp_path / "mix.jsonl", 1200, seed=23, packet_ratio=0.4)
    lines = [ln for ln in corpus.read_text().splitlines() if ln]
    pri, ref = PrimaryEngine(), make_reference_engine()
    a, b = [], []
    for ln in lines:
        a.extend(pri.process(ln))
        b.extend(ref.process(ln))
    a.extend(pri.finish())
    b.extend(ref.finish())
    # packets fold many-to-one into flows, so fewer items than lines
    assert verify_equivalence(a, b) == len(a) > 1000
