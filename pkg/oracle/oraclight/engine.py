"""Drop-in line-level engine: parse, features, network, scoring.

Implements the benchmark engine protocol: `engine_id`, `process(line)
-> list[dict]`, `finish() -> list[dict]`, emitting verdict and threat
wire dicts. Execution is strictly sequential; after every record the
flow table is checked for idle expiry against the newest event
timestamp seen, and expired flows are classified in deterministic
order before the next line is read.
"""

from __future__ import annotations

import hashlib
import json
from collections import deque
from typing import Optional

from .flowstat import FLOW_FEATURE_NAMES, FlowState, FlowTable, finalize
from .logparse import HttpRecord, parse_line
from .netio import forward, load_network
from .score import Calculator, CalculatorConfig, load_calculator_config
from .webfeat import HTTP_FEATURE_NAMES, Ruleset, extract_features, load_ruleset

FLOW_SECTION_WIDTH = 78
INPUT_WIDTH = FLOW_SECTION_WIDTH + len(HTTP_FEATURE_NAMES)

AUTH_FAIL_STATUSES = (401, 403)
AUTH_FAIL_THRESHOLD = 3
AUTH_FAIL_WINDOW_US = 60_000_000


class SchemaMismatch(ValueError):
    """Model file and ruleset disagree on the feature schema."""


def schema_digest(ruleset: Ruleset) -> bytes:
    """SHA-256 of the canonical feature manifest for this ruleset.

    Must byte-match the digest embedded in model files: a JSON object
    with version, feature count, ruleset name plus content hash, and
    the ordered feature list, serialized with compact separators.
    """
    reserved = tuple(f"reserved_{i:02d}" for i in range(FLOW_SECTION_WIDTH - len(FLOW_FEATURE_NAMES)))
    features = [{"name": n, "section": "flow"} for n in FLOW_FEATURE_NAMES + reserved]
    features += [{"name": n, "section": "http"} for n in HTTP_FEATURE_NAMES]
    manifest = {
        "version": 1,
        "feature_count": INPUT_WIDTH,
        "ruleset": {"name": ruleset.name, "sha256": hashlib.sha256(ruleset.raw).hexdigest()},
        "features": features,
    }
    blob = json.dumps(manifest, separators=(",", ":"), ensure_ascii=True).encode("ascii")
    return hashlib.sha256(blob).digest()


def assemble(flow_vec: Optional[list[float]], http_vec: Optional[list[float]]) -> list[float]:
    """90-wide model input: 22 flow stats, 56 reserved zeros, 12 HTTP."""
    out = [0.0] * INPUT_WIDTH
    if flow_vec is not None:
        out[: len(flow_vec)] = flow_vec
    if http_vec is not None:
        out[FLOW_SECTION_WIDTH:] = http_vec
    return out


class _AuthFailureTracker:
    """Per-IP sliding count of recent 401/403 responses (event time)."""

    def __init__(self):
        self._by_ip: dict[str, deque[int]] = {}

    def observe(self, rec: HttpRecord) -> bool:
        if rec.status not in AUTH_FAIL_STATUSES:
            return False
        q = self._by_ip.get(rec.client_ip)
        if q is None:
            q = deque()
            self._by_ip[rec.client_ip] = q
        cutoff = rec.timestamp - AUTH_FAIL_WINDOW_US
        while q and q[0] <= cutoff:
            q.popleft()
        q.append(rec.timestamp)
        if len(self._by_ip) > 10_000:
            dead = [ip for ip, dq in self._by_ip.items() if not dq or dq[-1] <= cutoff]
            for ip in dead:
                del self._by_ip[ip]
        return len(q) >= AUTH_FAIL_THRESHOLD


class OracleEngine:
    """Line stream in, verdict/threat dicts out, no shared state.

    HTTP lines classify immediately (HTTP features plus a zero flow
    section); packet lines fold into the flow table and classify when
    the flow expires idle or at finish(). Anomaly calls use an
    inclusive threshold on the network confidence.
    """

    engine_id = "reference"

    def __init__(
        self,
        model_path: str,
        ruleset_path: str,
        calc_config_path: Optional[str] = None,
        threshold: float = 0.5,
    ):
        self.network = load_network(model_path)
        self.ruleset = load_ruleset(ruleset_path)
        if self.network.schema_hash != schema_digest(self.ruleset):
            raise SchemaMismatch("model was built against a different feature schema or ruleset")
        config = load_calculator_config(calc_config_path) if calc_config_path else CalculatorConfig()
        self.threshold = threshold
        self.flows = FlowTable()
        self.auth = _AuthFailureTracker()
        self.calculator = Calculator(config)
        self.event_clock = 0

    def _verdict(
        self,
        x: list[float],
        http_vec: Optional[list[float]],
        event_id: str,
        timestamp: int,
        source_ip: str,
        repeated_auth: bool,
    ) -> dict:
        conf = forward(self.network, x)
        anomalous = conf >= self.threshold
        if not anomalous:
            attack = "BENIGN"
        elif http_vec is not None and http_vec[9] >= 0.5:
            attack = "SQL_INJECTION"
        elif http_vec is not None and http_vec[10] >= 0.5:
            attack = "XSS"
        elif http_vec is not None and http_vec[11] >= 0.5:
            attack = "PATH_TRAVERSAL"
        elif repeated_auth:
            attack = "BRUTE_FORCE"
        else:
            attack = "NETWORK_ANOMALY"
        return {
            "kind": "verdict",
            "event_id": event_id,
            "timestamp": timestamp,
            "confidence": conf,
            "is_anomalous": anomalous,
            "attack_type": attack,
            "source_ip": source_ip,
        }

    def _emit(self, entries: list[tuple]) -> list[dict]:
        out = []
        for x, http_vec, event_id, ts, ip, repeated in entries:
            verdict = self._verdict(x, http_vec, event_id, ts, ip, repeated)
            out.append(verdict)
            assessment = self.calculator.process(verdict)
            if assessment is not None:
                out.append(assessment)
        return out

    def _flow_entry(self, state: FlowState) -> tuple:
        vec = finalize(state)
        return (assemble(vec, None), None, state.event_id(), state.last_ts, state.initiator[0], False)

    def process(self, line: str) -> list[dict]:
        rec = parse_line(line)
        entries: list[tuple] = []
        if isinstance(rec, HttpRecord):
            repeated = self.auth.observe(rec)
            hv = extract_features(rec, self.ruleset)
            entries.append((assemble(None, hv), hv, rec.event_id, rec.timestamp, rec.client_ip, repeated))
        else:
            self.flows.observe(rec)
        if rec.timestamp > self.event_clock:
            self.event_clock = rec.timestamp
        for state in sorted(self.flows.take_idle(self.event_clock), key=FlowState.sort_key):
            entries.append(self._flow_entry(state))
        return self._emit(entries)

    def finish(self) -> list[dict]:
        """Classify every live flow regardless of idleness (end of input)."""
        states = sorted(self.flows.drain(), key=FlowState.sort_key)
        return self._emit([self._flow_entry(st) for st in states])
