"""Pipeline assembly: records → verdicts → assessments.

Two execution styles share one core:

* `VerdictEngine` / `Analyzer` run sequentially in the caller's
  thread with canonical per-record semantics (flow expiry checked
  after every record against the latest event timestamp). This is the
  reference execution order: replaying a file reproduces the exact
  verdict and assessment sequence, which cross-implementation
  comparisons rely on.

* `Pipeline` wires the same engine and a `ThreatCalculator` into bus
  workers (topics raw_events → ad_events → threat_events), with
  micro-batched inference for throughput. Every classified event
  yields a verdict on ad_events; only anomalous verdicts yield
  assessments on threat_events.

All clocks are event time taken from record timestamps; wall time
never influences results.
"""

from __future__ import annotations

import hashlib
import threading
from collections import deque
from typing import Iterable, Iterator, Optional, Union

import numpy as np

from . import schema, wire
from .bus import Closed, EventBus
from .flows import FlowState, FlowTable, finalize_flow
from .httpfeat import Ruleset, extract_http_features, load_default_ruleset
from .nn.model import DEFAULT_THRESHOLD, ModelBundle, RequestContext, SchemaMismatch, forward, label_verdict
from .scoring import CalculatorConfig, ThreatCalculator
from .types import AnomalyVerdict, HttpRequestRecord, PacketRecord, ThreatAssessment

__all__ = [
    "TOPIC_RAW",
    "TOPIC_VERDICTS",
    "TOPIC_THREATS",
    "VerdictEngine",
    "Analyzer",
    "Pipeline",
    "one_shot_score",
]

TOPIC_RAW = "raw_events"
TOPIC_VERDICTS = "ad_events"
TOPIC_THREATS = "threat_events"

AUTH_FAIL_STATUSES = (401, 403)
AUTH_FAIL_THRESHOLD = 3
AUTH_FAIL_WINDOW_US = 60_000_000

Record = Union[HttpRequestRecord, PacketRecord]


def flow_event_id(state: FlowState) -> str:
    """Stable identity for a finalized flow: hash of its key and first packet time."""
    k = state.key
    seed = f"{k.ip_a}:{k.port_a}|{k.ip_b}:{k.port_b}|{k.protocol.value}|{state.first_ts}"
    return hashlib.blake2b(seed.encode("utf-8"), digest_size=16).hexdigest()


def _flow_sort_key(state: FlowState):
    k = state.key
    return (state.last_ts, state.first_ts, k.ip_a, k.port_a, k.ip_b, k.port_b, k.protocol.value)


class _AuthFailureTracker:
    """Per-IP sliding count of recent 401/403 responses (event time)."""

    def __init__(self, threshold: int = AUTH_FAIL_THRESHOLD, window_us: int = AUTH_FAIL_WINDOW_US):
        self.threshold = threshold
        self.window_us = window_us
        self._by_ip: dict[str, deque[int]] = {}

    def observe(self, rec: HttpRequestRecord) -> bool:
        """Record the event; True when the source shows repeated auth failures."""
        if rec.status not in AUTH_FAIL_STATUSES:
            return False
        q = self._by_ip.get(rec.client_ip)
        if q is None:
            q = deque()
            self._by_ip[rec.client_ip] = q
        cutoff = rec.timestamp - self.window_us
        while q and q[0] <= cutoff:
            q.popleft()
        q.append(rec.timestamp)
        if len(self._by_ip) > 10_000:
            dead = [ip for ip, dq in self._by_ip.items() if not dq or dq[-1] <= cutoff]
            for ip in dead:
                del self._by_ip[ip]
        return len(q) >= self.threshold


class VerdictEngine:
    """Classifies a record stream into verdicts; single-writer state.

    HTTP records evaluate immediately (HTTP section + zero flow
    section). Packets fold into the flow table; a flow is classified
    when it expires idle (flow section + zero HTTP section) or on
    flush. After each batch, expiry runs against the newest event
    timestamp seen so far.
    """

    def __init__(
        self,
        model: ModelBundle,
        ruleset: Optional[Ruleset] = None,
        threshold: float = DEFAULT_THRESHOLD,
        idle_timeout_us: Optional[int] = None,
        check_schema: bool = True,
    ):
        self.model = model
        self.ruleset = ruleset or load_default_ruleset()
        self.threshold = threshold
        if check_schema and model.schema_hash != schema.schema_hash(self.ruleset):
            raise SchemaMismatch("model was built against a different feature schema or ruleset")
        self.flows = FlowTable(idle_timeout_us) if idle_timeout_us else FlowTable()
        self.auth = _AuthFailureTracker()
        self.event_clock = 0  # newest event timestamp seen
        self.records_in = 0

    def _flow_entry(self, state: FlowState) -> tuple[list[float], None, RequestContext]:
        vec = finalize_flow(state)
        ctx = RequestContext(
            event_id=flow_event_id(state),
            timestamp=state.last_ts,
            source_ip=state.key.initiator[0],
        )
        return (vec, None, ctx)

    def process_batch(self, records: Iterable[Record]) -> list[AnomalyVerdict]:
        """Classify records in order; returns their verdicts, then any
        verdicts for flows that expired at the new event clock."""
        flow_vecs: list[Optional[list[float]]] = []
        http_vecs: list[Optional[list[float]]] = []
        ctxs: list[RequestContext] = []

        for rec in records:
            self.records_in += 1
            if isinstance(rec, HttpRequestRecord):
                repeated = self.auth.observe(rec)
                flow_vecs.append(None)
                http_vecs.append(extract_http_features(rec, ruleset=self.ruleset))
                ctxs.append(RequestContext(rec.event_id, rec.timestamp, rec.client_ip, repeated))
            elif isinstance(rec, PacketRecord):
                self.flows.observe(rec)
            else:
                raise TypeError(f"cannot classify {type(rec).__name__}")
            if rec.timestamp > self.event_clock:
                self.event_clock = rec.timestamp

        for state in sorted(self.flows.take_idle(self.event_clock), key=_flow_sort_key):
            fv, hv, ctx = self._flow_entry(state)
            flow_vecs.append(fv)
            http_vecs.append(hv)
            ctxs.append(ctx)

        return self._classify(flow_vecs, http_vecs, ctxs)

    def process(self, rec: Record) -> list[AnomalyVerdict]:
        """Single-record (canonical sequential) form of process_batch."""
        return self.process_batch((rec,))

    def flush(self) -> list[AnomalyVerdict]:
        """Finalize every live flow regardless of idleness (end of input)."""
        states = sorted(self.flows.drain(), key=_flow_sort_key)
        if not states:
            return []
        entries = [self._flow_entry(st) for st in states]
        return self._classify(*map(list, zip(*entries)))

    def _classify(self, flow_vecs, http_vecs, ctxs) -> list[AnomalyVerdict]:
        if not ctxs:
            return []
        X = np.array([schema.assemble(f, h) for f, h in zip(flow_vecs, http_vecs)], dtype=np.float64)
        confs = forward(self.model, X) if len(ctxs) > 1 else [forward(self.model, X[0])]
        return [
            label_verdict(float(c), h, ctx, self.threshold)
            for c, h, ctx in zip(confs, http_vecs, ctxs)
        ]


class Analyzer:
    """Sequential end-to-end engine: records in, (verdict, assessment) out."""

    def __init__(
        self,
        model: ModelBundle,
        ruleset: Optional[Ruleset] = None,
        calc_config: CalculatorConfig = CalculatorConfig(),
        threshold: float = DEFAULT_THRESHOLD,
    ):
        self.engine = VerdictEngine(model, ruleset, threshold)
        self.calculator = ThreatCalculator(calc_config)

    def process(self, rec: Record) -> list[tuple[AnomalyVerdict, Optional[ThreatAssessment]]]:
        return [(v, self.calculator.process(v)) for v in self.engine.process(rec)]

    def flush(self) -> list[tuple[AnomalyVerdict, Optional[ThreatAssessment]]]:
        return [(v, self.calculator.process(v)) for v in self.engine.flush()]

    def run(self, records: Iterable[Record]) -> Iterator[tuple[AnomalyVerdict, Optional[ThreatAssessment]]]:
        """Canonical per-record replay: yields results in deterministic order."""
        for rec in records:
            yield from self.process(rec)
        yield from self.flush()


def one_shot_score(
    model: ModelBundle,
    rec: Record,
    ruleset: Optional[Ruleset] = None,
    calc_config: CalculatorConfig = CalculatorConfig(),
    threshold: float = DEFAULT_THRESHOLD,
) -> list[tuple[AnomalyVerdict, Optional[ThreatAssessment]]]:
    """Score one record against fresh state (the `score` CLI path)."""
    analyzer = Analyzer(model, ruleset, calc_config, threshold)
    out = analyzer.process(rec)
    out.extend(analyzer.flush())
    return out


class Pipeline:
    """Bus-wired workers: detector (raw_events → ad_events) and
    calculator (ad_events → threat_events)."""

    def __init__(
        self,
        bus: EventBus,
        model: ModelBundle,
        ruleset: Optional[Ruleset] = None,
        calc_config: CalculatorConfig = CalculatorConfig(),
        threshold: float = DEFAULT_THRESHOLD,
        batch_size: int = 256,
        topics: tuple[str, str, str] = (TOPIC_RAW, TOPIC_VERDICTS, TOPIC_THREATS),
    ):
        self.bus = bus
        self.engine = VerdictEngine(model, ruleset, threshold)
        self.calculator = ThreatCalculator(calc_config)
        self.batch_size = batch_size
        self.topic_raw, self.topic_verdicts, self.topic_threats = topics
        for topic in topics:
            bus.create_topic(topic)
        self._threads: list[threading.Thread] = []
        self._stop_detector = threading.Event()
        self._stop_calculator = threading.Event()
        self._started = False
        # single-writer counters, racy reads are fine for reporting
        self.verdicts_out = 0
        self.assessments_out = 0

    # --- producer side -----------------------------------------------------

    def publish_record(self, rec: Record) -> None:
        self.bus.publish(self.topic_raw, wire.encode(rec))

    def sink(self):
        """Callable suitable as a replay() sink."""
        return self.publish_record

    # --- workers -----------------------------------------------------------

    def _detector_loop(self) -> None:
        sub = self._det_sub
        try:
            while True:
                try:
                    batch = sub.get_batch(self.batch_size, timeout=0.05)
                except Closed:
                    break
                if batch:
                    records = [wire.decode(m) for m in batch]
                    for v in self.engine.process_batch(records):
                        self.bus.publish(self.topic_verdicts, wire.encode(v))
                        self.verdicts_out += 1
                elif self._stop_detector.is_set() and sub.qsize() == 0:
                    break
        finally:
            for v in self.engine.flush():
                self.bus.publish(self.topic_verdicts, wire.encode(v))
                self.verdicts_out += 1
            self.bus.unsubscribe(sub)

    def _calculator_loop(self) -> None:
        sub = self._calc_sub
        try:
            while True:
                try:
                    batch = sub.get_batch(self.batch_size, timeout=0.05)
                except Closed:
                    break
                if batch:
                    for m in batch:
                        assessment = self.calculator.process(wire.decode(m))
                        if assessment is not None:
                            self.bus.publish(self.topic_threats, wire.encode(assessment))
                            self.assessments_out += 1
                elif self._stop_calculator.is_set() and sub.qsize() == 0:
                    break
        finally:
            self.bus.unsubscribe(sub)

    # --- lifecycle ----------------------------------------------------------

    def start(self) -> None:
        if self._started:
            raise RuntimeError("pipeline already started")
        self._started = True
        # subscribe before returning so nothing published afterwards is missed
        self._det_sub = self.bus.subscribe(self.topic_raw)
        self._calc_sub = self.bus.subscribe(self.topic_verdicts)
        det = threading.Thread(target=self._detector_loop, name="detector", daemon=True)
        calc = threading.Thread(target=self._calculator_loop, name="calculator", daemon=True)
        self._threads = [det, calc]
        det.start()
        calc.start()

    def stop(self, timeout: float = 30.0) -> None:
        """Drain in stage order: detector finishes (flushing flows), then calculator."""
        if not self._started:
            return
        det, calc = self._threads
        self._stop_detector.set()
        det.join(timeout)
        self._stop_calculator.set()
        calc.join(timeout)
        self._started = False

    def __enter__(self) -> "Pipeline":
        self.start()
        return self

    def __exit__(self, *exc) -> None:
        self.stop()
