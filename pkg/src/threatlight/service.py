"""HTTP service: wires the bus pipeline to the dashboard API.

Workers (detector, calculator, snapshot maintainer, optional replay
feeder) run as threads around one EventBus. Request handlers never
touch mutable pipeline state; they read point-in-time snapshots
maintained by a single writer thread.

Endpoints:

    GET  /api/status          current assessment (empty state: 0 / GREEN)
    GET  /api/events?limit=N  last N verdicts, N <= 1000
    GET  /api/metrics         rolling counters + per-minute histogram
    GET  /api/stream          SSE: `verdict`, `threat`, `metrics` events
    POST /api/chat            {"message": ...} -> ndjson chunks

When a built dashboard directory is available it is served at `/`.
"""

from __future__ import annotations

import errno
import json
import socket
import threading
import time
from collections import OrderedDict, deque
from dataclasses import dataclass
from pathlib import Path
from typing import Iterator, Optional

from fastapi import FastAPI, Request
from fastapi.responses import JSONResponse, Response, StreamingResponse

from . import wire
from .bus import Closed, EventBus
from .chat import (
    MAX_MESSAGE_BYTES,
    KnowledgeBase,
    UpstreamChatError,
    load_default_knowledge_base,
    load_knowledge_base,
    offline_stream,
    upstream_stream,
)
from .config import AppConfig, BadConfig, ReplaySpec, default_model_path
from .httpfeat import load_default_ruleset
from .ingest import ReplayMode, ReplayPlan, replay
from .nn import load_model
from .pipeline import Pipeline
from .types import AnomalyVerdict, HttpRequestRecord, PacketRecord, RawLogRecord, ThreatAssessment

__all__ = [
    "PortInUse",
    "DashboardSnapshot",
    "SnapshotMaintainer",
    "ServiceState",
    "build_app",
    "serve",
]

HEARTBEAT_S = 15.0
METRICS_PUSH_S = 2.0
HISTOGRAM_SPAN_MIN = 60
VERDICT_RING = 1000
EVENTS_DEFAULT_LIMIT = 100
EVENTS_MAX_LIMIT = 1000


class PortInUse(OSError):
    """The configured listen port is already bound."""


# --- snapshot state -------------------------------------------------------


@dataclass(frozen=True)
class DashboardSnapshot:
    """Point-in-time view of the pipeline for the dashboard.

    Counters are monotone within a run; `per_minute` buckets cover
    every verdict inside their span, so they sum to the total counted
    there.
    """

    current: Optional[ThreatAssessment]
    updated_at: Optional[int]  # wall clock, µs
    logs_assessed: int
    network_events_processed: int
    anomalies: int
    by_attack_type: tuple[tuple[str, int], ...]
    recent_verdicts: tuple[AnomalyVerdict, ...]
    per_minute: tuple[tuple[int, int, int], ...]  # (bucket start s, events, anomalies)
    started_at: float

    def status_dict(self) -> dict:
        if self.current is None:
            return {
                "final_score": 0.0,
                "band": "GREEN",
                "factors": None,
                "window_event_count": 0,
                "updated_at": None,
            }
        d = wire.to_dict(self.current)
        return {
            "final_score": d["final_score"],
            "band": d["band"],
            "factors": d["factors"],
            "window_event_count": d["window_event_count"],
            "timestamp": d["timestamp"],
            "updated_at": self.updated_at,
        }

    def metrics_dict(self) -> dict:
        return {
            "logs_assessed": self.logs_assessed,
            "network_events_processed": self.network_events_processed,
            "anomalies": self.anomalies,
            "by_attack_type": dict(self.by_attack_type),
            "per_minute": [
                {"minute": m, "events": n, "anomalies": a} for m, n, a in self.per_minute
            ],
            "uptime_s": round(time.time() - self.started_at, 3),
        }


class SnapshotMaintainer:
    """Single writer folding bus traffic into the dashboard snapshot.

    Subscribes to the raw, verdict, and threat topics; raw records
    count as logs assessed, verdicts feed the counters/ring/histogram,
    and the last assessment becomes the current status.
    """

    def __init__(
        self,
        bus: EventBus,
        topics: tuple[str, str, str],
        history: int = VERDICT_RING,
        histogram_span_min: int = HISTOGRAM_SPAN_MIN,
    ):
        self.bus = bus
        self._sub = bus.subscribe(*topics, capacity=50_000)
        self._span_min = histogram_span_min
        self._lock = threading.Lock()
        self._stop = threading.Event()
        self._thread: Optional[threading.Thread] = None
        self._started_at = time.time()
        self._current: Optional[ThreatAssessment] = None
        self._updated_at: Optional[int] = None
        self._logs = 0
        self._verdicts = 0
        self._anomalies = 0
        self._by_type: dict[str, int] = {}
        self._recent: deque[AnomalyVerdict] = deque(maxlen=history)
        self._minutes: "OrderedDict[int, list[int]]" = OrderedDict()
        self.generation = 0

    def start(self) -> None:
        self._thread = threading.Thread(target=self._run, name="snapshot", daemon=True)
        self._thread.start()

    def stop(self, timeout: float = 10.0) -> None:
        self._stop.set()
        if self._thread is not None:
            self._thread.join(timeout)

    def _run(self) -> None:
        sub = self._sub
        while True:
            try:
                batch = sub.get_batch(512, timeout=0.05)
            except Closed:
                break
            if batch:
                with self._lock:
                    for msg in batch:
                        self._apply(wire.decode(msg))
                    self.generation += 1
            elif self._stop.is_set() and sub.qsize() == 0:
                break
        self.bus.unsubscribe(sub)

    def _apply(self, obj) -> None:
        if isinstance(obj, (RawLogRecord, HttpRequestRecord, PacketRecord)):
            self._logs += 1
        elif isinstance(obj, AnomalyVerdict):
            self._verdicts += 1
            name = obj.attack_type.value
            self._by_type[name] = self._by_type.get(name, 0) + 1
            if obj.is_anomalous:
                self._anomalies += 1
            self._recent.append(obj)
            minute = obj.timestamp // 60_000_000
            bucket = self._minutes.get(minute)
            if bucket is None:
                bucket = self._minutes[minute] = [0, 0]
                # prune buckets that fell out of the span
                newest = max(self._minutes)
                floor = newest - self._span_min + 1
                for key in [k for k in self._minutes if k < floor]:
                    del self._minutes[key]
            bucket[0] += 1
            if obj.is_anomalous:
                bucket[1] += 1
        elif isinstance(obj, ThreatAssessment):
            self._current = obj
            self._updated_at = time.time_ns() // 1000

    def snapshot(self) -> DashboardSnapshot:
        with self._lock:
            return DashboardSnapshot(
                current=self._current,
                updated_at=self._updated_at,
                logs_assessed=self._logs,
                network_events_processed=self._verdicts,
                anomalies=self._anomalies,
                by_attack_type=tuple(sorted(self._by_type.items())),
                recent_verdicts=tuple(self._recent),
                per_minute=tuple(
                    (m * 60, counts[0], counts[1]) for m, counts in sorted(self._minutes.items())
                ),
                started_at=self._started_at,
            )


# --- service assembly -----------------------------------------------------


class _ReplayCancelled(Exception):
    pass


class ServiceState:
    """Everything `serve` runs: bus, pipeline, maintainer, replay feeder."""

    def __init__(self, cfg: AppConfig):
        self.cfg = cfg
        model_file = Path(cfg.model_path) if cfg.model_path else default_model_path()
        try:
            self.model = load_model(model_file)
        except OSError as e:
            raise BadConfig(f"cannot load model {model_file}: {e}") from None
        self.ruleset = load_default_ruleset()
        if cfg.knowledge_base:
            self.kb: KnowledgeBase = load_knowledge_base(cfg.knowledge_base)
        else:
            self.kb = load_default_knowledge_base()
        self.bus = EventBus()
        self.pipeline = Pipeline(
            self.bus,
            self.model,
            self.ruleset,
            calc_config=cfg.calculator,
            threshold=cfg.threshold,
            topics=cfg.topics,
        )
        self.maintainer = SnapshotMaintainer(self.bus, cfg.topics)
        self._replay_stop = threading.Event()
        self._replay_thread: Optional[threading.Thread] = None

    def start(self) -> None:
        self.pipeline.start()
        self.maintainer.start()
        if self.cfg.replay is not None:
            self._replay_thread = threading.Thread(
                target=self._replay_worker, args=(self.cfg.replay,), name="replay", daemon=True
            )
            self._replay_thread.start()

    def _replay_worker(self, spec: ReplaySpec) -> None:
        mode = ReplayMode.STEADY if spec.rate else ReplayMode.BATCH
        plan = ReplayPlan(spec.path, mode=mode, rate=spec.rate or 0.0, loop_count=spec.loop)

        def sink(rec):
            if self._replay_stop.is_set():
                raise _ReplayCancelled()
            self.pipeline.publish_record(rec)

        try:
            replay(plan, sink)
        except (_ReplayCancelled, Closed):
            pass

    def stop(self) -> None:
        self._replay_stop.set()
        if self._replay_thread is not None:
            self._replay_thread.join(5.0)
        self.pipeline.stop()
        self.maintainer.stop()
        self.bus.close()


# --- routes ---------------------------------------------------------------


def _wire_kind(msg: str) -> str:
    # the wire encoder always writes "kind" first
    if msg.startswith('{"kind":"'):
        return msg[9 : msg.index('"', 9)]
    try:
        return json.loads(msg).get("kind", "")
    except (json.JSONDecodeError, AttributeError):
        return ""


def _sse_generator(svc: ServiceState) -> Iterator[bytes]:
    cfg = svc.cfg
    sub = svc.bus.subscribe(cfg.topic_verdicts, cfg.topic_threats)
    try:
        yield b": connected\n\n"
        last_write = time.monotonic()
        last_metrics = last_write
        last_gen = -1
        while True:
            try:
                batch = sub.get_batch(256, timeout=1.0)
            except Closed:
                return
            now = time.monotonic()
            for msg in batch:
                name = "threat" if _wire_kind(msg) == "threat" else "verdict"
                yield f"event: {name}\ndata: {msg}\n\n".encode()
                last_write = now
            if now - last_metrics >= METRICS_PUSH_S and svc.maintainer.generation != last_gen:
                last_gen = svc.maintainer.generation
                payload = json.dumps(svc.maintainer.snapshot().metrics_dict(), separators=(",", ":"))
                yield f"event: metrics\ndata: {payload}\n\n".encode()
                last_metrics = now
                last_write = now
            if now - last_write >= HEARTBEAT_S:
                yield b": hb\n\n"
                last_write = now
    finally:
        svc.bus.unsubscribe(sub)


async def _chat_endpoint(request: Request) -> Response:
    svc: ServiceState = request.app.state.svc
    try:
        body = json.loads(await request.body())
    except (json.JSONDecodeError, UnicodeDecodeError):
        return JSONResponse({"error": "body must be JSON"}, status_code=400)
    if not isinstance(body, dict) or not isinstance(body.get("message"), str):
        return JSONResponse({"error": 'body must be {"message": "..."}'}, status_code=400)
    message = body["message"]
    if len(message.encode("utf-8")) > MAX_MESSAGE_BYTES:
        return JSONResponse(
            {"error": "message too large", "limit_bytes": MAX_MESSAGE_BYTES}, status_code=413
        )

    ndjson = "application/x-ndjson"
    if not svc.cfg.chat.configured:
        return StreamingResponse(offline_stream(svc.kb, message), media_type=ndjson)

    agen = upstream_stream(svc.cfg.chat, message)
    try:
        first = await agen.__anext__()
    except UpstreamChatError as e:
        fallback = "".join(offline_stream(svc.kb, message, note=str(e)))
        return Response(fallback, status_code=502, media_type=ndjson)

    async def rest():
        yield first
        async for line in agen:
            yield line

    return StreamingResponse(rest(), media_type=ndjson)


def build_app(config: Optional[AppConfig] = None, static_dir: Optional[Path] = None) -> FastAPI:
    """Assemble the FastAPI app; pipeline workers start with its lifespan."""
    from contextlib import asynccontextmanager

    cfg = config or AppConfig()

    @asynccontextmanager
    async def lifespan(app: FastAPI):
        svc = ServiceState(cfg)
        svc.start()
        app.state.svc = svc
        try:
            yield
        finally:
            svc.stop()

    app = FastAPI(title="threatlight", lifespan=lifespan)

    @app.get("/api/status")
    async def api_status(request: Request):
        svc: ServiceState = request.app.state.svc
        return JSONResponse(svc.maintainer.snapshot().status_dict())

    @app.get("/api/events")
    async def api_events(request: Request, limit: int = EVENTS_DEFAULT_LIMIT):
        if not 1 <= limit <= EVENTS_MAX_LIMIT:
            return JSONResponse(
                {"error": f"limit must be in [1, {EVENTS_MAX_LIMIT}]"}, status_code=400
            )
        svc: ServiceState = request.app.state.svc
        recent = svc.maintainer.snapshot().recent_verdicts
        return JSONResponse([wire.to_dict(v) for v in recent[-limit:]])

    @app.get("/api/metrics")
    async def api_metrics(request: Request):
        svc: ServiceState = request.app.state.svc
        return JSONResponse(svc.maintainer.snapshot().metrics_dict())

    @app.get("/api/stream")
    async def api_stream(request: Request):
        svc: ServiceState = request.app.state.svc
        return StreamingResponse(
            _sse_generator(svc),
            media_type="text/event-stream",
            headers={"cache-control": "no-cache", "x-accel-buffering": "no"},
        )

    app.add_api_route("/api/chat", _chat_endpoint, methods=["POST"])

    if static_dir is not None and Path(static_dir).is_dir():
        from fastapi.staticfiles import StaticFiles

        app.mount("/", StaticFiles(directory=str(static_dir), html=True), name="dashboard")

    return app


def _check_port(host: str, port: int) -> None:
    probe = socket.socket(socket.AF_INET, socket.SOCK_STREAM)
    try:
        probe.setsockopt(socket.SOL_SOCKET, socket.SO_REUSEADDR, 1)
        probe.bind((host, port))
    except OSError as e:
        if e.errno == errno.EADDRINUSE:
            raise PortInUse(f"{host}:{port} is already in use") from None
        raise
    finally:
        probe.close()


def _find_static_dir() -> Optional[Path]:
    candidates = [
        Path(__file__).resolve().parents[2] / "frontend" / "dist",
        Path.cwd() / "frontend" / "dist",
    ]
    for cand in candidates:
        if (cand / "index.html").is_file():
            return cand
    return None


def serve(config: Optional[AppConfig] = None, static_dir: Optional[Path] = None) -> None:
    """Run the service until interrupted. Raises PortInUse / BadConfig."""
    import uvicorn

    cfg = config or AppConfig()
    _check_port(cfg.host, cfg.port)
    app = build_app(cfg, static_dir=static_dir if static_dir is not None else _find_static_dir())
    uvicorn.run(app, host=cfg.host, port=cfg.port, log_level="info")
