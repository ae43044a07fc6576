"""Benchmark harness: steady-state latency and batch wall time.

Two measurement paths share one report shape:

* `run_bench(engine, workload)` drives pre-materialized log lines
  through an engine's parse → features → classify → score path in a
  single thread. Engines are interchangeable: the built-in numpy one
  (`PrimaryEngine`) or a drop-in twin loaded by
  `make_reference_engine`. Used for cross-engine comparisons.

* `run_pipeline_bench(corpus, ...)` replays a corpus file through the
  bus-wired worker pipeline, measuring throughput (batch) or
  publish-to-emission latency percentiles (steady).

Timing always excludes generation and file I/O of the workload
itself; memory is sampled from the process RSS every 100 ms.

Engine protocol (for drop-in twins): an object with an `engine_id`
string, `process(line) -> list[dict]` and `finish() -> list[dict]`,
where `line` is one access-log or JSON event line and the returned
dicts use the verdict/threat wire shapes.
"""

from __future__ import annotations

import math
import threading
import time
from dataclasses import dataclass
from pathlib import Path
from random import Random
from typing import Iterable, Optional, Union

__all__ = [
    "EngineUnavailable",
    "EquivalenceError",
    "BenchReport",
    "Workload",
    "PrimaryEngine",
    "make_reference_engine",
    "default_ruleset_path",
    "generate_lines",
    "write_corpus",
    "run_bench",
    "run_pipeline_bench",
    "verify_equivalence",
    "compare",
    "comparison_table",
]

DEFAULT_SEED = 1337
ATTACK_RATIO = 0.3
MEM_SAMPLE_S = 0.1
_BASE_TS = 1_767_225_600_000_000  # 2026-01-01T00:00:00Z, µs


class EngineUnavailable(RuntimeError):
    """The requested benchmark engine cannot be constructed."""


class EquivalenceError(AssertionError):
    """Two engines disagreed on the benchmark stream."""


# --- report ----------------------------------------------------------------


@dataclass(frozen=True)
class BenchReport:
    engine_id: str
    mode: str
    events: int
    wall_time_s: float
    per_event_ms_mean: float
    per_event_ms_p50: float
    per_event_ms_p99: float
    peak_memory_mb: float
    throughput_eps: float

    def __post_init__(self):
        if not self.wall_time_s > 0:
            raise ValueError("wall_time_s must be > 0")
        if self.per_event_ms_p50 > self.per_event_ms_p99:
            raise ValueError("p50 must not exceed p99")

    def to_dict(self) -> dict:
        return {
            "engine_id": self.engine_id,
            "mode": self.mode,
            "events": self.events,
            "wall_time_s": round(self.wall_time_s, 6),
            "per_event_ms": {
                "mean": round(self.per_event_ms_mean, 6),
                "p50": round(self.per_event_ms_p50, 6),
                "p99": round(self.per_event_ms_p99, 6),
            },
            "peak_memory_mb": round(self.peak_memory_mb, 2),
            "throughput_eps": round(self.throughput_eps, 1),
        }


@dataclass(frozen=True)
class Workload:
    mode: str  # "batch" | "steady"
    events: int
    rate: float = 0.0  # events/s, steady only
    seed: int = DEFAULT_SEED
    attack_ratio: float = ATTACK_RATIO

    def __post_init__(self):
        if self.mode not in ("batch", "steady"):
            raise ValueError("mode must be 'batch' or 'steady'")
        if self.events < 1:
            raise ValueError("events must be >= 1")
        if self.mode == "steady" and not self.rate > 0:
            raise ValueError("steady mode requires rate > 0")


# --- synthetic workload ----------------------------------------------------

_BENIGN_PATHS = [
    ("/", ""),
    ("/index.html", ""),
    ("/about", ""),
    ("/contact", ""),
    ("/products", "page=2"),
    ("/products", "sort=asc&page=3"),
    ("/search", "q=widgets"),
    ("/search", "q=blue+widgets&page=1"),
    ("/api/items", "limit=20"),
    ("/api/items/42", ""),
    ("/api/session", "session=abc123def"),
    ("/static/app.css", ""),
    ("/static/app.js", "version=1.4.2"),
    ("/images/logo.png", ""),
    ("/blog/2026/01/release-notes", ""),
    ("/docs/guide.html", ""),
    ("/account/profile", "tab=settings"),
    ("/cart", "items=3"),
    ("/checkout", "step=2"),
    ("/health", ""),
]

# percent-encoded so the rendered access-log line stays well-formed
_ATTACK_PATHS = [
    # SQL injection
    ("/products", "id=1%20UNION%20SELECT%20username%2Cpassword%20FROM%20users--"),
    ("/search", "q=%27%20UNION%20SELECT%20card_no%20FROM%20payments--"),
    ("/login", "user=admin%27--&pass=x"),
    ("/item", "id=1%20OR%201%3D1"),
    ("/report", "filter=1%3B%20DROP%20TABLE%20accounts"),
    ("/api/user", "name=%27%20or%20%271%27%3D%271"),
    ("/lookup", "q=1%20AND%20sleep(5)"),
    ("/stats", "id=benchmark(1000000%2Cmd5(1))"),
    # XSS
    ("/comment", "text=%3Cscript%3Ealert(1)%3C%2Fscript%3E"),
    ("/profile", "name=%3Cimg%20src%3Dx%20onerror%3Dalert(1)%3E"),
    ("/post", "body=%3Csvg%20onload%3Dalert(document.cookie)%3E"),
    ("/redirect", "url=javascript%3Aalert(1)"),
    ("/greet", "name=%22%3E%3Cscript%3Efetch(%27//evil%27)%3C%2Fscript%3E"),
    ("/preview", "html=%3Cdiv%20onmouseover%3Dsteal()%3Ehi%3C%2Fdiv%3E"),
    # path traversal
    ("/static/..%2F..%2F..%2Fetc%2Fpasswd", ""),
    ("/download", "file=..%2F..%2F..%2Fetc%2Fpasswd"),
    ("/files/..%5C..%5Cwindows%5Csystem32%5Cconfig", ""),
    ("/view", "doc=%252e%252e%252f%252e%252e%252fetc%252fpasswd"),
    ("/fetch", "path=....%2F%2F....%2F%2Fetc%2Fshadow"),
    ("/assets/%2e%2e/%2e%2e/etc/passwd", ""),
]

_AGENTS = [
    "Mozilla/5.0 (X11; Linux x86_64) Gecko/20100101 Firefox/121.0",
    "Mozilla/5.0 (Windows NT 10.0; Win64; x64) Chrome/120.0",
    "Mozilla/5.0 (Macintosh; Intel Mac OS X 13_2) Safari/605.1.15",
    "curl/8.5.0",
    "python-requests/2.32",
]

_MONTH_ABBR = ["Jan", "Feb", "Mar", "Apr", "May", "Jun", "Jul", "Aug", "Sep", "Oct", "Nov", "Dec"]


def _clf_time(ts_us: int) -> str:
    t = time.gmtime(ts_us // 1_000_000)
    return "%02d/%s/%04d:%02d:%02d:%02d +0000" % (
        t.tm_mday, _MONTH_ABBR[t.tm_mon - 1], t.tm_year, t.tm_hour, t.tm_min, t.tm_sec
    )


def _benign_ip(rng: Random) -> str:
    return f"10.{rng.randint(0, 3)}.{rng.randint(0, 255)}.{rng.randint(1, 254)}"


def _attacker_ips(rng: Random) -> list[str]:
    # few sources inside shared /24s so subnet clustering engages
    subnets = ["203.0.113", "198.51.100"]
    return [f"{rng.choice(subnets)}.{rng.randint(1, 254)}" for _ in range(8)]


def generate_lines(
    events: int, seed: int = DEFAULT_SEED, attack_ratio: float = ATTACK_RATIO
) -> list[str]:
    """Deterministic access-log lines: ~(1-ratio) benign, ratio attack.

    Attacks arrive in short per-source bursts so frequency and subnet
    clustering resemble incident traffic rather than uniform noise.
    """
    rng = Random(seed)
    attackers = _attacker_ips(rng)
    lines: list[str] = []
    ts = _BASE_TS
    burst_left = 0
    burst_ip = ""
    while len(lines) < events:
        ts += rng.randint(20_000, 180_000)  # 20-180 ms apart
        attack = burst_left > 0 or rng.random() < attack_ratio / 4
        if attack and burst_left == 0:
            burst_left = rng.randint(3, 8)
            burst_ip = rng.choice(attackers)
        if attack:
            burst_left -= 1
            ip = burst_ip
            path, query = rng.choice(_ATTACK_PATHS)
            status = rng.choice((200, 200, 403, 500))
        else:
            ip = _benign_ip(rng)
            path, query = rng.choice(_BENIGN_PATHS)
            status = rng.choice((200, 200, 200, 200, 301, 404))
        method = "POST" if rng.random() < 0.1 else "GET"
        target = f"{path}?{query}" if query else path
        size = rng.randint(120, 40_000)
        agent = rng.choice(_AGENTS)
        lines.append(
            f'{ip} - - [{_clf_time(ts)}] "{method} {target} HTTP/1.1" {status} {size} "-" "{agent}"'
        )
    return lines[:events]


def _generate_packet_lines(events: int, rng: Random, start_ts: int) -> list[tuple[int, str]]:
    from . import wire
    from .types import PacketRecord, Protocol

    out: list[tuple[int, str]] = []
    ts = start_ts
    while len(out) < events:
        src = _benign_ip(rng)
        dst = f"192.0.2.{rng.randint(1, 40)}"
        sport = rng.randint(1024, 65000)
        dport = rng.choice((80, 443, 8080, 22))
        n = min(rng.randint(2, 10), events - len(out))
        ts += rng.randint(5_000, 400_000)
        flow_ts = ts
        for i in range(n):
            flow_ts += rng.randint(200, 80_000)
            if i == 0:
                flags, length, a_to_b = frozenset(("SYN",)), 60, True
            elif i == n - 1:
                flags, length, a_to_b = frozenset(("FIN", "ACK")), 52, rng.random() < 0.5
            else:
                flags = frozenset(("ACK", "PSH")) if rng.random() < 0.6 else frozenset(("ACK",))
                length, a_to_b = rng.randint(52, 1500), rng.random() < 0.6
            rec = PacketRecord(
                timestamp=flow_ts,
                src_ip=src if a_to_b else dst,
                src_port=sport if a_to_b else dport,
                dst_ip=dst if a_to_b else src,
                dst_port=dport if a_to_b else sport,
                protocol=Protocol.TCP,
                length_bytes=length,
                tcp_flags=flags,
            )
            out.append((flow_ts, wire.encode(rec)))
    return out[:events]


def write_corpus(
    path: Union[str, Path],
    events: int,
    seed: int = DEFAULT_SEED,
    attack_ratio: float = ATTACK_RATIO,
    packet_ratio: float = 0.0,
) -> Path:
    """Write a deterministic benchmark corpus file.

    packet_ratio 0 gives a plain access log; otherwise a JSONL mix of
    HTTP and packet events ordered by timestamp.
    """
    path = Path(path)
    n_packets = int(events * packet_ratio)
    n_http = events - n_packets
    http_lines = generate_lines(n_http, seed=seed, attack_ratio=attack_ratio)
    if n_packets == 0:
        path.write_text("\n".join(http_lines) + "\n", encoding="utf-8")
        return path

    from . import wire
    from .ingest import parse_apache_line

    rng = Random(seed + 1)
    parsed = [parse_apache_line(line) for line in http_lines]
    rows = [(rec.timestamp, wire.encode(rec)) for rec in parsed]
    rows += _generate_packet_lines(n_packets, rng, _BASE_TS)
    rows.sort(key=lambda r: r[0])
    path.write_text("\n".join(line for _, line in rows) + "\n", encoding="utf-8")
    return path


# --- engines ----------------------------------------------------------------


def default_ruleset_path() -> Path:
    from importlib import resources

    return Path(str(resources.files("threatlight.data").joinpath("rules_v1.txt")))


class PrimaryEngine:
    """The numpy engine behind the line-in, wire-dicts-out protocol."""

    engine_id = "primary"

    def __init__(
        self,
        model_path: Union[str, Path, None] = None,
        ruleset_path: Union[str, Path, None] = None,
        calc_config_path: Union[str, Path, None] = None,
        threshold: float = 0.5,
    ):
        from . import wire
        from .config import default_model_path
        from .httpfeat import load_default_ruleset, load_ruleset
        from .ingest import parse_apache_line
        from .nn import load_model
        from .pipeline import Analyzer
        from .scoring import CalculatorConfig, load_calculator_config

        model = load_model(Path(model_path) if model_path else default_model_path())
        ruleset = load_ruleset(ruleset_path) if ruleset_path else load_default_ruleset()
        calc = load_calculator_config(calc_config_path) if calc_config_path else CalculatorConfig()
        self._analyzer = Analyzer(model, ruleset, calc, threshold)
        self._decode = wire.decode
        self._to_dict = wire.to_dict
        self._parse = parse_apache_line

    def _emit(self, results) -> list[dict]:
        out = []
        for verdict, assessment in results:
            out.append(self._to_dict(verdict))
            if assessment is not None:
                out.append(self._to_dict(assessment))
        return out

    def process(self, line: str) -> list[dict]:
        rec = self._decode(line) if line.startswith("{") else self._parse(line)
        return self._emit(self._analyzer.process(rec))

    def finish(self) -> list[dict]:
        return self._emit(self._analyzer.flush())


def make_reference_engine(
    model_path: Union[str, Path, None] = None,
    ruleset_path: Union[str, Path, None] = None,
    calc_config_path: Union[str, Path, None] = None,
    threshold: float = 0.5,
):
    """Load the pure-Python twin engine, if installed."""
    try:
        from oraclight import OracleEngine
    except ImportError:
        raise EngineUnavailable(
            "reference engine not installed (pip install ./oracle)"
        ) from None
    from .config import default_model_path

    return OracleEngine(
        str(Path(model_path) if model_path else default_model_path()),
        str(Path(ruleset_path) if ruleset_path else default_ruleset_path()),
        str(calc_config_path) if calc_config_path else None,
        threshold=threshold,
    )


# --- measurement ------------------------------------------------------------


class _MemSampler:
    """Samples process RSS on a 100 ms cadence; tracks the peak seen."""

    def __init__(self, interval: float = MEM_SAMPLE_S):
        import psutil

        self._proc = psutil.Process()
        self._interval = interval
        self._stop = threading.Event()
        self._thread = threading.Thread(target=self._run, name="mem-sampler", daemon=True)
        self.peak_bytes = 0

    def _sample(self) -> None:
        rss = self._proc.memory_info().rss
        if rss > self.peak_bytes:
            self.peak_bytes = rss

    def _run(self) -> None:
        while not self._stop.wait(self._interval):
            self._sample()

    def __enter__(self) -> "_MemSampler":
        self._sample()
        self._thread.start()
        return self

    def __exit__(self, *exc) -> None:
        self._stop.set()
        self._thread.join(2.0)
        self._sample()

    @property
    def peak_mb(self) -> float:
        return self.peak_bytes / (1024 * 1024)


def _pctl(sorted_vals: list[float], q: float) -> float:
    # nearest-rank on a pre-sorted list
    if not sorted_vals:
        return 0.0
    k = max(1, math.ceil(q * len(sorted_vals)))
    return sorted_vals[min(k, len(sorted_vals)) - 1]


def _latency_stats(samples_s: list[float]) -> tuple[float, float, float]:
    if not samples_s:
        return 0.0, 0.0, 0.0
    ordered = sorted(samples_s)
    mean = sum(ordered) / len(ordered)
    return mean * 1000.0, _pctl(ordered, 0.5) * 1000.0, _pctl(ordered, 0.99) * 1000.0


def run_bench(
    engine,
    workload: Workload,
    lines: Optional[list[str]] = None,
    capture: bool = False,
) -> Union[BenchReport, tuple[BenchReport, list[dict]]]:
    """Time one engine over a pre-materialized workload.

    batch: back-to-back processing, per-event wall times.
    steady: events released on a fixed-rate schedule; the per-event
    sample is release-to-completion, so schedule slip counts against
    the engine.

    With capture=True also returns every emitted wire dict, in order,
    for cross-engine equivalence checks.
    """
    if lines is None:
        lines = generate_lines(workload.events, seed=workload.seed, attack_ratio=workload.attack_ratio)
    if len(lines) != workload.events:
        raise ValueError("workload/lines length mismatch")
    captured: list[dict] = []
    samples: list[float] = []
    process = engine.process
    perf = time.perf_counter

    with _MemSampler() as mem:
        if workload.mode == "batch":
            t0 = perf()
            for line in lines:
                t_start = perf()
                out = process(line)
                samples.append(perf() - t_start)
                if capture:
                    captured.extend(out)
            tail = engine.finish()
            wall = perf() - t0
            if capture:
                captured.extend(tail)
        else:
            interval = 1.0 / workload.rate
            t0 = perf()
            for i, line in enumerate(lines):
                release = t0 + i * interval
                now = perf()
                if now < release:
                    time.sleep(release - now)
                out = process(line)
                samples.append(perf() - release)
                if capture:
                    captured.extend(out)
            tail = engine.finish()
            wall = perf() - t0
            if capture:
                captured.extend(tail)

    mean_ms, p50_ms, p99_ms = _latency_stats(samples)
    report = BenchReport(
        engine_id=engine.engine_id,
        mode=workload.mode,
        events=workload.events,
        wall_time_s=wall,
        per_event_ms_mean=mean_ms,
        per_event_ms_p50=p50_ms,
        per_event_ms_p99=p99_ms,
        peak_memory_mb=mem.peak_mb,
        throughput_eps=workload.events / wall,
    )
    return (report, captured) if capture else report


def run_pipeline_bench(
    corpus: Union[str, Path],
    mode: str = "batch",
    rate: float = 0.0,
    model_path: Union[str, Path, None] = None,
    threshold: float = 0.5,
) -> BenchReport:
    """Replay a corpus file through the bus-wired pipeline.

    batch measures drain-to-drain throughput; steady paces publishing
    at `rate` and reports publish-to-final-emission latency per event
    (threat emission for anomalous events, verdict emission for
    benign ones).
    """
    from . import wire
    from .bus import Closed, EventBus
    from .config import default_model_path
    from .httpfeat import load_default_ruleset
    from .ingest import ReplayMode, ReplayPlan, replay
    from .nn import load_model
    from .pipeline import TOPIC_THREATS, TOPIC_VERDICTS, Pipeline
    from .types import AnomalyVerdict

    if mode == "steady" and not rate > 0:
        raise ValueError("steady mode requires rate > 0")
    model = load_model(Path(model_path) if model_path else default_model_path())
    bus = EventBus()
    pipeline = Pipeline(bus, model, load_default_ruleset(), threshold=threshold)

    publish_times: dict[str, float] = {}
    latencies: list[float] = []
    monitor: Optional[threading.Thread] = None
    monitor_stop = threading.Event()

    if mode == "steady":
        sub = bus.subscribe(TOPIC_VERDICTS, TOPIC_THREATS)

        def _monitor() -> None:
            pending: list[str] = []  # anomalous verdicts awaiting their assessment
            while True:
                try:
                    batch = sub.get_batch(256, timeout=0.05)
                except Closed:
                    break
                now = time.perf_counter()
                if batch:
                    for msg in batch:
                        obj = wire.decode(msg)
                        if isinstance(obj, AnomalyVerdict):
                            if obj.event_id not in publish_times:
                                continue  # flow verdicts have no single source event
                            if obj.is_anomalous:
                                pending.append(obj.event_id)
                            else:
                                latencies.append(now - publish_times.pop(obj.event_id))
                        else:  # assessment: pairs with the oldest pending verdict
                            if pending:
                                latencies.append(now - publish_times.pop(pending.pop(0)))
                elif monitor_stop.is_set() and sub.qsize() == 0:
                    break
            bus.unsubscribe(sub)

        monitor = threading.Thread(target=_monitor, name="latency-monitor", daemon=True)
        monitor.start()

    replay_mode = ReplayMode.STEADY if mode == "steady" else ReplayMode.BATCH
    plan = ReplayPlan(Path(corpus), mode=replay_mode, rate=rate if mode == "steady" else 0.0)

    def sink(rec) -> None:
        if mode == "steady" and hasattr(rec, "event_id"):
            publish_times[rec.event_id] = time.perf_counter()
        pipeline.publish_record(rec)

    with _MemSampler() as mem:
        t0 = time.perf_counter()
        pipeline.start()
        report = replay(plan, sink)
        pipeline.stop()
        wall = time.perf_counter() - t0
        if monitor is not None:
            monitor_stop.set()
            monitor.join(10.0)

    events = report.parsed
    if mode == "steady":
        mean_ms, p50_ms, p99_ms = _latency_stats(latencies)
    else:
        per_event = wall / max(events, 1) * 1000.0
        mean_ms = p50_ms = p99_ms = per_event
    return BenchReport(
        engine_id="primary",
        mode=mode,
        events=events,
        wall_time_s=wall,
        per_event_ms_mean=mean_ms,
        per_event_ms_p50=p50_ms,
        per_event_ms_p99=p99_ms,
        peak_memory_mb=mem.peak_mb,
        throughput_eps=events / wall,
    )


# --- cross-engine comparison -------------------------------------------------


def verify_equivalence(
    primary_out: Iterable[dict],
    reference_out: Iterable[dict],
    confidence_tol: float = 1e-6,
    score_tol: float = 1e-9,
) -> int:
    """Assert two engines emitted the same stream; returns events compared.

    Verdicts must match exactly on event_id, is_anomalous, and
    attack_type, with confidence within `confidence_tol`; assessments
    must match bands exactly and final scores within `score_tol`.
    """
    a = list(primary_out)
    b = list(reference_out)
    if len(a) != len(b):
        raise EquivalenceError(f"stream lengths differ: {len(a)} vs {len(b)}")
    for i, (x, y) in enumerate(zip(a, b)):
        if x.get("kind") != y.get("kind"):
            raise EquivalenceError(f"item {i}: kind {x.get('kind')} vs {y.get('kind')}")
        if x["kind"] == "verdict":
            for key in ("event_id", "is_anomalous", "attack_type"):
                if x[key] != y[key]:
                    raise EquivalenceError(f"item {i}: {key} {x[key]!r} vs {y[key]!r}")
            if abs(x["confidence"] - y["confidence"]) > confidence_tol:
                raise EquivalenceError(
                    f"item {i}: confidence differs by {abs(x['confidence'] - y['confidence']):.3g}"
                )
        elif x["kind"] == "threat":
            if x["band"] != y["band"]:
                raise EquivalenceError(f"item {i}: band {x['band']} vs {y['band']}")
            if abs(x["final_score"] - y["final_score"]) > score_tol:
                raise EquivalenceError(
                    f"item {i}: score differs by {abs(x['final_score'] - y['final_score']):.3g}"
                )
    return len(a)


def compare(primary: BenchReport, reference: BenchReport) -> dict:
    """Speedup of primary over reference for one matched workload."""
    return {
        "mode": primary.mode,
        "events": primary.events,
        "speedup": round(reference.wall_time_s / primary.wall_time_s, 3),
        "primary": primary.to_dict(),
        "reference": reference.to_dict(),
    }


def comparison_table(comparisons: Iterable[dict]) -> str:
    """Text table over matched runs: latency, batch walls, memory."""
    by_key: dict[tuple, dict] = {}
    for c in comparisons:
        by_key[(c["mode"], c["events"])] = c

    rows: list[tuple[str, float, float, float]] = []
    steady = next((c for (m, _), c in sorted(by_key.items()) if m == "steady"), None)
    if steady:
        ref = steady["reference"]["per_event_ms"]["mean"]
        pri = steady["primary"]["per_event_ms"]["mean"]
        rows.append(("Steady-state latency (ms/event)", ref, pri, ref / pri if pri else 0.0))
    for events, label in ((1000, "1K"), (100_000, "100K")):
        c = by_key.get(("batch", events))
        if c:
            rows.append(
                (
                    f"Batch processing ({label} events, s)",
                    c["reference"]["wall_time_s"],
                    c["primary"]["wall_time_s"],
                    c["speedup"],
                )
            )
    largest = max(
        (c for (m, _), c in by_key.items() if m == "batch"),
        key=lambda c: c["events"],
        default=steady,
    )
    if largest:
        ref_mb = largest["reference"]["peak_memory_mb"]
        pri_mb = largest["primary"]["peak_memory_mb"]
        rows.append(("Memory usage (MB)", ref_mb, pri_mb, ref_mb / pri_mb if pri_mb else 0.0))

    header = ("Metric", "Reference", "Primary", "Speedup")
    widths = [
        max(len(header[0]), *(len(r[0]) for r in rows)) if rows else len(header[0]),
        10,
        10,
        8,
    ]
    lines = [
        f"{header[0]:<{widths[0]}}  {header[1]:>{widths[1]}}  {header[2]:>{widths[2]}}  {header[3]:>{widths[3]}}"
    ]
    lines.append("  ".join("-" * w for w in widths))
    for name, ref, pri, speed in rows:
        lines.append(
            f"{name:<{widths[0]}}  {ref:>{widths[1]}.3f}  {pri:>{widths[2]}.3f}  {speed:>{widths[3] - 1}.1f}x"
        )
    return "\n".join(lines)
