"""Log file ingestion and replay.

Parses Apache access logs (Common and Combined Log Format) and JSONL
event files into HttpRequestRecord / PacketRecord streams, and replays
a file into a sink either as fast as it will accept (BATCH) or paced
at a fixed event rate (STEADY).

Percent-decoding is deliberately not performed here: the raw query
text is preserved byte-for-byte for the pattern engine, which owns
normalization depth. CLF timezone offsets are honored and converted
to UTC so every source shares one clock.
"""

from __future__ import annotations

import calendar
import hashlib
import json
import time
from dataclasses import dataclass
from enum import Enum
from pathlib import Path
from typing import Callable, Iterator, Union
from urllib.parse import urlsplit

from . import wire
from .types import HttpRequestRecord, PacketRecord

__all__ = [
    "MalformedLine",
    "UnknownKind",
    "SourceUnreadable",
    "ReplayMode",
    "ReplayPlan",
    "ReplayReport",
    "parse_apache_line",
    "parse_jsonl_record",
    "iter_records",
    "replay",
]


class MalformedLine(ValueError):
    """A line that does not match the expected grammar.

    Counted and skipped by replay, never fatal.
    """

    def __init__(self, position: int, reason: str):
        super().__init__(f"line {position}: {reason}")
        self.position = position
        self.reason = reason


class UnknownKind(MalformedLine):
    """JSONL record whose `kind` is missing or not http/packet."""


class SourceUnreadable(OSError):
    """Replay source path cannot be opened or read."""


class ReplayMode(str, Enum):
    STEADY = "STEADY"
    BATCH = "BATCH"


@dataclass(frozen=True, slots=True)
class ReplayPlan:
    source_path: Union[str, Path]
    mode: ReplayMode = ReplayMode.BATCH
    rate: float = 0.0  # events/s, STEADY only
    loop_count: int = 1

    def __post_init__(self):
        if self.mode is ReplayMode.STEADY and not self.rate > 0:
            raise ValueError("STEADY mode requires rate > 0")
        if self.loop_count < 1:
            raise ValueError("loop_count must be >= 1")


@dataclass(frozen=True, slots=True)
class ReplayReport:
    lines: int
    parsed: int
    skipped: int
    wall_time: float


# --- Apache access log parsing ------------------------------------------

_MONTHS = {
    "Jan": 1, "Feb": 2, "Mar": 3, "Apr": 4, "May": 5, "Jun": 6,
    "Jul": 7, "Aug": 8, "Sep": 9, "Oct": 10, "Nov": 11, "Dec": 12,
}


def _parse_clf_time(text: str, position: int) -> int:
    """`10/Oct/2025:13:55:36 +0000` → UTC microseconds. Exact integer math."""
    # dd/Mon/yyyy:HH:MM:SS ±zzzz
    try:
        day = int(text[0:2])
        month = _MONTHS[text[3:6]]
        year = int(text[7:11])
        hour = int(text[12:14])
        minute = int(text[15:17])
        second = int(text[18:20])
        sign = text[21]
        off = int(text[22:24]) * 3600 + int(text[24:26]) * 60
        if text[2] != "/" or text[6] != "/" or text[11] != ":" or sign not in "+-":
            raise ValueError(text)
    except (ValueError, KeyError, IndexError):
        raise MalformedLine(position, f"bad timestamp {text!r}") from None
    if sign == "-":
        off = -off
    epoch_s = calendar.timegm((year, month, day, hour, minute, second, 0, 0, 0)) - off
    return epoch_s * 1_000_000


def _split_clf(line: str, position: int):
    """Tokenize one CLF/Combined line without regex backtracking surprises."""
    try:
        host, rest = line.split(" ", 1)
        ident, rest = rest.split(" ", 1)
        auth, rest = rest.split(" [", 1)
        ts, rest = rest.split("] ", 1)
        if not rest.startswith('"'):
            raise ValueError("request not quoted")
        req, rest = rest[1:].split('" ', 1)
        parts = rest.split(" ", 2)
        if len(parts) < 2:
            raise ValueError("missing status/bytes")
        status_s, bytes_s = parts[0], parts[1]
        trailer = parts[2] if len(parts) == 3 else ""
    except ValueError as e:
        raise MalformedLine(position, f"not CLF shaped: {e}") from None
    referer = user_agent = None
    if trailer:
        t = trailer.rstrip()
        # Combined adds:  "referer" "user-agent"
        if not (t.startswith('"') and t.endswith('"')):
            raise MalformedLine(position, "trailer is not quoted referer/user-agent")
        inner = t[1:-1]
        split = inner.split('" "')
        if len(split) != 2:
            raise MalformedLine(position, "expected exactly referer and user-agent")
        referer, user_agent = split
    return host, ident, auth, ts, req, status_s, bytes_s, referer, user_agent


def parse_apache_line(line: Union[bytes, str], position: int = 0) -> HttpRequestRecord:
    """One access log line (no trailing newline) → HttpRequestRecord.

    Accepts both Common and Combined Log Format; `-` fields map to
    absent. Raises MalformedLine when the grammar does not match.
    The record's event_id is a content hash, so parsing the same
    bytes always yields the identical record.
    """
    raw = line if isinstance(line, bytes) else line.encode("utf-8", "surrogateescape")
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        text = raw.decode("latin-1")
    text = text.strip()
    if not text:
        raise MalformedLine(position, "empty line")

    host, _ident, _auth, ts, req, status_s, bytes_s, referer, user_agent = _split_clf(text, position)
    timestamp = _parse_clf_time(ts, position)

    req_parts = req.split(" ")
    if len(req_parts) != 3:
        raise MalformedLine(position, f"bad request line {req!r}")
    method, target, _proto = req_parts
    if not method or any(c.isspace() for c in method):
        raise MalformedLine(position, "empty method")

    if target.startswith("/"):
        path, _, query = target.partition("?")
    elif target.startswith(("http://", "https://")):
        u = urlsplit(target)
        path, query = u.path or "/", u.query
    else:
        raise MalformedLine(position, f"unsupported request target {target!r}")

    if status_s == "-":
        status = None
    else:
        try:
            status = int(status_s)
        except ValueError:
            raise MalformedLine(position, f"bad status {status_s!r}") from None
        if not 100 <= status <= 599:
            raise MalformedLine(position, f"status {status} out of range")

    if bytes_s == "-":
        body_length = 0
    else:
        try:
            body_length = int(bytes_s)
        except ValueError:
            raise MalformedLine(position, f"bad byte count {bytes_s!r}") from None
        if body_length < 0:
            raise MalformedLine(position, "negative byte count")

    headers: list[tuple[str, str]] = []
    if referer is not None and referer != "-":
        headers.append(("Referer", referer))
    ua = None
    if user_agent is not None and user_agent != "-":
        ua = user_agent
        headers.append(("User-Agent", user_agent))

    return HttpRequestRecord(
        event_id=hashlib.blake2b(raw, digest_size=16).hexdigest(),
        timestamp=timestamp,
        client_ip=host,
        method=method,
        path=path,
        query=query,
        headers=tuple(headers),
        body_length=body_length,
        status=status,
        user_agent=ua,
    )


# --- JSONL parsing --------------------------------------------------------


def parse_jsonl_record(line: Union[bytes, str], position: int = 0) -> Union[HttpRequestRecord, PacketRecord]:
    """One JSONL line → HttpRequestRecord or PacketRecord.

    The object must carry a `kind` of "http" or "packet" and follow
    the canonical wire encoding. An http record without an event_id
    gets one derived from the line content, so hand-written files
    stay valid.
    """
    try:
        d = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise MalformedLine(position, f"invalid JSON: {e}") from None
    if not isinstance(d, dict):
        raise MalformedLine(position, "JSONL entry is not an object")
    kind = d.get("kind")
    if kind not in ("http", "packet"):
        raise UnknownKind(position, f"kind {kind!r} is not http/packet")
    if kind == "http" and "event_id" not in d:
        raw = line if isinstance(line, bytes) else line.encode("utf-8", "surrogateescape")
        d["event_id"] = hashlib.blake2b(raw, digest_size=16).hexdigest()
    try:
        return wire.from_dict(d)
    except wire.WireError as e:
        raise MalformedLine(position, str(e)) from None


# --- File iteration and replay -------------------------------------------


def _sniff_format(path: Path) -> str:
    """Return "jsonl" or "apache" from the first non-blank line."""
    try:
        with open(path, "rb") as f:
            for raw in f:
                s = raw.strip()
                if s:
                    return "jsonl" if s.startswith(b"{") else "apache"
    except OSError as e:
        raise SourceUnreadable(str(e)) from None
    return "apache"


def iter_records(
    path: Union[str, Path],
    fmt: str = "auto",
    on_error: Callable[[MalformedLine], None] | None = None,
) -> Iterator[Union[HttpRequestRecord, PacketRecord]]:
    """Yield parsed records from a log file, skipping malformed lines.

    `on_error` is invoked with each MalformedLine (for counting); by
    default errors are silently skipped.
    """
    p = Path(path)
    if fmt == "auto":
        fmt = _sniff_format(p)
    parse = parse_jsonl_record if fmt == "jsonl" else parse_apache_line
    try:
        with open(p, "rb") as f:
            for position, raw in enumerate(f, start=1):
                line = raw.rstrip(b"\r\n")
                try:
                    yield parse(line, position)
                except MalformedLine as e:
                    if on_error is not None:
                        on_error(e)
    except OSError as e:
        raise SourceUnreadable(str(e)) from None


def replay(plan: ReplayPlan, sink: Callable[[object], None], fmt: str = "auto") -> ReplayReport:
    """Feed a file's records into `sink`, honoring the plan's pacing.

    BATCH emits as fast as the sink accepts; STEADY paces emissions so
    the rate holds within ±5% over any 10 s window (deadline
    scheduling against a monotonic clock, so transient stalls are
    caught up rather than accumulated). Returns exact totals:
    parsed + skipped = lines.
    """
    p = Path(plan.source_path)
    if fmt == "auto":
        fmt = _sniff_format(p)
    parse = parse_jsonl_record if fmt == "jsonl" else parse_apache_line

    lines = parsed = skipped = 0
    start = time.monotonic()
    interval = 1.0 / plan.rate if plan.mode is ReplayMode.STEADY else 0.0

    for _ in range(plan.loop_count):
        try:
            f = open(p, "rb")
        except OSError as e:
            raise SourceUnreadable(str(e)) from None
        with f:
            for raw in f:
                lines += 1
                try:
                    rec = parse(raw.rstrip(b"\r\n"), lines)
                except MalformedLine:
                    skipped += 1
                    continue
                if interval:
                    deadline = start + parsed * interval
                    delay = deadline - time.monotonic()
                    if delay > 0:
                        time.sleep(delay)
                sink(rec)
                parsed += 1
    return ReplayReport(lines=lines, parsed=parsed, skipped=skipped, wall_time=time.monotonic() - start)
