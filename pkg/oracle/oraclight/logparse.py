"""Input parsing: Apache access-log lines and JSONL event records.

Grammar and normalization follow the shared wire contract: CLF and
Combined formats with timezone offsets folded into UTC microseconds,
`-` fields absent, the event id a content hash of the raw line bytes.
JSONL lines carry a `kind` of "http" or "packet" in the canonical
field layout.
"""

from __future__ import annotations

import calendar
import hashlib
import json
from dataclasses import dataclass
from urllib.parse import urlsplit

_PROTOCOLS = ("TCP", "UDP", "OTHER")
_TCP_FLAGS = frozenset(("FIN", "SYN", "RST", "PSH", "ACK", "URG", "ECE", "CWR"))


class MalformedLine(ValueError):
    """Line does not match the expected grammar."""


@dataclass(frozen=True, slots=True)
class HttpRecord:
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
    timestamp: int
    src_ip: str
    src_port: int
    dst_ip: str
    dst_port: int
    protocol: str
    length_bytes: int
    tcp_flags: frozenset[str] = frozenset()


_MONTHS = {
    "Jan": 1, "Feb": 2, "Mar": 3, "Apr": 4, "May": 5, "Jun": 6,
    "Jul": 7, "Aug": 8, "Sep": 9, "Oct": 10, "Nov": 11, "Dec": 12,
}


def _parse_clf_time(text: str) -> int:
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
        raise MalformedLine(f"bad timestamp {text!r}") from None
    if sign == "-":
        off = -off
    epoch_s = calendar.timegm((year, month, day, hour, minute, second, 0, 0, 0)) - off
    return epoch_s * 1_000_000


def _split_clf(line: str):
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
        raise MalformedLine(f"not CLF shaped: {e}") from None
    referer = user_agent = None
    if trailer:
        t = trailer.rstrip()
        if not (t.startswith('"') and t.endswith('"')):
            raise MalformedLine("trailer is not quoted referer/user-agent")
        inner = t[1:-1]
        split = inner.split('" "')
        if len(split) != 2:
            raise MalformedLine("expected exactly referer and user-agent")
        referer, user_agent = split
    return host, ident, auth, ts, req, status_s, bytes_s, referer, user_agent


def parse_access_line(line) -> HttpRecord:
    """One access-log line (Common or Combined format) → HttpRecord."""
    raw = line if isinstance(line, bytes) else line.encode("utf-8", "surrogateescape")
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError:
        text = raw.decode("latin-1")
    text = text.strip()
    if not text:
        raise MalformedLine("empty line")

    host, _ident, _auth, ts, req, status_s, bytes_s, referer, user_agent = _split_clf(text)
    timestamp = _parse_clf_time(ts)

    req_parts = req.split(" ")
    if len(req_parts) != 3:
        raise MalformedLine(f"bad request line {req!r}")
    method, target, _proto = req_parts
    if not method or any(c.isspace() for c in method):
        raise MalformedLine("empty method")

    if target.startswith("/"):
        path, _, query = target.partition("?")
    elif target.startswith(("http://", "https://")):
        u = urlsplit(target)
        path, query = u.path or "/", u.query
    else:
        raise MalformedLine(f"unsupported request target {target!r}")

    if status_s == "-":
        status = None
    else:
        try:
            status = int(status_s)
        except ValueError:
            raise MalformedLine(f"bad status {status_s!r}") from None
        if not 100 <= status <= 599:
            raise MalformedLine(f"status {status} out of range")

    if bytes_s == "-":
        body_length = 0
    else:
        try:
            body_length = int(bytes_s)
        except ValueError:
            raise MalformedLine(f"bad byte count {bytes_s!r}") from None
        if body_length < 0:
            raise MalformedLine("negative byte count")

    headers: list[tuple[str, str]] = []
    if referer is not None and referer != "-":
        headers.append(("Referer", referer))
    ua = None
    if user_agent is not None and user_agent != "-":
        ua = user_agent
        headers.append(("User-Agent", user_agent))

    return HttpRecord(
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


def parse_json_record(line):
    """One JSONL line → HttpRecord or PacketRecord."""
    try:
        d = json.loads(line)
    except (json.JSONDecodeError, UnicodeDecodeError) as e:
        raise MalformedLine(f"invalid JSON: {e}") from None
    if not isinstance(d, dict):
        raise MalformedLine("JSONL entry is not an object")
    kind = d.get("kind")
    try:
        if kind == "http":
            if "event_id" not in d:
                raw = line if isinstance(line, bytes) else line.encode("utf-8", "surrogateescape")
                d["event_id"] = hashlib.blake2b(raw, digest_size=16).hexdigest()
            return HttpRecord(
                event_id=str(d["event_id"]),
                timestamp=int(d["timestamp"]),
                client_ip=str(d["client_ip"]),
                method=str(d["method"]),
                path=str(d["path"]),
                query=str(d["query"]),
                headers=tuple((str(n), str(v)) for n, v in d["headers"]),
                body_length=int(d["body_length"]),
                status=None if d.get("status") is None else int(d["status"]),
                user_agent=None if d.get("user_agent") is None else str(d["user_agent"]),
            )
        if kind == "packet":
            protocol = str(d["protocol"])
            if protocol not in _PROTOCOLS:
                raise MalformedLine(f"unknown protocol {protocol!r}")
            flags = frozenset(str(f) for f in d["tcp_flags"])
            if not flags <= _TCP_FLAGS:
                raise MalformedLine(f"unknown tcp flags {sorted(flags - _TCP_FLAGS)}")
            return PacketRecord(
                timestamp=int(d["timestamp"]),
                src_ip=str(d["src_ip"]),
                src_port=int(d["src_port"]),
                dst_ip=str(d["dst_ip"]),
                dst_port=int(d["dst_port"]),
                protocol=protocol,
                length_bytes=int(d["length_bytes"]),
                tcp_flags=flags,
            )
    except (KeyError, TypeError, ValueError) as e:
        if isinstance(e, MalformedLine):
            raise
        raise MalformedLine(f"bad {kind} record: {e}") from None
    raise MalformedLine(f"kind {kind!r} is not http/packet")


def parse_line(line: str):
    """Dispatch on shape: JSON object lines vs access-log lines."""
    if line.startswith("{"):
        return parse_json_record(line)
    return parse_access_line(line)
