"""HTTP request features: the 12-dimensional section, recomputed plainly.

Same contract as the main engine: iterative percent-decoding with
depth tracking (latin-1 byte view, `+` is a space in query context on
the first round only), structural statistics with fixed normalizers,
and three pattern flags driven by a ruleset file. Matching runs on
decoded, case-folded text.
"""

from __future__ import annotations

import re
from pathlib import Path
from typing import NamedTuple, Sequence, Union

HTTP_FEATURE_NAMES = (
    "url_length_norm",
    "param_count_norm",
    "header_count_norm",
    "header_complexity",
    "payload_length_norm",
    "special_char_ratio",
    "encoding_depth_norm",
    "method_rarity",
    "complexity_score",
    "sqli_flag",
    "xss_flag",
    "traversal_flag",
)

MAX_DECODE_ROUNDS = 3

_PLAIN_CHARS = frozenset("/.-_~")
_HEXDIGITS = frozenset("0123456789abcdefABCDEF")


class DecodeResult(NamedTuple):
    text: str
    rounds: int


def _percent_decode_once(s: str) -> str:
    if "%" not in s:
        return s
    out = []
    i, n = 0, len(s)
    while i < n:
        c = s[i]
        if c == "%" and i + 2 < n and s[i + 1] in _HEXDIGITS and s[i + 2] in _HEXDIGITS:
            out.append(chr(int(s[i + 1:i + 3], 16)))
            i += 3
        else:
            out.append(c)
            i += 1
    return "".join(out)


def normalize_decode(text: str, query_context: bool = False) -> DecodeResult:
    """Percent-decode up to MAX_DECODE_ROUNDS or until a fixed point.

    `rounds` counts the rounds that changed the text; invalid percent
    sequences pass through verbatim.
    """
    rounds = 0
    for i in range(MAX_DECODE_ROUNDS):
        nxt = text.replace("+", " ") if query_context and i == 0 else text
        nxt = _percent_decode_once(nxt)
        if nxt == text:
            break
        text = nxt
        rounds = i + 1
    return DecodeResult(text, rounds)


class Ruleset:
    """Ordered pattern rules parsed from `<flag> <literal|regex> <pattern>` lines."""

    FLAGS = ("sqli", "xss", "traversal")

    def __init__(self, raw: bytes, name: str = "rules"):
        self.raw = raw
        self.name = name
        self.rules: list[tuple[str, "re.Pattern[str] | None", str]] = []
        for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split(" ", 2)
            if len(parts) != 3 or parts[0] not in self.FLAGS or parts[1] not in ("literal", "regex"):
                raise ValueError(f"{name}:{lineno}: bad rule line {line!r}")
            flag, kind, pattern = parts
            compiled = re.compile(pattern) if kind == "regex" else None
            self.rules.append((flag, compiled, pattern))
        self._by_flag = {
            f: tuple((c, p) for fl, c, p in self.rules if fl == f) for f in self.FLAGS
        }

    def match_flags(self, text: str) -> dict[str, bool]:
        out = {}
        for flag, rules in self._by_flag.items():
            hit = False
            for compiled, pattern in rules:
                if compiled is not None:
                    hit = compiled.search(text) is not None
                else:
                    hit = pattern in text
                if hit:
                    break
            out[flag] = hit
        return out


def load_ruleset(path: Union[str, Path]) -> Ruleset:
    p = Path(path)
    return Ruleset(p.read_bytes(), name=p.name)


_COMMON_METHODS = frozenset(("GET", "POST", "HEAD"))
_UNCOMMON_METHODS = frozenset(("PUT", "DELETE", "OPTIONS"))


def _method_rarity(method: str) -> float:
    if method in _COMMON_METHODS:
        return 0.0
    if method in _UNCOMMON_METHODS:
        return 0.5
    return 1.0


def _special_char_ratio(decoded: str) -> float:
    if not decoded:
        return 0.0
    special = sum(1 for c in decoded if not c.isalnum() and c not in _PLAIN_CHARS)
    return special / len(decoded)


def extract_features(req, ruleset: Ruleset) -> list[float]:
    """The 12 features in schema order for one request record.

    `req` carries path, query, method, headers (name/value pairs),
    and body_length, exactly as the parser produces them.
    """
    dp, rounds_p = normalize_decode(req.path)
    dq, rounds_q = normalize_decode(req.query, query_context=True)
    rounds = max(rounds_p, rounds_q)

    match_text = dp + ("?" + dq if req.query else "")
    flags = ruleset.match_flags(match_text.casefold())

    n = len(req.path) + (1 + len(req.query) if req.query else 0)
    url_norm = min(n / 2048.0, 1.0)
    params = sum(1 for part in req.query.split("&") if part) if req.query else 0
    param_norm = min(params / 32.0, 1.0)
    header_count_norm = min(len(req.headers) / 40.0, 1.0)
    if req.headers:
        mean_len = sum(len(v) for _, v in req.headers) / len(req.headers)
    else:
        mean_len = 0.0
    header_cx = (header_count_norm + min(mean_len / 256.0, 1.0)) / 2.0
    payload_norm = min(req.body_length / 65536.0, 1.0)
    special = _special_char_ratio(dp + dq)
    cx = (0.3 * url_norm + 0.2 * param_norm + 0.2 * header_cx
          + 0.15 * payload_norm + 0.15 * special)

    return [
        url_norm,
        param_norm,
        header_count_norm,
        header_cx,
        payload_norm,
        special,
        rounds / MAX_DECODE_ROUNDS,
        _method_rarity(req.method),
        cx,
        1.0 if flags["sqli"] else 0.0,
        1.0 if flags["xss"] else 0.0,
        1.0 if flags["traversal"] else 0.0,
    ]
