"""HTTP feature extraction: the 12-dimensional request feature section.

Covers structural statistics (lengths, counts, special-character
ratio), iterative percent-decoding with depth tracking, and the three
attack-pattern flags (SQL injection, XSS, path traversal) driven by a
versioned ruleset file.

Matching always runs on decoded, case-folded text. Decoding maps each
%XX byte to the matching U+00XX character (latin-1 view), so no byte
information is lost between rounds and ASCII patterns see exactly the
bytes an attacker smuggled.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import NamedTuple, Sequence, Union

from .types import HttpRequestRecord

__all__ = [
    "HTTP_FEATURE_NAMES",
    "MAX_DECODE_ROUNDS",
    "DecodeResult",
    "Rule",
    "Ruleset",
    "load_default_ruleset",
    "normalize_decode",
    "complexity_score",
    "extract_http_features",
]

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
BODY_EXCERPT_BYTES = 4096

# Characters never counted by special_char_ratio: path structure and
# RFC 3986 unreserved punctuation. Everything else non-alphanumeric counts.
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
            out.append(chr(int(s[i + 1 : i + 3], 16)))
            i += 3
        else:
            # invalid sequence (or bare %): kept verbatim
            out.append(c)
            i += 1
    return "".join(out)


def normalize_decode(text: str, query_context: bool = False) -> DecodeResult:
    """Iteratively percent-decode up to MAX_DECODE_ROUNDS or a fixed point.

    In query context, `+` becomes a space during the first round only
    (the form-encoding layer is applied exactly once; a `+` surfaced by
    decoding %2B is a literal plus). Invalid percent sequences pass
    through verbatim. `rounds` counts the rounds that changed the text,
    which feeds encoding_depth_norm = rounds / MAX_DECODE_ROUNDS.
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


# --- Ruleset --------------------------------------------------------------


@dataclass(frozen=True)
class Rule:
    flag: str  # "sqli" | "xss" | "traversal"
    kind: str  # "literal" | "regex"
    pattern: str
    compiled: "re.Pattern[str] | None"

    def matches(self, text: str) -> bool:
        if self.compiled is not None:
            return self.compiled.search(text) is not None
        return self.pattern in text


class Ruleset:
    """Ordered attack-pattern rules plus the exact file bytes they came from.

    The raw bytes participate in the feature-schema hash, so a model is
    pinned to the precise ruleset revision it was trained against.
    """

    FLAGS = ("sqli", "xss", "traversal")

    def __init__(self, raw: bytes, name: str = "rules"):
        self.raw = raw
        self.name = name
        self.rules: list[Rule] = []
        for lineno, line in enumerate(raw.decode("utf-8").splitlines(), start=1):
            stripped = line.strip()
            if not stripped or stripped.startswith("#"):
                continue
            parts = stripped.split(" ", 2)
            if len(parts) != 3 or parts[0] not in self.FLAGS or parts[1] not in ("literal", "regex"):
                raise ValueError(f"{name}:{lineno}: bad rule line {line!r}")
            flag, kind, pattern = parts
            compiled = re.compile(pattern) if kind == "regex" else None
            self.rules.append(Rule(flag, kind, pattern, compiled))
        self._by_flag = {f: tuple(r for r in self.rules if r.flag == f) for f in self.FLAGS}

    def match_flags(self, text: str) -> dict[str, bool]:
        """Evaluate all three flags against decoded, case-folded text."""
        return {f: any(r.matches(text) for r in rules) for f, rules in self._by_flag.items()}

    def detect(self, flag: str, text: str) -> bool:
        return any(r.matches(text) for r in self._by_flag[flag])


_default_ruleset: Ruleset | None = None


def load_default_ruleset() -> Ruleset:
    """The packaged v1 ruleset (cached)."""
    global _default_ruleset
    if _default_ruleset is None:
        raw = resources.files("threatlight.data").joinpath("rules_v1.txt").read_bytes()
        _default_ruleset = Ruleset(raw, name="rules_v1.txt")
    return _default_ruleset


def load_ruleset(path: Union[str, Path]) -> Ruleset:
    p = Path(path)
    return Ruleset(p.read_bytes(), name=p.name)


def detect_sqli(decoded: str, ruleset: Ruleset | None = None) -> bool:
    """True iff any SQL injection rule matches the decoded, case-folded text."""
    return (ruleset or load_default_ruleset()).detect("sqli", decoded)


def detect_xss(decoded: str, ruleset: Ruleset | None = None) -> bool:
    return (ruleset or load_default_ruleset()).detect("xss", decoded)


def detect_traversal(decoded: str, ruleset: Ruleset | None = None) -> bool:
    return (ruleset or load_default_ruleset()).detect("traversal", decoded)


# --- Structural statistics -------------------------------------------------


def _url_length_norm(req: HttpRequestRecord) -> float:
    n = len(req.path) + (1 + len(req.query) if req.query else 0)
    return min(n / 2048.0, 1.0)


def _param_count(query: str) -> int:
    if not query:
        return 0
    return sum(1 for part in query.split("&") if part)


def _header_stats(headers: Sequence[tuple[str, str]]) -> tuple[float, float]:
    count_norm = min(len(headers) / 40.0, 1.0)
    if headers:
        mean_len = sum(len(v) for _, v in headers) / len(headers)
    else:
        mean_len = 0.0
    complexity = (count_norm + min(mean_len / 256.0, 1.0)) / 2.0
    return count_norm, complexity


def _special_char_ratio(decoded_path_query: str) -> float:
    if not decoded_path_query:
        return 0.0
    special = sum(1 for c in decoded_path_query if not c.isalnum() and c not in _PLAIN_CHARS)
    return special / len(decoded_path_query)


_COMMON_METHODS = frozenset(("GET", "POST", "HEAD"))
_UNCOMMON_METHODS = frozenset(("PUT", "DELETE", "OPTIONS"))


def _method_rarity(method: str) -> float:
    if method in _COMMON_METHODS:
        return 0.0
    if method in _UNCOMMON_METHODS:
        return 0.5
    return 1.0


def complexity_score(
    url_length_norm: float,
    param_count_norm: float,
    header_complexity: float,
    payload_length_norm: float,
    special_char_ratio: float,
) -> float:
    """Weighted structural complexity; weights sum to 1 so the score stays in [0,1]."""
    return (
        0.3 * url_length_norm
        + 0.2 * param_count_norm
        + 0.2 * header_complexity
        + 0.15 * payload_length_norm
        + 0.15 * special_char_ratio
    )


def request_complexity(req: HttpRequestRecord) -> float:
    """complexity_score evaluated on a record's own structural statistics."""
    dp = normalize_decode(req.path).text
    dq = normalize_decode(req.query, query_context=True).text
    _, header_cx = _header_stats(req.headers)
    return complexity_score(
        _url_length_norm(req),
        min(_param_count(req.query) / 32.0, 1.0),
        header_cx,
        min(req.body_length / 65536.0, 1.0),
        _special_char_ratio(dp + dq),
    )


def extract_http_features(
    req: HttpRequestRecord,
    body: Union[bytes, str, None] = None,
    ruleset: Ruleset | None = None,
) -> list[float]:
    """Compose the 12 HTTP features in schema order.

    `body` is optional request payload text used only by the pattern
    flags (first 4 KiB, decoded like a query). Length statistics come
    from the record's body_length field, so the vector is stable
    whether or not payload bytes are available.
    """
    rs = ruleset or load_default_ruleset()

    dp, rounds_p = normalize_decode(req.path)
    dq, rounds_q = normalize_decode(req.query, query_context=True)
    rounds = max(rounds_p, rounds_q)

    match_text = dp + ("?" + dq if req.query else "")
    if body:
        if isinstance(body, bytes):
            excerpt = body[:BODY_EXCERPT_BYTES].decode("latin-1")
        else:
            excerpt = body[:BODY_EXCERPT_BYTES]
        match_text += " " + normalize_decode(excerpt, query_context=True).text
    flags = rs.match_flags(match_text.casefold())

    url_norm = _url_length_norm(req)
    param_norm = min(_param_count(req.query) / 32.0, 1.0)
    header_count_norm, header_cx = _header_stats(req.headers)
    payload_norm = min(req.body_length / 65536.0, 1.0)
    special = _special_char_ratio(dp + dq)

    return [
        url_norm,
        param_norm,
        header_count_norm,
        header_cx,
        payload_norm,
        special,
        rounds / MAX_DECODE_ROUNDS,
        _method_rarity(req.method),
        complexity_score(url_norm, param_norm, header_cx, payload_norm, special),
        1.0 if flags["sqli"] else 0.0,
        1.0 if flags["xss"] else 0.0,
        1.0 if flags["traversal"] else 0.0,
    ]
