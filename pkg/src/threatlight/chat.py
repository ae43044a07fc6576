"""Dashboard assistant: upstream chat proxy with an offline fallback.

When a chat endpoint is configured, questions are forwarded to it
(OpenAI-style streaming chat completion) and the reply is re-streamed
to the client. Without one, or when the upstream fails, answers come
from a local markdown knowledge base by keyword lookup and are marked
`offline: true`.

The response body is newline-delimited JSON, one object per line:

    {"kind": "meta", "offline": bool, "source": "upstream"|"knowledge_base", ...}
    {"kind": "chunk", "text": "..."}          (repeated)
    {"kind": "done"}
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass
from importlib import resources
from pathlib import Path
from typing import AsyncIterator, Iterator, Optional, Union

import httpx

from .config import ChatConfig

__all__ = [
    "KnowledgeBase",
    "KbEntry",
    "load_default_knowledge_base",
    "load_knowledge_base",
    "offline_stream",
    "upstream_stream",
    "UpstreamChatError",
    "MAX_MESSAGE_BYTES",
]

MAX_MESSAGE_BYTES = 4096
_WORD = re.compile(r"[a-z0-9]+")


class UpstreamChatError(RuntimeError):
    """The configured chat endpoint could not serve the request."""


@dataclass(frozen=True)
class KbEntry:
    title: str
    keywords: frozenset[str]
    body: str


class KnowledgeBase:
    """Markdown Q&A entries: `## Title`, a `keywords:` line, then the answer."""

    def __init__(self, entries: list[KbEntry], default: Optional[KbEntry] = None):
        self.entries = entries
        self.default = default or (entries[0] if entries else None)

    @classmethod
    def parse(cls, text: str) -> "KnowledgeBase":
        entries: list[KbEntry] = []
        title = None
        keywords: frozenset[str] = frozenset()
        body: list[str] = []

        def finish():
            if title is not None and (keywords or body):
                entries.append(KbEntry(title, keywords, "\n".join(body).strip()))

        for line in text.splitlines():
            if line.startswith("## "):
                finish()
                title = line[3:].strip()
                keywords = frozenset()
                body = []
            elif title is not None and line.lower().startswith("keywords:"):
                keywords = frozenset(
                    w.strip().casefold() for w in line.split(":", 1)[1].split(",") if w.strip()
                )
            elif title is not None:
                body.append(line)
        finish()
        return cls(entries)

    def lookup(self, message: str) -> tuple[Optional[KbEntry], int]:
        """Best entry by keyword-token overlap; (default, 0) when nothing matches."""
        tokens = set(_WORD.findall(message.casefold()))
        best, best_hits = None, 0
        for e in self.entries:
            hits = len(e.keywords & tokens)
            if hits > best_hits:
                best, best_hits = e, hits
        if best is None:
            return self.default, 0
        return best, best_hits


def load_knowledge_base(path: Union[str, Path]) -> KnowledgeBase:
    return KnowledgeBase.parse(Path(path).read_text(encoding="utf-8"))


_default_kb: Optional[KnowledgeBase] = None


def load_default_knowledge_base() -> KnowledgeBase:
    global _default_kb
    if _default_kb is None:
        text = resources.files("threatlight.data").joinpath("knowledge_base.md").read_text("utf-8")
        _default_kb = KnowledgeBase.parse(text)
    return _default_kb


def _ndjson(obj: dict) -> str:
    return json.dumps(obj, separators=(",", ":"), ensure_ascii=False) + "\n"


def offline_stream(kb: KnowledgeBase, message: str, note: Optional[str] = None) -> Iterator[str]:
    """Stream a knowledge-base answer as ndjson lines."""
    entry, hits = kb.lookup(message)
    meta = {
        "kind": "meta",
        "offline": True,
        "source": "knowledge_base",
        "entry": entry.title if entry else None,
        "matched_keywords": hits,
    }
    if note:
        meta["note"] = note
    yield _ndjson(meta)
    text = entry.body if entry else "No knowledge-base entries are installed."
    for para in text.split("\n\n"):
        chunk = para.strip()
        if chunk:
            yield _ndjson({"kind": "chunk", "text": chunk + "\n"})
    yield _ndjson({"kind": "done"})


async def upstream_stream(cfg: ChatConfig, message: str) -> AsyncIterator[str]:
    """Proxy one question to the configured endpoint, re-chunked as ndjson.

    Raises UpstreamChatError if the endpoint cannot be reached or
    answers with an error status; the caller is expected to fall back
    to offline_stream with a 502.
    """
    if not cfg.configured:
        raise UpstreamChatError("no chat endpoint configured")
    headers = {"content-type": "application/json"}
    api_key = os.environ.get(cfg.api_key_env, "")
    if api_key:
        headers["authorization"] = f"Bearer {api_key}"
    payload = {
        "model": cfg.model,
        "messages": [{"role": "user", "content": message}],
        "stream": True,
    }

    client = httpx.AsyncClient(timeout=httpx.Timeout(10.0, read=60.0))
    try:
        try:
            request = client.build_request("POST", cfg.endpoint_url, json=payload, headers=headers)
            response = await client.send(request, stream=True)
        except httpx.HTTPError as e:
            raise UpstreamChatError(f"chat endpoint unreachable: {e}") from None
        if response.status_code != 200:
            await response.aclose()
            raise UpstreamChatError(f"chat endpoint returned {response.status_code}")

        yield _ndjson({"kind": "meta", "offline": False, "source": "upstream", "model": cfg.model})
        try:
            async for line in response.aiter_lines():
                line = line.strip()
                if not line.startswith("data:"):
                    continue
                data = line[5:].strip()
                if data == "[DONE]":
                    break
                try:
                    obj = json.loads(data)
                    delta = obj["choices"][0].get("delta", {})
                    text = delta.get("content")
                except (json.JSONDecodeError, LookupError, TypeError):
                    continue
                if text:
                    yield _ndjson({"kind": "chunk", "text": text})
            yield _ndjson({"kind": "done"})
        except httpx.HTTPError:
            # headers already sent; close the stream marked truncated
            yield _ndjson({"kind": "done", "truncated": True})
        finally:
            await response.aclose()
    finally:
        await client.aclose()
