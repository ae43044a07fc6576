"""Knowledge-base assistant and the upstream chat proxy."""

import asyncio
import json
import socket
import threading
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import pytest

from threatlight.chat import (
    MAX_MESSAGE_BYTES,
    KnowledgeBase,
    UpstreamChatError,
    load_default_knowledge_base,
    offline_stream,
    upstream_stream,
)
from threatlight.config import ChatConfig

KB_TEXT = """\
Intro text before the first entry is ignored.

## Resetting alerts
keywords: reset, alerts, Clear
Open the dashboard and press the reset control.

A second paragraph with more detail.

## Firewall basics
keywords: firewall, block, ports
Deny by default, then allow the services you actually run.
"""


def collect(agen):
    async def run():
        out = []
        async for item in agen:
            out.append(item)
        return out

    return asyncio.run(run())


class TestKnowledgeBase:
    def test_parse_entries(self):
        kb = KnowledgeBase.parse(KB_TEXT)
        assert [e.title for e in kb.entries] == ["Resetting alerts", "Firewall basics"]
        first = kb.entries[0]
        assert first.keywords == frozenset({"reset", "alerts", "clear"})
        assert first.body.startswith("Open the dashboard")
        assert first.body.endswith("more detail.")
        assert kb.default is first

    def test_lookup_picks_best_overlap(self):
        kb = KnowledgeBase.parse(KB_TEXT)
        entry, hits = kb.lookup("How do I RESET the Alerts panel?")
        assert entry.title == "Resetting alerts"
        assert hits == 2
        entry, hits = kb.lookup("which ports does the firewall block?")
        assert entry.title == "Firewall basics"
        assert hits == 3

    def test_lookup_falls_back_to_default(self):
        kb = KnowledgeBase.parse(KB_TEXT)
        entry, hits = kb.lookup("completely unrelated question")
        assert entry is kb.default
        assert hits == 0

    def test_empty_text_has_no_entries(self):
        kb = KnowledgeBase.parse("just prose, no headings")
        assert kb.entries == []
        assert kb.lookup("anything") == (None, 0)

    def test_default_knowledge_base_loads_and_caches(self):
        kb = load_default_knowledge_base()
        assert kb is load_default_knowledge_base()
        entry, hits = kb.lookup("how should I handle a leaked password?")
        assert entry.title == "Password hygiene"
        assert hits >= 1

    def test_message_cap_is_4k(self):
        assert MAX_MESSAGE_BYTES == 4096


class TestOfflineStream:
    def test_ndjson_shape(self):
        kb = KnowledgeBase.parse(KB_TEXT)
        lines = list(offline_stream(kb, "reset the alerts"))
        objs = [json.loads(line) for line in lines]
        assert all(line.endswith("\n") for line in lines)
        assert objs[0] == {
            "kind": "meta",
            "offline": True,
            "source": "knowledge_base",
            "entry": "Resetting alerts",
            "matched_keywords": 2,
        }
        chunks = [o for o in objs if o["kind"] == "chunk"]
        assert len(chunks) == 2  # one per paragraph
        assert chunks[0]["text"].startswith("Open the dashboard")
        assert objs[-1] == {"kind": "done"}

    def test_note_is_carried_in_meta(self):
        kb = KnowledgeBase.parse(KB_TEXT)
        first = next(iter(offline_stream(kb, "firewall", note="upstream failed")))
        assert json.loads(first)["note"] == "upstream failed"

    def test_empty_base_still_answers(self):
        kb = KnowledgeBase.parse("")
        objs = [json.loads(line) for line in offline_stream(kb, "hello")]
        assert objs[0]["entry"] is None
        assert any("No knowledge-base entries" in o.get("text", "") for o in objs)
        assert objs[-1] == {"kind": "done"}


SSE_BODY = "\n".join(
    [
        ": keepalive comment",
        "",
        'data: {"choices":[{"delta":{"content":"Hel"}}]}',
        "",
        'data: {"choices":[{"delta":{"content":"lo"}}]}',
        "",
        "data: not-json at all",
        "",
        'data: {"choices":[{"delta":{}}]}',
        "",
        "data: [DONE]",
        "",
        'data: {"choices":[{"delta":{"content":"after done, never seen"}}]}',
    ]
)


@pytest.fixture()
def chat_server():
    captured = {}

    class Handler(BaseHTTPRequestHandler):
        status = 200

        def do_POST(self):
            n = int(self.headers.get("content-length", 0))
            captured["payload"] = json.loads(self.rfile.read(n)) if n else None
            captured["auth"] = self.headers.get("authorization")
            body = SSE_BODY.encode("utf-8")
            self.send_response(type(self).status)
            self.send_header("content-type", "text/event-stream")
            self.send_header("content-length", str(len(body)))
            self.end_headers()
            self.wfile.write(body)

        def log_message(self, *args):
            pass

    srv = ThreadingHTTPServer(("127.0.0.1", 0), Handler)
    threading.Thread(target=srv.serve_forever, daemon=True).start()
    url = f"http://127.0.0.1:{srv.server_port}/v1/chat/completions"
    try:
        yield url, captured, Handler
    finally:
        srv.shutdown()


class TestUpstreamStream:
    def test_unconfigured_raises(self):
        with pytest.raises(UpstreamChatError):
            collect(upstream_stream(ChatConfig(), "hi"))

    def test_unreachable_endpoint_raises(self):
        sock = socket.socket()
        sock.bind(("127.0.0.1", 0))
        port = sock.getsockname()[1]
        sock.close()
        cfg = ChatConfig(endpoint_url=f"http://127.0.0.1:{port}/v1", model="m")
        with pytest.raises(UpstreamChatError, match="unreachable"):
            collect(upstream_stream(cfg, "hi"))

    def test_error_status_raises(self, chat_server):
        url, _, handler = chat_server
        handler.status = 503
        cfg = ChatConfig(endpoint_url=url, model="m")
        with pytest.raises(UpstreamChatError, match="503"):
            collect(upstream_stream(cfg, "hi"))

    def test_stream_rechunked_as_ndjson(self, chat_server, monkeypatch):
        url, captured, _ = chat_server
        monkeypatch.setenv("CHAT_KEY_FOR_TEST", "sekrit")
        cfg = ChatConfig(endpoint_url=url, model="helper-1", api_key_env="CHAT_KEY_FOR_TEST")
        objs = [json.loads(line) for line in collect(upstream_stream(cfg, "what is up"))]
        assert objs[0] == {"kind": "meta", "offline": False, "source": "upstream", "model": "helper-1"}
        assert [o["text"] for o in objs if o["kind"] == "chunk"] == ["Hel", "lo"]
        assert objs[-1] == {"kind": "done"}
        # the upstream got an OpenAI-style streaming request with our key
        assert captured["payload"]["model"] == "helper-1"
        assert captured["payload"]["stream"] is True
        assert captured["payload"]["messages"] == [{"role": "user", "content": "what is up"}]
        assert captured["auth"] == "Bearer sekrit"

    def test_no_key_sends_no_auth_header(self, chat_server, monkeypatch):
        url, captured, _ = chat_server
        monkeypatch.delenv("ABSENT_CHAT_KEY", raising=False)
        cfg = ChatConfig(endpoint_url=url, model="m", api_key_env="ABSENT_CHAT_KEY")
        collect(upstream_stream(cfg, "hi"))
        assert captured["auth"] is None
