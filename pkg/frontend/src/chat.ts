/** Chat panel transport: POST /api/chat and fold the ndjson reply
into the transcript as it streams.
*/

import {
  canSend,
  chatBegin,
  chatChunk,
  chatError,
  chatMeta,
  type UiState,
} from "./state.js";
import type { ChatLine } from "./types.js";
import type { FetchFn } from "./stream.js";

export interface ChatOutcome {
  ok: boolean;
  /** True when the service answered 502 with its canned fallback. */
  fallback: boolean;
}

export async function sendChat(
  baseUrl: string,
  state: UiState,
  message: string,
  onChange: () => void,
  fetchFn: FetchFn = fetch,
): Promise<ChatOutcome> {
  if (!canSend(message)) return { ok: false, fallback: false };
  chatBegin(state, message);
  onChange();

  let res: Response;
  try {
    res = await fetchFn(`${baseUrl}/api/chat`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ message }),
    });
  } catch {
    chatError(state, "assistant unreachable");
    onChange();
    return { ok: false, fallback: false };
  }

  if (!res.ok && res.status !== 502) {
    let detail = `request failed (${res.status})`;
    try {
      const body = await res.json();
      if (typeof body?.error === "string") detail = body.error;
    } catch {
      // keep the status-code message
    }
    chatError(state, detail);
    onChange();
    return { ok: false, fallback: false };
  }

  // 502 still carries a complete fallback reply; render it, then flag it
  if (res.body !== null) {
    await consumeNdjson(res.body, (line) => {
      if (line.kind === "meta") chatMeta(state, line);
      else if (line.kind === "chunk") chatChunk(state, line.text);
      onChange();
    });
  }
  if (res.status === 502) {
    chatError(state, "assistant unreachable, showing the offline answer");
    onChange();
    return { ok: false, fallback: true };
  }
  return { ok: true, fallback: false };
}

async function consumeNdjson(
  body: ReadableStream<Uint8Array>,
  onLine: (line: ChatLine) => void,
): Promise<void> {
  const reader = body.getReader();
  const decoder = new TextDecoder();
  let buffer = "";
  const drain = (text: string) => {
    buffer += text;
    let nl: number;
    while ((nl = buffer.indexOf("\n")) >= 0) {
      const raw = buffer.slice(0, nl).trim();
      buffer = buffer.slice(nl + 1);
      if (raw === "") continue;
      try {
        onLine(JSON.parse(raw) as ChatLine);
      } catch {
        // skip malformed lines
      }
    }
  };
  for (;;) {
    const { done, value } = await reader.read();
    if (done) break;
    drain(decoder.decode(value, { stream: true }));
  }
  drain(decoder.decode());
  if (buffer.trim() !== "") {
    try {
      onLine(JSON.parse(buffer.trim()) as ChatLine);
    } catch {
      // ignore a torn trailing line
    }
  }
}
