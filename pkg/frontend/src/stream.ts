/** Stream consumer: one /api/stream connection feeding the UI state.

Reconnects after drops with exponential backoff (1 s doubling to a
30 s cap), resetting once the server greets the new connection.
*/

import { Backoff } from "./backoff.js";
import { SseParser, type SseFrame } from "./sse.js";
import {
  applyMetrics,
  applyStatus,
  applyThreat,
  applyVerdict,
  seedVerdicts,
  setConnection,
  type UiState,
} from "./state.js";
import type { MetricsPayload, ThreatPayload, VerdictPayload } from "./types.js";

export type FetchFn = typeof fetch;
export type DelayFn = (ms: number) => Promise<void>;

const realDelay: DelayFn = (ms) => new Promise((r) => setTimeout(r, ms));

export interface StreamOptions {
  fetchFn?: FetchFn;
  delayFn?: DelayFn;
}

export class StreamConsumer {
  private readonly baseUrl: string;
  private readonly state: UiState;
  private readonly onChange: () => void;
  private readonly fetchFn: FetchFn;
  private readonly delayFn: DelayFn;
  private readonly backoff = new Backoff();
  private controller: AbortController | null = null;
  private stopped = false;
  private greeted = false;

  constructor(
    baseUrl: string,
    state: UiState,
    onChange: () => void,
    opts: StreamOptions = {},
  ) {
    this.baseUrl = baseUrl;
    this.state = state;
    this.onChange = onChange;
    this.fetchFn = opts.fetchFn ?? fetch;
    this.delayFn = opts.delayFn ?? realDelay;
  }

  start(): void {
    this.stopped = false;
    void this.run();
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
  }

  private async run(): Promise<void> {
    while (!this.stopped) {
      try {
        await this.consumeOnce();
      } catch {
        // dropped or refused; fall through to the retry delay
      }
      if (this.stopped) break;
      setConnection(this.state, "reconnecting");
      this.onChange();
      await this.delayFn(this.backoff.next());
    }
  }

  private async consumeOnce(): Promise<void> {
    this.greeted = false;
    const controller = new AbortController();
    this.controller = controller;
    const res = await this.fetchFn(`${this.baseUrl}/api/stream`, {
      signal: controller.signal,
      headers: { accept: "text/event-stream" },
    });
    if (!res.ok || res.body === null) {
      throw new Error(`stream rejected: ${res.status}`);
    }
    const reader = res.body.getReader();
    const decoder = new TextDecoder();
    const parser = new SseParser();
    for (;;) {
      const { done, value } = await reader.read();
      if (done) break;
      for (const frame of parser.feed(decoder.decode(value, { stream: true }))) {
        this.dispatch(frame);
      }
    }
  }

  private dispatch(frame: SseFrame): void {
    if (!this.greeted) {
      // any frame proves the connection is healthy
      this.greeted = true;
      this.backoff.reset();
      setConnection(this.state, "live");
      this.onChange();
    }
    if (frame.event === null || frame.data === null) return;
    let payload: unknown;
    try {
      payload = JSON.parse(frame.data);
    } catch {
      return;
    }
    if (frame.event === "verdict") applyVerdict(this.state, payload as VerdictPayload);
    else if (frame.event === "threat") applyThreat(this.state, payload as ThreatPayload);
    else if (frame.event === "metrics") applyMetrics(this.state, payload as MetricsPayload);
    else return;
    this.onChange();
  }
}

/** One-shot fill of status, recent events, and counters on page load. */
export async function loadSnapshot(
  baseUrl: string,
  state: UiState,
  fetchFn: FetchFn = fetch,
): Promise<void> {
  const grab = async (path: string) => {
    const res = await fetchFn(`${baseUrl}${path}`);
    if (!res.ok) throw new Error(`${path}: ${res.status}`);
    return res.json();
  };
  const [status, events, metrics] = await Promise.allSettled([
    grab("/api/status"),
    grab("/api/events?limit=500"),
    grab("/api/metrics"),
  ]);
  if (status.status === "fulfilled") applyStatus(state, status.value);
  if (events.status === "fulfilled") seedVerdicts(state, events.value);
  if (metrics.status === "fulfilled") applyMetrics(state, metrics.value);
}
