import { afterEach, beforeEach, describe, expect, it } from "vitest";

import { Backoff, BACKOFF_CAP_MS } from "../src/backoff.js";
import { SseParser } from "../src/sse.js";
import { initialState, renderTrafficLight, type UiState } from "../src/state.js";
import { loadSnapshot, StreamConsumer } from "../src/stream.js";
import type { Band } from "../src/types.js";
import {
  makeThreat,
  makeVerdict,
  startMockServer,
  until,
  type MockServer,
} from "./mock_server.js";

describe("backoff", () => {
  it("doubles from 1 s and caps at 30 s", () => {
    const b = new Backoff();
    const seq = Array.from({ length: 7 }, () => b.next());
    expect(seq).toEqual([1000, 2000, 4000, 8000, 16000, 30000, 30000]);
    b.reset();
    expect(b.next()).toBe(1000);
  });
});

describe("sse parser", () => {
  it("reassembles frames split across chunks", () => {
    const p = new SseParser();
    expect(p.feed(": connected\n\nevent: threat\nda")).toEqual([
      { event: null, data: null, comment: "connected" },
    ]);
    const frames = p.feed('ta: {"x":1}\n\n');
    expect(frames).toEqual([{ event: "threat", data: '{"x":1}', comment: null }]);
  });

  it("handles heartbeats and multi-line data", () => {
    const p = new SseParser();
    const frames = p.feed(": hb\n\nevent: metrics\ndata: a\ndata: b\n\n");
    expect(frames).toHaveLength(2);
    expect(frames[0].comment).toBe("hb");
    expect(frames[1].data).toBe("a\nb");
  });
});

describe("stream consumer against the mock service", () => {
  let server: MockServer;
  let state: UiState;
  let consumer: StreamConsumer;

  beforeEach(async () => {
    server = await startMockServer();
    state = initialState();
  });

  afterEach(async () => {
    consumer?.stop();
    await server.close();
  });

  function startConsumer(opts: ConstructorParameters<typeof StreamConsumer>[3] = {}) {
    consumer = new StreamConsumer(server.url, state, () => {}, opts);
    consumer.start();
  }

  it("lights the lamp matching the band for all three bands", async () => {
    startConsumer();
    await until(() => state.connection === "live", 2000, "live connection");
    const cases: [Band, number][] = [
      ["GREEN", 12.0],
      ["YELLOW", 45.0],
      ["RED", 92.0],
    ];
    for (const [band, score] of cases) {
      server.pushThreat(makeThreat(band, score));
      await until(() => state.status?.band === band, 2000, `band ${band}`);
      const view = renderTrafficLight(state);
      const active = [view.green, view.yellow, view.red].filter(Boolean);
      expect(active).toHaveLength(1);
      expect(view.band).toBe(band);
      expect(view.score).toBe(score.toFixed(1));
    }
  });

  it("updates the lamp in under two seconds after a pushed threat", async () => {
    startConsumer();
    await until(() => state.connection === "live", 2000, "live connection");
    const before = renderTrafficLight(state);
    expect(before.red).toBe(false);
    const t0 = Date.now();
    server.pushThreat(makeThreat("RED", 88.0));
    await until(() => renderTrafficLight(state).red, 2000, "red lamp");
    expect(Date.now() - t0).toBeLessThan(2000);
  });

  it("keeps the newest 500 of 1000 rapid verdicts", async () => {
    startConsumer();
    await until(() => state.connection === "live", 2000, "live connection");
    for (let i = 0; i < 1000; i++) server.pushVerdict(makeVerdict(i));
    await until(
      () => state.verdicts.at(-1)?.event_id === "ev-999",
      5000,
      "last verdict",
    );
    expect(state.verdicts).toHaveLength(500);
    expect(state.verdicts[0].event_id).toBe("ev-500");
  });

  it("applies pushed metrics to the counters", async () => {
    startConsumer();
    await until(() => state.connection === "live", 2000, "live connection");
    server.setMetrics({
      logs_assessed: 7,
      network_events_processed: 9,
      anomalies: 2,
      by_attack_type: { XSS: 2 },
      per_minute: [{ minute: 0, events: 9, anomalies: 2 }],
      uptime_s: 1.0,
    });
    server.pushMetrics();
    await until(() => state.metrics?.anomalies === 2, 2000, "metrics update");
    expect(state.metrics?.logs_assessed).toBe(7);
  });

  it("reconnects after a drop and resets the backoff on success", async () => {
    const delays: number[] = [];
    startConsumer({ delayFn: async (ms) => void delays.push(ms) });
    await until(() => state.connection === "live", 2000, "live connection");

    server.dropStreams();
    await until(() => server.streamCount() === 1, 2000, "reconnect one");
    await until(() => state.connection === "live", 2000, "live again");

    server.dropStreams();
    await until(() => server.streamCount() === 1, 2000, "reconnect two");

    // each retry followed a healthy connection, so both waited the base delay
    expect(delays).toEqual([1000, 1000]);
  });

  it("backs off exponentially up to the cap while the service is down", async () => {
    const delays: number[] = [];
    startConsumer({ delayFn: async (ms) => void delays.push(ms) });
    await until(() => state.connection === "live", 2000, "live connection");

    await server.close();
    await until(() => delays.length >= 7, 5000, "seven retry delays");
    consumer.stop();

    expect(delays.slice(0, 7)).toEqual([1000, 2000, 4000, 8000, 16000, 30000, 30000]);
    expect(Math.max(...delays)).toBe(BACKOFF_CAP_MS);
    expect(state.connection).toBe("reconnecting");
    const view = renderTrafficLight(state);
    expect([view.green, view.yellow, view.red]).toEqual([false, false, false]);
    expect(view.notice).toContain("reconnecting");
  });

  it("loads the initial snapshot from the plain endpoints", async () => {
    server.pushThreat(makeThreat("YELLOW", 41.0));
    for (let i = 0; i < 3; i++) server.pushVerdict(makeVerdict(i));
    server.setMetrics({
      logs_assessed: 3,
      network_events_processed: 3,
      anomalies: 3,
      by_attack_type: { SQL_INJECTION: 3 },
      per_minute: [{ minute: 0, events: 3, anomalies: 3 }],
      uptime_s: 0.5,
    });
    await loadSnapshot(server.url, state);
    expect(state.status?.band).toBe("YELLOW");
    expect(state.verdicts).toHaveLength(3);
    expect(state.metrics?.by_attack_type.SQL_INJECTION).toBe(3);
  });
});
