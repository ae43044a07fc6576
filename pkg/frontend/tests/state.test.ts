import { describe, expect, it } from "vitest";

import {
  applyMetrics,
  applyThreat,
  applyVerdict,
  canSend,
  chatBegin,
  chatChunk,
  chatError,
  chatMeta,
  formatScore,
  initialState,
  renderTrafficLight,
  seedVerdicts,
  setConnection,
  VERDICT_LIMIT,
} from "../src/state.js";
import type { Band, StatusPayload } from "../src/types.js";
import { EMPTY_STATUS, makeThreat, makeVerdict } from "./mock_server.js";

function liveStatus(band: Band, score: number): StatusPayload {
  return {
    final_score: score,
    band,
    factors: {
      base_score: score,
      frequency_multiplier: 1.2,
      cluster_factor: 1.0,
      ip_factor: 1.0,
      diversity_factor: 1.0,
    },
    window_event_count: 3,
    updated_at: 1_767_225_600_000_000,
    timestamp: 1_767_225_600_000_000,
  };
}

describe("traffic light", () => {
  it("keeps every lamp dimmed before the first connection", () => {
    const view = renderTrafficLight(initialState());
    expect([view.green, view.yellow, view.red]).toEqual([false, false, false]);
    expect(view.score).toBeNull();
    expect(view.notice).toContain("reconnecting");
  });

  it("activates exactly the lamp matching the band, for all bands", () => {
    const state = initialState();
    setConnection(state, "live");
    const cases: [Band, [boolean, boolean, boolean]][] = [
      ["GREEN", [true, false, false]],
      ["YELLOW", [false, true, false]],
      ["RED", [false, false, true]],
    ];
    for (const [band, lamps] of cases) {
      state.status = liveStatus(band, 42.0);
      const view = renderTrafficLight(state);
      expect([view.green, view.yellow, view.red]).toEqual(lamps);
      expect(view.band).toBe(band);
    }
  });

  it("renders the empty default status as an active green lamp", () => {
    const state = initialState();
    setConnection(state, "live");
    state.status = { ...EMPTY_STATUS };
    const view = renderTrafficLight(state);
    expect(view.green).toBe(true);
    expect(view.score).toBe("0.0");
    expect(view.factors).toBeNull();
  });

  it("dims a stale status once the connection drops", () => {
    const state = initialState();
    setConnection(state, "live");
    state.status = liveStatus("RED", 88.0);
    setConnection(state, "reconnecting");
    const view = renderTrafficLight(state);
    expect([view.green, view.yellow, view.red]).toEqual([false, false, false]);
    expect(view.notice).toContain("reconnecting");
  });

  it("shows score and factors numerically", () => {
    const state = initialState();
    setConnection(state, "live");
    state.status = liveStatus("YELLOW", 56.25);
    const view = renderTrafficLight(state);
    expect(view.score).toBe("56.3");
    expect(view.factors?.frequency_multiplier).toBeCloseTo(1.2, 12);
    expect(view.windowEvents).toBe(3);
  });
});

describe("state reducers", () => {
  it("applyThreat promotes the event to the current status", () => {
    const state = initialState();
    applyThreat(state, makeThreat("RED", 91.5, 123_456));
    expect(state.status?.band).toBe("RED");
    expect(state.status?.final_score).toBe(91.5);
    expect(state.status?.updated_at).toBe(123_456);
  });

  it("keeps only the newest 500 verdicts out of 1000", () => {
    const state = initialState();
    for (let i = 0; i < 1000; i++) applyVerdict(state, makeVerdict(i));
    expect(state.verdicts).toHaveLength(VERDICT_LIMIT);
    expect(state.verdicts[0].event_id).toBe("ev-500");
    expect(state.verdicts[VERDICT_LIMIT - 1].event_id).toBe("ev-999");
  });

  it("seedVerdicts truncates an oversized snapshot the same way", () => {
    const state = initialState();
    seedVerdicts(state, Array.from({ length: 700 }, (_, i) => makeVerdict(i)));
    expect(state.verdicts).toHaveLength(VERDICT_LIMIT);
    expect(state.verdicts[0].event_id).toBe("ev-200");
  });

  it("applyMetrics replaces the metrics snapshot", () => {
    const state = initialState();
    applyMetrics(state, {
      logs_assessed: 12,
      network_events_processed: 34,
      anomalies: 5,
      by_attack_type: { XSS: 5 },
      per_minute: [{ minute: 60, events: 3, anomalies: 1 }],
      uptime_s: 9.5,
    });
    expect(state.metrics?.anomalies).toBe(5);
    expect(state.metrics?.per_minute).toHaveLength(1);
  });
});

describe("chat state", () => {
  it("blocks empty and whitespace-only sends", () => {
    expect(canSend("")).toBe(false);
    expect(canSend("   ")).toBe(false);
    expect(canSend("\n\t")).toBe(false);
    expect(canSend("what is the red band?")).toBe(true);
  });

  it("accumulates chunks onto the pending reply", () => {
    const state = initialState();
    chatBegin(state, "how are scores made?");
    chatMeta(state, { offline: true, entry: "scoring" });
    chatChunk(state, "Five factors multiply.\n");
    chatChunk(state, "Then the score is capped.\n");
    expect(state.chat).toHaveLength(2);
    const reply = state.chat[1];
    expect(reply.role).toBe("assistant");
    expect(reply.offline).toBe(true);
    expect(reply.entry).toBe("scoring");
    expect(reply.text).toBe("Five factors multiply.\nThen the score is capped.\n");
    expect(reply.error).toBe(false);
  });

  it("flags the reply on error without erasing streamed text", () => {
    const state = initialState();
    chatBegin(state, "hello");
    chatChunk(state, "partial answer");
    chatError(state, "assistant unreachable");
    expect(state.chat[1].error).toBe(true);
    expect(state.chat[1].text).toBe("partial answer");
  });
});

describe("formatting", () => {
  it("renders scores with one decimal", () => {
    expect(formatScore(0)).toBe("0.0");
    expect(formatScore(79.2)).toBe("79.2");
    expect(formatScore(100)).toBe("100.0");
  });
});
