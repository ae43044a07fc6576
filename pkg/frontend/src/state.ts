/** Client-side state and the pure reducers the stream consumer feeds.

All mutation funnels through the apply* functions so the render loop
only ever reads a consistent snapshot. No scores are computed here;
the service is the single source of truth for numbers and bands.
*/

import type {
  Band,
  FactorBreakdown,
  MetricsPayload,
  StatusPayload,
  ThreatPayload,
  VerdictPayload,
} from "./types.js";

export const VERDICT_LIMIT = 500;

export type Connection = "connecting" | "live" | "reconnecting";

export interface ChatEntry {
  role: "user" | "assistant";
  text: string;
  offline: boolean;
  entry: string | null;
  error: boolean;
}

export interface UiState {
  connection: Connection;
  status: StatusPayload | null;
  metrics: MetricsPayload | null;
  verdicts: VerdictPayload[];
  chat: ChatEntry[];
}

export function initialState(): UiState {
  return {
    connection: "connecting",
    status: null,
    metrics: null,
    verdicts: [],
    chat: [],
  };
}

export function setConnection(state: UiState, c: Connection): void {
  state.connection = c;
}

export function applyStatus(state: UiState, status: StatusPayload): void {
  state.status = status;
}

/** A threat event is the freshest assessment; it becomes the status. */
export function applyThreat(state: UiState, t: ThreatPayload): void {
  state.status = {
    final_score: t.final_score,
    band: t.band,
    factors: t.factors,
    window_event_count: t.window_event_count,
    updated_at: t.timestamp,
    timestamp: t.timestamp,
  };
}

/** Append a verdict, keeping only the newest VERDICT_LIMIT entries. */
export function applyVerdict(state: UiState, v: VerdictPayload): void {
  state.verdicts.push(v);
  if (state.verdicts.length > VERDICT_LIMIT) {
    state.verdicts.splice(0, state.verdicts.length - VERDICT_LIMIT);
  }
}

/** Seed the verdict table from GET /api/events (oldest first). */
export function seedVerdicts(state: UiState, items: VerdictPayload[]): void {
  state.verdicts = items.slice(-VERDICT_LIMIT);
}

export function applyMetrics(state: UiState, m: MetricsPayload): void {
  state.metrics = m;
}

export interface LampView {
  green: boolean;
  yellow: boolean;
  red: boolean;
  score: string | null;
  band: Band | null;
  factors: FactorBreakdown | null;
  windowEvents: number | null;
  notice: string | null;
}

/** Lamp state for the traffic light widget.

Exactly one lamp is active and it always equals the band of the
latest status. With no status or a dropped connection every lamp
is dimmed and a reconnect notice is shown instead.
*/
export function renderTrafficLight(state: UiState): LampView {
  const live = state.connection === "live";
  const status = state.status;
  if (!live || status === null) {
    return {
      green: false,
      yellow: false,
      red: false,
      score: null,
      band: null,
      factors: null,
      windowEvents: null,
      notice: live ? "waiting for data" : "connection lost, reconnecting",
    };
  }
  return {
    green: status.band === "GREEN",
    yellow: status.band === "YELLOW",
    red: status.band === "RED",
    score: formatScore(status.final_score),
    band: status.band,
    factors: status.factors,
    windowEvents: status.window_event_count,
    notice: null,
  };
}

export function formatScore(score: number): string {
  return score.toFixed(1);
}

export function formatFactor(value: number): string {
  return value.toFixed(3);
}

/** Chat send is disabled for whitespace-only input. */
export function canSend(text: string): boolean {
  return text.trim().length > 0;
}

export function chatBegin(state: UiState, userText: string): void {
  state.chat.push({
    role: "user",
    text: userText,
    offline: false,
    entry: null,
    error: false,
  });
  state.chat.push({
    role: "assistant",
    text: "",
    offline: false,
    entry: null,
    error: false,
  });
}

function lastAssistant(state: UiState): ChatEntry | null {
  for (let i = state.chat.length - 1; i >= 0; i--) {
    if (state.chat[i].role === "assistant") return state.chat[i];
  }
  return null;
}

export function chatMeta(
  state: UiState,
  meta: { offline: boolean; entry: string | null },
): void {
  const reply = lastAssistant(state);
  if (reply === null) return;
  reply.offline = meta.offline;
  reply.entry = meta.entry;
}

export function chatChunk(state: UiState, text: string): void {
  const reply = lastAssistant(state);
  if (reply === null) return;
  reply.text += text;
}

export function chatError(state: UiState, message: string): void {
  const reply = lastAssistant(state);
  if (reply === null) return;
  reply.error = true;
  if (reply.text === "") reply.text = message;
}
