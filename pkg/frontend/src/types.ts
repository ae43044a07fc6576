/** Wire payloads exchanged with the threatlight service API. */

export type Band = "GREEN" | "YELLOW" | "RED";

export interface FactorBreakdown {
  base_score: number;
  frequency_multiplier: number;
  cluster_factor: number;
  ip_factor: number;
  diversity_factor: number;
}

/** GET /api/status. Empty state has factors null and updated_at null. */
export interface StatusPayload {
  final_score: number;
  band: Band;
  factors: FactorBreakdown | null;
  window_event_count: number;
  updated_at: number | null;
  timestamp?: number;
}

/** One element of GET /api/events and of the `verdict` stream event. */
export interface VerdictPayload {
  kind: "verdict";
  event_id: string;
  timestamp: number;
  confidence: number;
  is_anomalous: boolean;
  attack_type: string;
  source_ip: string;
}

/** Payload of the `threat` stream event. */
export interface ThreatPayload {
  kind: "threat";
  timestamp: number;
  final_score: number;
  band: Band;
  factors: FactorBreakdown;
  window_event_count: number;
}

export interface MinuteBucket {
  minute: number;
  events: number;
  anomalies: number;
}

/** GET /api/metrics and the `metrics` stream event. */
export interface MetricsPayload {
  logs_assessed: number;
  network_events_processed: number;
  anomalies: number;
  by_attack_type: Record<string, number>;
  per_minute: MinuteBucket[];
  uptime_s: number;
}

/** Lines of the POST /api/chat ndjson response, in arrival order. */
export interface ChatMeta {
  kind: "meta";
  offline: boolean;
  source: string;
  entry: string | null;
  matched_keywords: string[];
  note?: string;
}

export interface ChatChunk {
  kind: "chunk";
  text: string;
}

export interface ChatDone {
  kind: "done";
}

export type ChatLine = ChatMeta | ChatChunk | ChatDone;
