/** DOM wiring: one UiState instance, one stream consumer, and a
render pass coalesced onto requestAnimationFrame. Handlers only
mutate state and mark it dirty; the DOM is touched in render().
*/

import { renderTrendSvg, trendBars } from "./chart.js";
import { sendChat } from "./chat.js";
import {
  canSend,
  formatFactor,
  formatScore,
  initialState,
  renderTrafficLight,
  type UiState,
} from "./state.js";
import { loadSnapshot, StreamConsumer } from "./stream.js";
import type { FactorBreakdown, VerdictPayload } from "./types.js";

const state: UiState = initialState();
let dirty = false;

function markDirty(): void {
  if (dirty) return;
  dirty = true;
  requestAnimationFrame(() => {
    dirty = false;
    render();
  });
}

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (node === null) throw new Error(`missing #${id}`);
  return node as T;
}

const lamps = {
  green: el("lamp-green"),
  yellow: el("lamp-yellow"),
  red: el("lamp-red"),
};
const scoreEl = el("score");
const bandEl = el("band");
const windowEl = el("window-count");
const factorsEl = el("factors");
const noticeEl = el("connection-notice");
const logsEl = el("m-logs");
const eventsEl = el("m-events");
const anomaliesEl = el("m-anomalies");
const byTypeEl = el("by-type");
const trendSvg = el<HTMLElement>("trend") as unknown as SVGSVGElement;
const verdictRows = el("verdict-rows");
const chatLog = el("chat-log");
const chatInput = el<HTMLTextAreaElement>("chat-input");
const chatSend = el<HTMLButtonElement>("chat-send");
const toastEl = el("toast");

const FACTOR_LABELS: [string, keyof FactorBreakdown][] = [
  ["base", "base_score"],
  ["frequency", "frequency_multiplier"],
  ["cluster", "cluster_factor"],
  ["ip", "ip_factor"],
  ["diversity", "diversity_factor"],
];

function render(): void {
  const lamp = renderTrafficLight(state);
  lamps.green.classList.toggle("on", lamp.green);
  lamps.yellow.classList.toggle("on", lamp.yellow);
  lamps.red.classList.toggle("on", lamp.red);
  scoreEl.textContent = lamp.score ?? "--";
  bandEl.textContent = lamp.band ?? "";
  windowEl.textContent =
    lamp.windowEvents === null ? "" : `${lamp.windowEvents} in window`;
  noticeEl.textContent = lamp.notice ?? "";
  noticeEl.classList.toggle("visible", lamp.notice !== null);

  factorsEl.replaceChildren();
  if (lamp.factors !== null) {
    for (const [label, key] of FACTOR_LABELS) {
      const row = document.createElement("div");
      row.className = "factor";
      const name = document.createElement("span");
      name.textContent = label;
      const value = document.createElement("span");
      value.textContent =
        key === "base_score"
          ? formatScore(lamp.factors[key])
          : `\u00d7${formatFactor(lamp.factors[key])}`;
      row.append(name, value);
      factorsEl.append(row);
    }
  }

  if (state.metrics !== null) {
    logsEl.textContent = String(state.metrics.logs_assessed);
    eventsEl.textContent = String(state.metrics.network_events_processed);
    anomaliesEl.textContent = String(state.metrics.anomalies);
    byTypeEl.replaceChildren();
    const entries = Object.entries(state.metrics.by_attack_type).sort(
      (a, b) => b[1] - a[1],
    );
    for (const [type, count] of entries) {
      const li = document.createElement("li");
      li.textContent = `${type}: ${count}`;
      byTypeEl.append(li);
    }
    const width = trendSvg.viewBox.baseVal.width || 600;
    const height = trendSvg.viewBox.baseVal.height || 120;
    trendSvg.innerHTML = renderTrendSvg(
      trendBars(state.metrics.per_minute, width, height),
      height,
    );
  }

  renderVerdicts();
  renderChat();
}

function renderVerdicts(): void {
  verdictRows.replaceChildren();
  for (let i = state.verdicts.length - 1; i >= 0; i--) {
    verdictRows.append(verdictRow(state.verdicts[i]));
  }
}

function verdictRow(v: VerdictPayload): HTMLTableRowElement {
  const tr = document.createElement("tr");
  if (v.is_anomalous) tr.className = "anomalous";
  const cells = [
    new Date(v.timestamp / 1000).toISOString().slice(11, 23),
    v.source_ip,
    v.attack_type,
    v.confidence.toFixed(4),
  ];
  for (const text of cells) {
    const td = document.createElement("td");
    td.textContent = text;
    tr.append(td);
  }
  return tr;
}

function renderChat(): void {
  chatLog.replaceChildren();
  for (const entry of state.chat) {
    const div = document.createElement("div");
    div.className = `chat-entry ${entry.role}${entry.error ? " error" : ""}`;
    if (entry.role === "assistant" && entry.offline) {
      const badge = document.createElement("span");
      badge.className = "offline-badge";
      badge.textContent = entry.entry === null ? "offline" : `offline: ${entry.entry}`;
      div.append(badge);
    }
    const text = document.createElement("p");
    text.textContent = entry.text;
    div.append(text);
    chatLog.append(div);
  }
  chatLog.scrollTop = chatLog.scrollHeight;
}

let toastTimer: ReturnType<typeof setTimeout> | null = null;

function showToast(message: string): void {
  toastEl.textContent = message;
  toastEl.classList.add("visible");
  if (toastTimer !== null) clearTimeout(toastTimer);
  toastTimer = setTimeout(() => toastEl.classList.remove("visible"), 5000);
}

function syncSendButton(): void {
  chatSend.disabled = !canSend(chatInput.value);
}

async function submitChat(): Promise<void> {
  const message = chatInput.value;
  if (!canSend(message)) return;
  chatInput.value = "";
  syncSendButton();
  const outcome = await sendChat("", state, message, markDirty);
  if (outcome.fallback) showToast("assistant unreachable, showing the offline answer");
  else if (!outcome.ok) showToast("chat request failed");
}

chatInput.addEventListener("input", syncSendButton);
chatInput.addEventListener("keydown", (ev) => {
  if (ev.key === "Enter" && !ev.shiftKey) {
    ev.preventDefault();
    void submitChat();
  }
});
chatSend.addEventListener("click", () => void submitChat());
syncSendButton();

const consumer = new StreamConsumer("", state, markDirty);
void loadSnapshot("", state).then(markDirty, markDirty);
consumer.start();
markDirty();
