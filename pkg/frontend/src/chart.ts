/** Trend chart geometry: per-minute event bars with anomalies
highlighted as an inner bar. Pure layout math so the drawing code
stays a dumb loop over rectangles.
*/

import type { MinuteBucket } from "./types.js";

export interface TrendBar {
  minute: number;
  x: number;
  width: number;
  eventsY: number;
  eventsHeight: number;
  anomaliesY: number;
  anomaliesHeight: number;
  events: number;
  anomalies: number;
}

const BAR_GAP = 2;

export function trendBars(
  perMinute: MinuteBucket[],
  width: number,
  height: number,
): TrendBar[] {
  if (perMinute.length === 0 || width <= 0 || height <= 0) return [];
  const buckets = [...perMinute].sort((a, b) => a.minute - b.minute);
  const peak = Math.max(1, ...buckets.map((b) => b.events));
  const slot = width / buckets.length;
  const barWidth = Math.max(1, slot - BAR_GAP);
  return buckets.map((b, i) => {
    const eventsHeight = (b.events / peak) * height;
    const anomaliesHeight = (Math.min(b.anomalies, b.events) / peak) * height;
    return {
      minute: b.minute,
      x: i * slot + BAR_GAP / 2,
      width: barWidth,
      eventsY: height - eventsHeight,
      eventsHeight,
      anomaliesY: height - anomaliesHeight,
      anomaliesHeight,
      events: b.events,
      anomalies: b.anomalies,
    };
  });
}

/** SVG body for the bars; the caller owns the enclosing <svg>. */
export function renderTrendSvg(bars: TrendBar[], height: number): string {
  const parts: string[] = [];
  for (const b of bars) {
    parts.push(
      `<rect class="bar-events" x="${fmt(b.x)}" y="${fmt(b.eventsY)}"` +
        ` width="${fmt(b.width)}" height="${fmt(b.eventsHeight)}">` +
        `<title>${timeLabel(b.minute)}: ${b.events} events, ${b.anomalies} anomalies</title></rect>`,
    );
    if (b.anomaliesHeight > 0) {
      parts.push(
        `<rect class="bar-anomalies" x="${fmt(b.x)}" y="${fmt(b.anomaliesY)}"` +
          ` width="${fmt(b.width)}" height="${fmt(b.anomaliesHeight)}"></rect>`,
      );
    }
  }
  if (parts.length === 0) {
    parts.push(
      `<text class="chart-empty" x="8" y="${fmt(height / 2)}">no traffic yet</text>`,
    );
  }
  return parts.join("");
}

function fmt(n: number): string {
  return n.toFixed(2).replace(/\.?0+$/, "");
}

function timeLabel(minuteStartS: number): string {
  const d = new Date(minuteStartS * 1000);
  const hh = String(d.getUTCHours()).padStart(2, "0");
  const mm = String(d.getUTCMinutes()).padStart(2, "0");
  return `${hh}:${mm}`;
}
