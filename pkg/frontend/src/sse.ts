/** Incremental parser for text/event-stream bodies.

Feed it decoded chunks as they arrive; it yields complete frames on
each blank-line boundary and buffers partial lines across chunks.
*/

export interface SseFrame {
  event: string | null;
  data: string | null;
  comment: string | null;
}

export class SseParser {
  private buffer = "";
  private event: string | null = null;
  private data: string[] = [];
  private comment: string[] = [];

  feed(chunk: string): SseFrame[] {
    this.buffer += chunk;
    const frames: SseFrame[] = [];
    let nl: number;
    while ((nl = this.buffer.indexOf("\n")) >= 0) {
      let line = this.buffer.slice(0, nl);
      this.buffer = this.buffer.slice(nl + 1);
      if (line.endsWith("\r")) line = line.slice(0, -1);
      if (line === "") {
        const frame = this.flush();
        if (frame !== null) frames.push(frame);
        continue;
      }
      if (line.startsWith(":")) {
        this.comment.push(stripLead(line.slice(1)));
        continue;
      }
      const colon = line.indexOf(":");
      const field = colon < 0 ? line : line.slice(0, colon);
      const value = colon < 0 ? "" : stripLead(line.slice(colon + 1));
      if (field === "event") this.event = value;
      else if (field === "data") this.data.push(value);
      // other fields (id, retry) are irrelevant here and skipped
    }
    return frames;
  }

  private flush(): SseFrame | null {
    if (this.event === null && this.data.length === 0 && this.comment.length === 0) {
      return null;
    }
    const frame: SseFrame = {
      event: this.event,
      data: this.data.length > 0 ? this.data.join("\n") : null,
      comment: this.comment.length > 0 ? this.comment.join("\n") : null,
    };
    this.event = null;
    this.data = [];
    this.comment = [];
    return frame;
  }
}

function stripLead(s: string): string {
  return s.startsWith(" ") ? s.slice(1) : s;
}
