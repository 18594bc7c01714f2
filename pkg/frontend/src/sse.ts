// Server-sent-events reader on top of fetch streaming, so the same code
// runs in the browser and in Node tests. Tracks the last delivered seq and
// resumes from it on reconnect; a gap reported by the consumer forces an
// immediate re-request from the last good seq.

import type { SessionEvent } from "./types.js";

export interface StreamHandlers {
  onEvent: (event: SessionEvent) => "ok" | "gap";
  onStateChange?: (state: "connecting" | "live" | "done" | "error") => void;
}

export interface StreamOptions {
  retryDelayMs?: number;
  maxRetries?: number;
  fetchImpl?: typeof fetch;
}

export interface SseFrame {
  id: number | null;
  data: string;
}

/** Incremental parser for the `id:`/`data:` framing; frames are separated
 * by a blank line. Chunk boundaries may fall anywhere. */
export class SseParser {
  private buffer = "";

  push(chunk: string): SseFrame[] {
    this.buffer += chunk.replace(/\r\n/g, "\n");
    const frames: SseFrame[] = [];
    let boundary: number;
    while ((boundary = this.buffer.indexOf("\n\n")) >= 0) {
      const raw = this.buffer.slice(0, boundary);
      this.buffer = this.buffer.slice(boundary + 2);
      const frame = parseFrame(raw);
      if (frame) {
        frames.push(frame);
      }
    }
    return frames;
  }
}

function parseFrame(raw: string): SseFrame | null {
  let id: number | null = null;
  const dataLines: string[] = [];
  for (const line of raw.split("\n")) {
    if (line.startsWith("id:")) {
      const parsed = Number(line.slice(3).trim());
      id = Number.isFinite(parsed) ? parsed : null;
    } else if (line.startsWith("data:")) {
      dataLines.push(line.slice(5).trimStart());
    }
  }
  if (dataLines.length === 0) {
    return null;
  }
  return { id, data: dataLines.join("\n") };
}

export class EventStream {
  private lastSeq: number;
  private stopped = false;
  private controller: AbortController | null = null;

  constructor(
    private readonly url: string,
    private readonly handlers: StreamHandlers,
    private readonly options: StreamOptions = {},
    fromSeq = 0,
  ) {
    this.lastSeq = fromSeq;
  }

  get position(): number {
    return this.lastSeq;
  }

  stop(): void {
    this.stopped = true;
    this.controller?.abort();
  }

  /** Consume until the server ends the stream (session closed) or stop()
   * is called. Resolves with the last seen seq. */
  async run(): Promise<number> {
    const fetchImpl = this.options.fetchImpl ?? fetch;
    const retryDelay = this.options.retryDelayMs ?? 400;
    let retries = 0;
    const maxRetries = this.options.maxRetries ?? 25;

    while (!this.stopped) {
      this.handlers.onStateChange?.("connecting");
      this.controller = new AbortController();
      let sawServerEnd = false;
      try {
        const response = await fetchImpl(`${this.url}?from=${this.lastSeq}`, {
          signal: this.controller.signal,
          headers: { accept: "text/event-stream" },
        });
        if (!response.ok || !response.body) {
          throw new Error(`stream request failed: ${response.status}`);
        }
        this.handlers.onStateChange?.("live");
        retries = 0;
        const reader = response.body.getReader();
        const decoder = new TextDecoder();
        const parser = new SseParser();
        let gap = false;
        for (;;) {
          const { done, value } = await reader.read();
          if (done) {
            sawServerEnd = true;
            break;
          }
          for (const frame of parser.push(decoder.decode(value, { stream: true }))) {
            const event = JSON.parse(frame.data) as SessionEvent;
            const verdict = this.handlers.onEvent(event);
            if (verdict === "gap") {
              gap = true; // reconnect from lastSeq without advancing
              break;
            }
            this.lastSeq = event.seq;
          }
          if (gap) {
            this.controller.abort();
            break;
          }
        }
        if (gap) {
          continue; // immediate resume from the last good seq
        }
        if (sawServerEnd) {
          this.handlers.onStateChange?.("done");
          return this.lastSeq;
        }
      } catch (err) {
        if (this.stopped) {
          break;
        }
        retries += 1;
        if (retries > maxRetries) {
          this.handlers.onStateChange?.("error");
          throw err;
        }
        await sleep(retryDelay);
      }
    }
    return this.lastSeq;
  }
}

function sleep(ms: number): Promise<void> {
  return new Promise((resolve) => setTimeout(resolve, ms));
}
