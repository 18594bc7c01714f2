import { describe, expect, it } from "vitest";

import { EventStream, SseParser } from "../src/sse.js";
import type { SessionEvent } from "../src/types.js";

function frame(seq: number, kind = "turn", payload: Record<string, unknown> = {}): string {
  const data = JSON.stringify({ seq, kind, payload });
  return `id: ${seq}\ndata: ${data}\n\n`;
}

describe("SseParser", () => {
  it("parses whole frames", () => {
    const parser = new SseParser();
    const frames = parser.push(frame(1) + frame(2));
    expect(frames.map((f) => f.id)).toEqual([1, 2]);
  });

  it("handles chunk boundaries anywhere", () => {
    const parser = new SseParser();
    const whole = frame(1) + frame(2) + frame(3);
    const frames = [];
    for (const char of whole) {
      frames.push(...parser.push(char));
    }
    expect(frames.map((f) => f.id)).toEqual([1, 2, 3]);
  });

  it("tolerates CRLF framing", () => {
    const parser = new SseParser();
    const frames = parser.push('id: 9\r\ndata: {"seq":9,"kind":"turn","payload":{}}\r\n\r\n');
    expect(frames).toHaveLength(1);
    expect(frames[0].id).toBe(9);
  });
});

function streamResponse(body: string): Response {
  return new Response(
    new ReadableStream<Uint8Array>({
      start(controller) {
        controller.enqueue(new TextEncoder().encode(body));
        controller.close();
      },
    }),
    { status: 200, headers: { "content-type": "text/event-stream" } },
  );
}

describe("EventStream", () => {
  it("delivers events in order and finishes when the server ends", async () => {
    const seen: number[] = [];
    const fetchImpl = (async () =>
      streamResponse(frame(1) + frame(2) + frame(3))) as unknown as typeof fetch;
    const stream = new EventStream(
      "http://test/events",
      { onEvent: (e: SessionEvent) => (seen.push(e.seq), "ok") },
      { fetchImpl },
    );
    const last = await stream.run();
    expect(seen).toEqual([1, 2, 3]);
    expect(last).toBe(3);
  });

  it("resumes from the last seq after a dropped connection", async () => {
    const requests: string[] = [];
    let call = 0;
    const fetchImpl = (async (url: string) => {
      requests.push(String(url));
      call += 1;
      if (call === 1) {
        // deliver 1-2, then die without the server finishing the session
        let pulls = 0;
        return new Response(
          new ReadableStream<Uint8Array>({
            pull(controller) {
              pulls += 1;
              if (pulls === 1) {
                controller.enqueue(new TextEncoder().encode(frame(1) + frame(2)));
              } else {
                controller.error(new Error("connection reset"));
              }
            },
          }),
          { status: 200 },
        );
      }
      return streamResponse(frame(3) + frame(4));
    }) as unknown as typeof fetch;

    const seen: number[] = [];
    const stream = new EventStream(
      "http://test/events",
      { onEvent: (e: SessionEvent) => (seen.push(e.seq), "ok") },
      { fetchImpl, retryDelayMs: 1 },
    );
    await stream.run();
    expect(seen).toEqual([1, 2, 3, 4]);
    expect(requests).toEqual(["http://test/events?from=0", "http://test/events?from=2"]);
  });

  it("a consumer-reported gap re-requests from the last good seq", async () => {
    const requests: string[] = [];
    let call = 0;
    const fetchImpl = (async (url: string) => {
      requests.push(String(url));
      call += 1;
      if (call === 1) {
        return streamResponse(frame(1) + frame(5)); // 5 skips 2-4
      }
      return streamResponse(frame(2) + frame(3));
    }) as unknown as typeof fetch;

    const seen: number[] = [];
    const stream = new EventStream(
      "http://test/events",
      {
        onEvent: (e: SessionEvent) => {
          // mimic the reducer's gap detection
          if (seen.length > 0 && e.seq !== seen[seen.length - 1] + 1) {
            return "gap";
          }
          seen.push(e.seq);
          return "ok";
        },
      },
      { fetchImpl, retryDelayMs: 1 },
    );
    await stream.run();
    expect(seen).toEqual([1, 2, 3]);
    expect(requests).toEqual(["http://test/events?from=0", "http://test/events?from=1"]);
  });
});
