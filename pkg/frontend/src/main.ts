// Browser wiring: one seat, one event-stream consumer, one reducer loop.

import { ApiError, Client } from "./api.js";
import { EventStream } from "./sse.js";
import {
  canSubmit,
  composerReenabled,
  connectionChanged,
  dismissToast,
  initialView,
  renderEvent,
  submitPending,
  submitRejected,
  type TranscriptView,
} from "./store.js";
import { render } from "./view.js";

const DEMO_SCENARIO = {
  id: "console-demo",
  speakers: [
    { id: "you", name: "You", relationship: "friend" },
    { id: "ada", name: "Ada", relationship: "colleague" },
    { id: "kai", name: "Kai", relationship: "neighbor" },
    { id: "rio", name: "Rio", relationship: "cousin" },
  ],
  main: "you",
  sessions: [
    { partners: ["ada", "kai"], modality_slots: ["it-0", "it-1"] },
    { partners: ["ada", "rio"], modality_slots: ["it-2", "it-3"] },
    { partners: ["kai", "rio"], modality_slots: ["it-4", "it-5"] },
  ],
  intervals: ["days", "weeks"],
  items: [
    { id: "it-0", kind: "image", caption: "a snowboarder carving through fresh powder", location_tag: "slope", asset_uri: null },
    { id: "it-1", kind: "audio", caption: "skis scraping over packed snow", location_tag: "slope", asset_uri: null },
    { id: "it-2", kind: "image", caption: "a small harbor with fishing boats at dawn", location_tag: "harbor", asset_uri: null },
    { id: "it-3", kind: "audio", caption: "gulls crying over slow waves", location_tag: "harbor", asset_uri: null },
    { id: "it-4", kind: "image", caption: "a market stall stacked with oranges", location_tag: "market", asset_uri: null },
    { id: "it-5", kind: "audio", caption: "a vendor calling out prices", location_tag: "market", asset_uri: null },
  ],
};

interface AppState {
  view: TranscriptView;
  client: Client;
  episodeId: string | null;
  sessionId: string | null;
  humanSpeaker: string;
  stream: EventStream | null;
}

const app: AppState = {
  view: initialView(),
  client: new Client(""),
  episodeId: null,
  sessionId: null,
  humanSpeaker: "you",
  stream: null,
};

const root = document.getElementById("app") as HTMLElement;

function update(view: TranscriptView): void {
  app.view = view;
  render(view, root, {
    onSubmit: submitUtterance,
    onCloseSession: closeSession,
    onPickInterval: openNextSession,
    onDismissToast: (index) => update(dismissToast(app.view, index)),
  });
}

async function start(): Promise<void> {
  const params = new URLSearchParams(location.search);
  const seed = Number(params.get("seed") ?? 7);
  const episode = await app.client.createEpisode({
    scenario: DEMO_SCENARIO,
    seed,
    human_speaker: app.humanSpeaker,
    turn_delay_ms: Number(params.get("delay") ?? 600),
    backend: { type: "simulated", seed },
  });
  app.episodeId = episode.episode_id;
  await openSession({});
}

async function openSession(body: Record<string, unknown>): Promise<void> {
  if (!app.episodeId) {
    return;
  }
  const opened = await app.client.openSession(app.episodeId, body);
  app.sessionId = opened.session_id;
  update({ ...initialView(), connection: "connecting" });
  consumeStream();
}

function consumeStream(): void {
  if (!app.sessionId) {
    return;
  }
  app.stream?.stop();
  const stream = new EventStream(app.client.eventsUrl(app.sessionId), {
    onEvent: (event) => {
      const before = app.view;
      const after = renderEvent(before, event);
      update(after);
      return after.gapDetected ? "gap" : "ok";
    },
    onStateChange: (state) => update(connectionChanged(app.view, state)),
  });
  app.stream = stream;
  stream.run().catch((err) => {
    update({ ...app.view, toasts: [...app.view.toasts, String(err)] });
  });
}

async function submitUtterance(text: string): Promise<void> {
  if (!app.sessionId || !canSubmit(app.view, text)) {
    return;
  }
  update(submitPending(app.view, app.humanSpeaker, text));
  try {
    await app.client.postUtterance(app.sessionId, text);
  } catch (err) {
    if (err instanceof ApiError) {
      update(submitRejected(app.view, err.code));
      if (err.code === "NOT_YOUR_TURN") {
        setTimeout(() => update(composerReenabled(app.view)), 1500);
      }
    } else {
      throw err;
    }
  }
}

async function closeSession(): Promise<void> {
  if (!app.sessionId) {
    return;
  }
  try {
    await app.client.closeSession(app.sessionId);
  } catch (err) {
    if (err instanceof ApiError) {
      update({ ...app.view, toasts: [...app.view.toasts, `${err.code}: ${err.message}`] });
    }
  }
}

async function openNextSession(interval: string): Promise<void> {
  await openSession({ interval });
}

start().catch((err) => {
  update({ ...app.view, toasts: [...app.view.toasts, String(err)] });
});
