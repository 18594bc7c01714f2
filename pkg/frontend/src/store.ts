// Transcript state and its reducer. Pure: every server event (and every
// local action) maps old state to new state, so the view layer can be a
// dumb renderer and tests never need a DOM.

import type {
  ErrorPayload,
  ModalityPayload,
  RetrievalPayload,
  SessionClosedPayload,
  SessionEvent,
  TurnPayload,
} from "./types.js";

export interface TurnBubble {
  type: "turn";
  seq: number | null; // null while optimistic
  index: number | null;
  speaker: string;
  text: string;
  introduces: string | null;
  memoryRefs: string[];
  recallBadge: boolean;
  optimistic: boolean;
}

export interface ModalityCard {
  type: "modality";
  seq: number;
  itemId: string;
  kind: "image" | "audio";
  caption: string;
  assetUri: string | null;
  turnIndex: number;
}

export type TranscriptEntry = TurnBubble | ModalityCard;

export interface MemoryPanelEntry {
  unitId: string;
  kind: string;
  text: string;
  linked: string[];
  score: number;
}

export type Connection = "idle" | "connecting" | "live" | "done" | "error";

export interface TranscriptView {
  connection: Connection;
  lastSeq: number;
  gapDetected: boolean;
  entries: TranscriptEntry[];
  memoryPanel: MemoryPanelEntry[];
  composerEnabled: boolean;
  composerNote: string;
  sessionClosed: boolean;
  intervalPickerOpen: boolean;
  toasts: string[];
  pendingEcho: { speaker: string; text: string } | null;
  participants: string[];
  sessionIndex: number | null;
  pendingRecallBadge: boolean;
}

export function initialView(): TranscriptView {
  return {
    connection: "idle",
    lastSeq: 0,
    gapDetected: false,
    entries: [],
    memoryPanel: [],
    composerEnabled: true,
    composerNote: "",
    sessionClosed: false,
    intervalPickerOpen: false,
    toasts: [],
    pendingEcho: null,
    participants: [],
    sessionIndex: null,
    pendingRecallBadge: false,
  };
}

export function modalityCards(view: TranscriptView): ModalityCard[] {
  return view.entries.filter((e): e is ModalityCard => e.type === "modality");
}

export function turnBubbles(view: TranscriptView): TurnBubble[] {
  return view.entries.filter((e): e is TurnBubble => e.type === "turn");
}

/** Fold one streamed event into the view. Out-of-order events only mark
 * gapDetected; the stream client re-requests from lastSeq. */
export function renderEvent(view: TranscriptView, event: SessionEvent): TranscriptView {
  if (event.seq <= view.lastSeq) {
    return view; // replayed duplicate: already applied
  }
  if (event.seq !== view.lastSeq + 1) {
    return { ...view, gapDetected: true };
  }
  const next: TranscriptView = { ...view, lastSeq: event.seq, gapDetected: false };

  switch (event.kind) {
    case "session_opened": {
      const payload = event.payload as unknown as {
        session_index: number;
        participants: string[];
      };
      next.sessionIndex = payload.session_index;
      next.participants = payload.participants;
      return next;
    }
    case "turn":
      return applyTurn(next, event.seq, event.payload as unknown as TurnPayload);
    case "modality": {
      const payload = event.payload as unknown as ModalityPayload;
      next.entries = [
        ...next.entries,
        {
          type: "modality",
          seq: event.seq,
          itemId: payload.item.id,
          kind: payload.item.kind,
          caption: payload.item.caption,
          assetUri: payload.item.asset_uri,
          turnIndex: payload.turn_index,
        },
      ];
      return next;
    }
    case "retrieval": {
      const payload = event.payload as unknown as RetrievalPayload;
      next.memoryPanel = [
        ...next.memoryPanel,
        {
          unitId: payload.unit.id,
          kind: payload.unit.kind,
          text: payload.unit.text,
          linked: payload.linked.map((u) => u.id),
          score: payload.score,
        },
      ];
      next.pendingRecallBadge = true;
      return next;
    }
    case "memory_written":
      return next;
    case "session_closed": {
      const payload = event.payload as unknown as SessionClosedPayload;
      next.sessionClosed = true;
      next.intervalPickerOpen = payload.session_index < 2;
      next.composerEnabled = false;
      next.composerNote = "session closed";
      return next;
    }
    case "error": {
      const payload = event.payload as unknown as ErrorPayload;
      next.toasts = [...next.toasts, `${payload.code}: ${payload.message}`];
      return next;
    }
    default:
      return next;
  }
}

function applyTurn(view: TranscriptView, seq: number, payload: TurnPayload): TranscriptView {
  const bubble: TurnBubble = {
    type: "turn",
    seq,
    index: payload.index,
    speaker: payload.speaker,
    text: payload.text,
    introduces: payload.introduces,
    memoryRefs: payload.memory_refs,
    recallBadge: view.pendingRecallBadge || payload.memory_refs.length > 0,
    optimistic: false,
  };
  let entries = view.entries;
  // reconcile the optimistic echo: replace, never duplicate
  if (
    view.pendingEcho &&
    view.pendingEcho.speaker === payload.speaker &&
    view.pendingEcho.text === payload.text
  ) {
    entries = entries.filter((e) => !(e.type === "turn" && e.optimistic));
    return {
      ...view,
      entries: [...entries, bubble],
      pendingEcho: null,
      pendingRecallBadge: false,
    };
  }
  return { ...view, entries: [...entries, bubble], pendingRecallBadge: false };
}

// --- local actions ---

export function connectionChanged(view: TranscriptView, connection: Connection): TranscriptView {
  return { ...view, connection };
}

/** Optimistic bubble for a locally submitted utterance. */
export function submitPending(view: TranscriptView, speaker: string, text: string): TranscriptView {
  const bubble: TurnBubble = {
    type: "turn",
    seq: null,
    index: null,
    speaker,
    text,
    introduces: null,
    memoryRefs: [],
    recallBadge: false,
    optimistic: true,
  };
  return { ...view, entries: [...view.entries, bubble], pendingEcho: { speaker, text } };
}

/** The server refused the utterance; drop the optimistic bubble. */
export function submitRejected(view: TranscriptView, code: string): TranscriptView {
  const entries = view.entries.filter((e) => !(e.type === "turn" && e.optimistic));
  if (code === "NOT_YOUR_TURN") {
    return {
      ...view,
      entries,
      pendingEcho: null,
      composerEnabled: false,
      composerNote: "an agent holds the floor — wait for your turn",
    };
  }
  if (code === "SESSION_CLOSED") {
    return {
      ...view,
      entries,
      pendingEcho: null,
      composerEnabled: false,
      composerNote: "session closed",
    };
  }
  return { ...view, entries, pendingEcho: null, toasts: [...view.toasts, code] };
}

export function composerReenabled(view: TranscriptView): TranscriptView {
  if (view.sessionClosed) {
    return view;
  }
  return { ...view, composerEnabled: true, composerNote: "" };
}

export function dismissToast(view: TranscriptView, index: number): TranscriptView {
  return { ...view, toasts: view.toasts.filter((_, i) => i !== index) };
}

/** Validation used by the composer: empty input never leaves the client. */
export function canSubmit(view: TranscriptView, text: string): boolean {
  return view.composerEnabled && text.trim().length > 0 && !view.sessionClosed;
}
