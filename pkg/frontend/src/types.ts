// Event and payload shapes mirrored from the server's event stream.

export type EventKind =
  | "session_opened"
  | "modality"
  | "retrieval"
  | "turn"
  | "memory_written"
  | "session_closed"
  | "error";

export interface SessionEvent {
  seq: number;
  kind: EventKind;
  payload: Record<string, unknown>;
}

export interface TurnPayload {
  session_index: number;
  index: number;
  speaker: string;
  text: string;
  introduces: string | null;
  memory_refs: string[];
}

export interface ModalityPayload {
  session_index: number;
  turn_index: number;
  slot: number;
  item: { id: string; kind: "image" | "audio"; caption: string; asset_uri: string | null };
}

export interface MemoryRef {
  id: string;
  kind: string;
  text: string;
}

export interface RetrievalPayload {
  session_index: number;
  turn_index: number | null;
  speaker: string;
  kind: string;
  unit: MemoryRef;
  score: number;
  linked: MemoryRef[];
  phase?: string;
}

export interface SessionClosedPayload {
  session_index: number;
  turn_count: number;
  memories?: number;
  links?: number;
}

export interface ErrorPayload {
  code: string;
  message: string;
}

export const INTERVAL_CHOICES: Array<{ value: string; label: string }> = [
  { value: "hours", label: "a few hours later" },
  { value: "days", label: "a few days later" },
  { value: "weeks", label: "a few weeks later" },
  { value: "months", label: "a few months later" },
  { value: "years", label: "a couple of years later" },
];
