// DOM renderer: the whole view model is re-rendered on each change. The
// transcript is small (tens of entries), so diffing buys nothing.

import type { MemoryPanelEntry, TranscriptEntry, TranscriptView } from "./store.js";
import { INTERVAL_CHOICES } from "./types.js";

export interface ViewCallbacks {
  onSubmit: (text: string) => void;
  onIntroduceToggle?: (checked: boolean) => void;
  onCloseSession: () => void;
  onPickInterval: (interval: string) => void;
  onDismissToast: (index: number) => void;
}

export function render(view: TranscriptView, root: HTMLElement, callbacks: ViewCallbacks): void {
  root.replaceChildren(
    renderHeader(view),
    renderTranscript(view),
    renderComposer(view, callbacks),
    renderMemoryPanel(view.memoryPanel),
    renderIntervalPicker(view, callbacks),
    renderToasts(view, callbacks),
  );
}

function el(tag: string, className: string, text?: string): HTMLElement {
  const node = document.createElement(tag);
  node.className = className;
  if (text !== undefined) {
    node.textContent = text;
  }
  return node;
}

function renderHeader(view: TranscriptView): HTMLElement {
  const header = el("header", "status-bar");
  header.append(
    el("span", `conn conn-${view.connection}`, view.connection),
    el("span", "session-label",
       view.sessionIndex === null ? "no session" : `session ${view.sessionIndex + 1}`),
    el("span", "participants", view.participants.join(" · ")),
  );
  return header;
}

function renderTranscript(view: TranscriptView): HTMLElement {
  const list = el("main", "transcript");
  for (const entry of view.entries) {
    list.append(renderEntry(entry));
  }
  return list;
}

function renderEntry(entry: TranscriptEntry): HTMLElement {
  if (entry.type === "modality") {
    const card = el("figure", `modality-card modality-${entry.kind}`);
    card.dataset.itemId = entry.itemId;
    if (entry.kind === "image" && entry.assetUri) {
      const img = document.createElement("img");
      img.src = entry.assetUri;
      img.alt = entry.caption;
      img.onerror = () => {
        img.replaceWith(el("p", "caption-fallback", entry.caption));
      };
      card.append(img);
    } else if (entry.kind === "audio" && entry.assetUri) {
      const audio = document.createElement("audio");
      audio.controls = true;
      audio.src = entry.assetUri;
      card.append(audio);
    } else {
      // captions are the ground representation; no asset means caption + icon
      card.append(el("span", "kind-icon", entry.kind === "audio" ? "🔊" : "🖼"));
    }
    card.append(el("figcaption", "caption", entry.caption));
    return card;
  }
  const bubble = el("article", entry.optimistic ? "bubble optimistic" : "bubble");
  bubble.dataset.speaker = entry.speaker;
  bubble.append(el("span", "speaker", entry.speaker));
  bubble.append(el("p", "text", entry.text));
  if (entry.recallBadge) {
    bubble.append(el("span", "memory-badge", "recalled memory"));
  }
  if (entry.memoryRefs.length > 0) {
    bubble.append(el("span", "memory-refs", entry.memoryRefs.join(", ")));
  }
  return bubble;
}

function renderComposer(view: TranscriptView, callbacks: ViewCallbacks): HTMLElement {
  const form = document.createElement("form");
  form.className = "composer";
  const input = document.createElement("input");
  input.type = "text";
  input.placeholder = view.composerEnabled ? "say something…" : view.composerNote;
  input.disabled = !view.composerEnabled;
  const send = document.createElement("button");
  send.type = "submit";
  send.textContent = "send";
  send.disabled = !view.composerEnabled;
  const closeButton = document.createElement("button");
  closeButton.type = "button";
  closeButton.textContent = "close session";
  closeButton.onclick = () => callbacks.onCloseSession();
  form.append(input, send, closeButton);
  if (view.composerNote && !view.composerEnabled) {
    form.append(el("span", "composer-note", view.composerNote));
  }
  form.onsubmit = (e) => {
    e.preventDefault();
    const text = input.value.trim();
    if (!text) {
      input.classList.add("invalid"); // client-side block: empty never posts
      return;
    }
    input.classList.remove("invalid");
    callbacks.onSubmit(text);
    input.value = "";
  };
  return form;
}

function renderMemoryPanel(entries: MemoryPanelEntry[]): HTMLElement {
  const aside = el("aside", "memory-panel");
  aside.append(el("h2", "panel-title", "retrieved memories"));
  for (const entry of entries) {
    const row = el("section", "memory-entry");
    row.dataset.unitId = entry.unitId;
    row.append(
      el("span", "kind-icon", entry.kind === "audio" ? "🔊" : entry.kind === "image" ? "🖼" : "📝"),
      el("p", "memory-text", entry.text),
      el("span", "score", entry.score.toFixed(3)),
    );
    if (entry.linked.length > 0) {
      row.append(el("span", "linked", `linked: ${entry.linked.join(", ")}`));
    }
    aside.append(row);
  }
  return aside;
}

function renderIntervalPicker(view: TranscriptView, callbacks: ViewCallbacks): HTMLElement {
  const modal = el("div", view.intervalPickerOpen ? "interval-picker open" : "interval-picker");
  if (!view.intervalPickerOpen) {
    return modal;
  }
  modal.append(el("p", "picker-title", "When does the next session happen?"));
  for (const choice of INTERVAL_CHOICES) {
    const button = document.createElement("button");
    button.type = "button";
    button.textContent = choice.label;
    button.onclick = () => callbacks.onPickInterval(choice.value);
    modal.append(button);
  }
  return modal;
}

function renderToasts(view: TranscriptView, callbacks: ViewCallbacks): HTMLElement {
  const stack = el("div", "toasts");
  view.toasts.forEach((message, index) => {
    const toast = el("div", "toast", message);
    toast.onclick = () => callbacks.onDismissToast(index);
    stack.append(toast);
  });
  return stack;
}
