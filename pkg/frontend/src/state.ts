// Pure console state: a fold over the service's event stream.
//
// The console never recomputes GOV or detections; everything rendered is
// data received from the service. Applying an event is idempotent by
// sequence number, so replaying a recorded stream rebuilds the identical
// state. A sequence gap never applies out of order: it flags exactly one
// pending resync, and the driver fetches the missed span from
// /events.json before continuing.

import type { DetectionPayload, GovTuple, WireEvent } from "./events.js";

export type Connection = "connected" | "disconnected";

export interface ScrollbackEntry {
  kind: "command" | "reply" | "error";
  text: string;
}

export interface ConsoleState {
  connection: Connection;
  phase: string;
  objects: string[];
  govMap: Map<number, GovTuple>;
  detections: DetectionPayload[];
  scrollback: ScrollbackEntry[];
  lastSeq: number;
  pendingResync: boolean;
  framesEvaluated: number;
}

export function initialState(): ConsoleState {
  return {
    connection: "disconnected",
    phase: "idle",
    objects: [],
    govMap: new Map(),
    detections: [],
    scrollback: [],
    lastSeq: 0,
    pendingResync: false,
    framesEvaluated: 0,
  };
}

export function applyEvent(state: ConsoleState, event: WireEvent): ConsoleState {
  if (event.seq <= state.lastSeq) {
    return state; // duplicate delivery; idempotent by sequence number
  }
  if (event.seq > state.lastSeq + 1) {
    if (state.pendingResync) {
      return state; // one resync covers the whole gap
    }
    return { ...state, pendingResync: true };
  }
  const next: ConsoleState = {
    ...state,
    govMap: new Map(state.govMap),
    detections: [...state.detections],
    scrollback: [...state.scrollback],
    objects: [...state.objects],
    lastSeq: event.seq,
  };
  switch (event.kind) {
    case "state_changed":
      next.phase = event.phase;
      next.objects = [...event.objects];
      break;
    case "view_evaluated":
      next.govMap.set(event.view, event.score);
      next.framesEvaluated += 1;
      break;
    case "detection":
      next.detections = [...event.detections];
      break;
    case "protocol_reply":
      next.scrollback.push({ kind: event.ok ? "reply" : "error", text: event.text });
      break;
  }
  return next;
}

export function applyEvents(state: ConsoleState, events: WireEvent[]): ConsoleState {
  let out = state;
  for (const event of events) {
    out = applyEvent(out, event);
  }
  return out;
}

export function recordCommand(state: ConsoleState, text: string): ConsoleState {
  return { ...state, scrollback: [...state.scrollback, { kind: "command", text }] };
}

export function setConnection(state: ConsoleState, connection: Connection): ConsoleState {
  return { ...state, connection };
}

export function clearResync(state: ConsoleState): ConsoleState {
  return { ...state, pendingResync: false };
}

/** Comparable digest used by tests and by the status footer. */
export function summarize(state: ConsoleState) {
  return {
    phase: state.phase,
    objects: [...state.objects],
    govNodes: [...state.govMap.keys()].sort((a, b) => a - b),
    framesEvaluated: state.framesEvaluated,
    scrollback: state.scrollback.map((entry) => `${entry.kind}:${entry.text}`),
    detections: state.detections.map((d) => `${d.label}@${d.bbox.join(",")}`),
    lastSeq: state.lastSeq,
  };
}

/**
 * Feed one live event; when a gap is detected, `resync` is asked once for
 * every event after `lastSeq` and the returned span is folded in order.
 */
export async function ingest(
  state: ConsoleState,
  event: WireEvent,
  resync: (since: number) => Promise<WireEvent[]>,
): Promise<ConsoleState> {
  let next = applyEvent(state, event);
  if (next.pendingResync) {
    const span = await resync(next.lastSeq);
    next = applyEvents(clearResync(next), span);
  }
  return next;
}
