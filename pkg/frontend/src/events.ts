// Wire-event and payload shapes, mirroring docs/service.md.

export type GovTuple = [number, number, number, number, number];

export interface StateChangedEvent {
  kind: "state_changed";
  seq: number;
  phase: string;
  objects: string[];
}

export interface ViewEvaluatedEvent {
  kind: "view_evaluated";
  seq: number;
  view: number;
  score: GovTuple;
  move: string | null;
}

export interface DetectionPayload {
  label: string;
  bbox: [number, number, number, number];
  score: number;
  view: number;
  pointing: [number, number] | null;
}

export interface DetectionEvent {
  kind: "detection";
  seq: number;
  detections: DetectionPayload[];
}

export interface ProtocolReplyEvent {
  kind: "protocol_reply";
  seq: number;
  text: string;
  ok: boolean;
}

export type WireEvent =
  | StateChangedEvent
  | ViewEvaluatedEvent
  | DetectionEvent
  | ProtocolReplyEvent;

export interface SessionSnapshot {
  phase: string;
  objects: string[];
  scene: string | null;
  viewpoints: number;
  evaluated_views: number[];
  current_view: number;
  last_registered: string | null;
  event_seq: number;
}

export interface FramePayload {
  view: number;
  width: number;
  height: number;
  png: string;
  score: GovTuple | null;
  overlays: {
    boxes: { label: string; bbox: [number, number, number, number]; score: number }[];
    mask_outline: [number, number][];
    pointing: [number, number] | null;
  };
}
