// Thin HTTP/SSE client for the teaching service (docs/service.md).

import type { FramePayload, SessionSnapshot, WireEvent } from "./events.js";

export interface CommandReply {
  ok: boolean;
  text: string;
  payload: Record<string, unknown> | null;
  seq: number;
}

export class ServiceClient {
  constructor(private readonly base: string = "/api/v1") {}

  async createSession(scene: string, config: string | null = null): Promise<string> {
    const reply = await this.post(`${this.base}/sessions`, { scene, config });
    return (reply as { session: string }).session;
  }

  async submitCommand(sessionId: string, utterance: string): Promise<CommandReply> {
    return (await this.post(
      `${this.base}/sessions/${sessionId}/commands`,
      { utterance },
    )) as CommandReply;
  }

  async state(sessionId: string): Promise<SessionSnapshot> {
    return (await this.get(`${this.base}/sessions/${sessionId}/state`)) as SessionSnapshot;
  }

  async frame(sessionId: string, which: number | "current"): Promise<FramePayload> {
    return (await this.get(
      `${this.base}/sessions/${sessionId}/frames/${which}`,
    )) as FramePayload;
  }

  async eventsSince(sessionId: string, since: number): Promise<WireEvent[]> {
    const reply = (await this.get(
      `${this.base}/sessions/${sessionId}/events.json?since=${since}`,
    )) as { events: WireEvent[] };
    return reply.events;
  }

  /** One EventSource per session tab; caller owns closing it. */
  openStream(sessionId: string, since: number): EventSource {
    return new EventSource(`${this.base}/sessions/${sessionId}/events?since=${since}`);
  }

  private async get(url: string): Promise<unknown> {
    const response = await fetch(url);
    if (!response.ok) {
      throw new Error(`${url}: HTTP ${response.status}`);
    }
    return response.json();
  }

  private async post(url: string, body: unknown): Promise<unknown> {
    const response = await fetch(url, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(body),
    });
    if (!response.ok) {
      throw new Error(`${url}: HTTP ${response.status}`);
    }
    return response.json();
  }
}
