// DOM wiring for the teaching console: frame panel with overlays, the
// hemisphere GOV map, scrollback, and the command input (with the three
// teaching phrases as one-click templates). All data comes from the
// service; this file only renders ConsoleState and forwards commands.

import { ServiceClient } from "./client.js";
import type { WireEvent } from "./events.js";
import { drawOverlays } from "./overlay.js";
import { govColor, projectDirection, toCanvas } from "./projection.js";
import {
  ConsoleState,
  applyEvents,
  clearResync,
  ingest,
  initialState,
  recordCommand,
  setConnection,
} from "./state.js";

const TEMPLATES = [
  "Start object registration.",
  "This is the input shaft.",
  "Where is the input shaft?",
  "flip",
  "finish",
  "list",
];

const FRAME_SCALE = 3;
const MAP_SIZE = 260;
const REPLY_TIMEOUT_MS = 120_000;

export class ConsoleApp {
  private state: ConsoleState = initialState();
  private stream: EventSource | null = null;
  private inFlight = false;
  private directions = new Map<number, [number, number, number]>();

  constructor(
    private readonly client: ServiceClient,
    private readonly root: Document,
    private sessionId: string,
  ) {}

  async start(): Promise<void> {
    this.state = setConnection(this.state, "connected");
    const span = await this.client.eventsSince(this.sessionId, 0);
    this.state = applyEvents(this.state, span);
    this.openStream();
    this.render();
  }

  private openStream(): void {
    this.stream?.close();
    const stream = this.client.openStream(this.sessionId, this.state.lastSeq);
    stream.onmessage = (message) => {
      const event = JSON.parse(message.data) as WireEvent;
      void this.onEvent(event);
    };
    stream.onerror = () => {
      this.state = setConnection(this.state, "disconnected");
      this.render();
    };
    this.stream = stream;
  }

  private async onEvent(event: WireEvent): Promise<void> {
    this.state = await ingest(this.state, event, (since) =>
      this.client.eventsSince(this.sessionId, since),
    );
    this.state = clearResync(setConnection(this.state, "connected"));
    await this.refreshFrame();
    this.render();
  }

  async sendCommand(text: string): Promise<void> {
    if (this.inFlight || !text.trim()) {
      return; // input stays disabled until the reply or a timeout
    }
    this.inFlight = true;
    this.state = recordCommand(this.state, text);
    this.render();
    const timeout = new Promise<never>((_, reject) =>
      setTimeout(() => reject(new Error("timed out")), REPLY_TIMEOUT_MS),
    );
    try {
      await Promise.race([this.client.submitCommand(this.sessionId, text), timeout]);
    } catch (error) {
      this.state = {
        ...this.state,
        scrollback: [
          ...this.state.scrollback,
          { kind: "error", text: `transport: ${(error as Error).message}` },
        ],
      };
    } finally {
      this.inFlight = false;
      this.render();
    }
  }

  private async refreshFrame(): Promise<void> {
    const canvas = this.root.getElementById("frame") as HTMLCanvasElement | null;
    const overlayCanvas = this.root.getElementById("overlay") as HTMLCanvasElement | null;
    if (!canvas || !overlayCanvas) {
      return;
    }
    try {
      const frame = await this.client.frame(this.sessionId, "current");
      canvas.width = frame.width * FRAME_SCALE;
      canvas.height = frame.height * FRAME_SCALE;
      overlayCanvas.width = canvas.width;
      overlayCanvas.height = canvas.height;
      const image = new Image();
      image.onload = () => {
        const ctx = canvas.getContext("2d");
        if (ctx) {
          ctx.imageSmoothingEnabled = false;
          ctx.drawImage(image, 0, 0, canvas.width, canvas.height);
        }
        const octx = overlayCanvas.getContext("2d");
        if (octx) {
          drawOverlays(octx, frame, FRAME_SCALE);
        }
      };
      image.src = `data:image/png;base64,${frame.png}`;
    } catch {
      // the frame cache can be empty early in a session; keep the panel blank
    }
  }

  /** Viewpoint directions arrive once from the sidecar JSON (see index.html). */
  setDirections(directions: [number, number, number][]): void {
    directions.forEach((d, i) => this.directions.set(i, d));
  }

  private render(): void {
    const status = this.root.getElementById("status");
    if (status) {
      status.textContent =
        this.state.connection === "connected"
          ? `phase: ${this.state.phase} | objects: ${this.state.objects.join(", ") || "none"}`
          : "disconnected, reconnecting...";
      status.className = this.state.connection;
    }

    const banner = this.root.getElementById("reconnect-banner");
    if (banner) {
      banner.style.display = this.state.connection === "connected" ? "none" : "block";
    }

    const scrollback = this.root.getElementById("scrollback");
    if (scrollback) {
      scrollback.innerHTML = "";
      for (const entry of this.state.scrollback) {
        const line = this.root.createElement("div");
        line.className = `line ${entry.kind}`;
        line.textContent = (entry.kind === "command" ? "teacher> " : "robot> ") + entry.text;
        scrollback.appendChild(line);
      }
      scrollback.scrollTop = scrollback.scrollHeight;
    }

    const input = this.root.getElementById("command") as HTMLInputElement | null;
    const send = this.root.getElementById("send") as HTMLButtonElement | null;
    if (input) {
      input.disabled = this.inFlight;
    }
    if (send) {
      send.disabled = this.inFlight;
    }

    this.renderMap();
  }

  private renderMap(): void {
    const canvas = this.root.getElementById("govmap") as HTMLCanvasElement | null;
    if (!canvas) {
      return;
    }
    canvas.width = MAP_SIZE;
    canvas.height = MAP_SIZE;
    const ctx = canvas.getContext("2d");
    if (!ctx) {
      return;
    }
    ctx.fillStyle = "#10141c";
    ctx.fillRect(0, 0, MAP_SIZE, MAP_SIZE);
    ctx.strokeStyle = "#2a3344";
    ctx.beginPath();
    ctx.arc(MAP_SIZE / 2, MAP_SIZE / 2, MAP_SIZE * 0.46, 0, 2 * Math.PI);
    ctx.stroke();
    for (const [view, direction] of this.directions) {
      const [x, y] = toCanvas(projectDirection(direction), MAP_SIZE);
      const score = this.state.govMap.get(view);
      ctx.fillStyle = score ? govColor(score[4]) : "#39435a";
      ctx.beginPath();
      ctx.arc(x, y, score ? 5 : 2.5, 0, 2 * Math.PI);
      ctx.fill();
    }
  }

  wireInput(): void {
    const input = this.root.getElementById("command") as HTMLInputElement | null;
    const send = this.root.getElementById("send") as HTMLButtonElement | null;
    const templates = this.root.getElementById("templates");
    if (send && input) {
      send.addEventListener("click", () => {
        void this.sendCommand(input.value);
        input.value = "";
      });
      input.addEventListener("keydown", (ev) => {
        if ((ev as KeyboardEvent).key === "Enter") {
          void this.sendCommand(input.value);
          input.value = "";
        }
      });
    }
    if (templates) {
      for (const phrase of TEMPLATES) {
        const button = this.root.createElement("button");
        button.textContent = phrase;
        button.addEventListener("click", () => void this.sendCommand(phrase));
        templates.appendChild(button);
      }
    }
  }
}

export async function boot(root: Document, scenePath: string): Promise<ConsoleApp> {
  const client = new ServiceClient();
  const sessionId = await client.createSession(scenePath);
  const app = new ConsoleApp(client, root, sessionId);
  app.wireInput();
  await app.start();
  return app;
}
