// Canvas overlay drawing: detection boxes, mask outlines, pointing arrow.
// Pure pass-through of service payloads; the console computes nothing.

import type { FramePayload } from "./events.js";

export function drawOverlays(
  ctx: CanvasRenderingContext2D,
  frame: FramePayload,
  scale: number,
): void {
  ctx.clearRect(0, 0, frame.width * scale, frame.height * scale);

  ctx.fillStyle = "rgba(80, 220, 130, 0.8)";
  for (const [u, v] of frame.overlays.mask_outline) {
    ctx.fillRect(u * scale, v * scale, scale, scale);
  }

  ctx.lineWidth = 2;
  ctx.font = `${12}px sans-serif`;
  for (const box of frame.overlays.boxes) {
    const [u0, v0, u1, v1] = box.bbox;
    ctx.strokeStyle = "#00e0ff";
    ctx.strokeRect(u0 * scale, v0 * scale, (u1 - u0 + 1) * scale, (v1 - v0 + 1) * scale);
    const label = `${box.label} ${(box.score * 100).toFixed(0)}%`;
    ctx.fillStyle = "rgba(0,0,0,0.65)";
    const w = ctx.measureText(label).width + 8;
    ctx.fillRect(u0 * scale, Math.max(0, v0 * scale - 16), w, 16);
    ctx.fillStyle = "#fff";
    ctx.fillText(label, u0 * scale + 4, Math.max(12, v0 * scale - 4));
  }

  if (frame.overlays.pointing) {
    const [dx, dy] = frame.overlays.pointing;
    const cx = (frame.width / 2) * scale;
    const cy = (frame.height / 2) * scale;
    const len = 28 * scale * 0.25;
    ctx.strokeStyle = "#ffd24a";
    ctx.beginPath();
    ctx.moveTo(cx, cy);
    ctx.lineTo(cx + dx * len, cy + dy * len);
    ctx.stroke();
  }
}
