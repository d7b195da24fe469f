"""HTTP facade for teaching sessions.

Single-process, in-memory, no auth: a thin transport over session.submit
plus read-only views of cached frames and the per-session event feed.
Commands are serialized per session by a lock, so concurrent submitters are
applied in arrival order and the final state equals sequential application.

Endpoints (all JSON unless noted; schemas in docs/service.md):

    POST /api/v1/sessions                     {"scene": path, "config": path|null}
    POST /api/v1/sessions/{id}/commands       {"utterance": text}
    GET  /api/v1/sessions/{id}/state
    GET  /api/v1/sessions/{id}/frames/{index|current}
    GET  /api/v1/sessions/{id}/events.json?since=N      (immediate snapshot)
    GET  /api/v1/sessions/{id}/events?since=N           (SSE push stream)

Events carry per-session sequence numbers starting at 1 with no gaps;
reconnecting with ?since=N resumes at N+1.
"""

from __future__ import annotations

import base64
import json
import re
import struct
import threading
import zlib
from dataclasses import dataclass, field
from http.server import BaseHTTPRequestHandler, ThreadingHTTPServer

import numpy as np

from .renderer import render
from .session import Session
from .store import Config, load_config, load_scene
from .viewsphere import camera_pose_for

API_PREFIX = "/api/v1"


def encode_png_rgb(image: np.ndarray) -> bytes:
    """Minimal lossless PNG encoder for (H, W, 3) uint8 images."""
    pixels = np.ascontiguousarray(image, dtype=np.uint8)
    height, width = pixels.shape[:2]
    raw = b"".join(b"\x00" + pixels[row].tobytes() for row in range(height))
    compressed = zlib.compress(raw, level=6)

    def chunk(tag: bytes, data: bytes) -> bytes:
        return (struct.pack(">I", len(data)) + tag + data
                + struct.pack(">I", zlib.crc32(tag + data) & 0xFFFFFFFF))

    out = bytearray(b"\x89PNG\r\n\x1a\n")
    out += chunk(b"IHDR", struct.pack(">IIBBBBB", width, height, 8, 2, 0, 0, 0))
    out += chunk(b"IDAT", compressed)
    out += chunk(b"IEND", b"")
    return bytes(out)


def mask_outline(bits: np.ndarray) -> list:
    """Boundary pixels of a mask as [u, v] pairs (scanline order)."""
    padded = np.zeros((bits.shape[0] + 2, bits.shape[1] + 2), dtype=bool)
    padded[1:-1, 1:-1] = bits
    interior = (padded[:-2, 1:-1] & padded[2:, 1:-1] &
                padded[1:-1, :-2] & padded[1:-1, 2:])
    vv, uu = np.nonzero(bits & ~interior)
    return [[int(u), int(v)] for u, v in zip(uu, vv)]


@dataclass
class ManagedSession:
    session: Session
    lock: threading.Lock = field(default_factory=threading.Lock)
    events: list = field(default_factory=list)
    cond: threading.Condition = field(default_factory=threading.Condition)
    last_detection: dict | None = None

    def emit(self, event: dict) -> None:
        with self.cond:
            stamped = dict(event)
            stamped["seq"] = len(self.events) + 1
            self.events.append(stamped)
            if event.get("kind") == "detection":
                self.last_detection = event["detections"][0] if event["detections"] else None
            self.cond.notify_all()

    def events_since(self, since: int) -> list:
        with self.cond:
            return [e for e in self.events if e["seq"] > since]

    def wait_for_event(self, since: int, timeout: float = 10.0):
        with self.cond:
            if len(self.events) <= since:
                self.cond.wait(timeout)
            return [e for e in self.events if e["seq"] > since]


class ServiceState:
    """All live sessions of one server process."""

    def __init__(self):
        self.sessions: dict = {}
        self.lock = threading.Lock()
        self._counter = 0

    def create_session(self, scene_path: str, config_path: str | None = None) -> str:
        scene = load_scene(scene_path)
        config = load_config(config_path) if config_path else Config()
        session = Session(scene, config, scene_path=scene_path)
        managed = ManagedSession(session=session)
        session.observers.append(managed.emit)
        with self.lock:
            self._counter += 1
            session_id = f"s{self._counter}"
            self.sessions[session_id] = managed
        return session_id

    def get(self, session_id: str) -> ManagedSession | None:
        with self.lock:
            return self.sessions.get(session_id)


def session_snapshot(managed: ManagedSession) -> dict:
    s = managed.session
    return {
        "phase": s.phase,
        "objects": s.registry.names(),
        "scene": s.scene_path,
        "viewpoints": s.sphere.viewpoint_count,
        "evaluated_views": sorted(s.frames),
        "current_view": s.current_view,
        "last_registered": s.last_registered,
        "event_seq": len(managed.events),
    }


def frame_payload(managed: ManagedSession, which: str) -> dict | None:
    """Encoded frame + overlays, or None when the view is unknown."""
    s = managed.session
    if which == "current":
        index = s.current_view
        if index not in s.frames:
            pose = camera_pose_for(s.sphere, index)
            frame = render(s.scene, pose, width=s.config.frame_width,
                           height=s.config.frame_height)
            s.frames[index] = (frame, None, None)
    else:
        try:
            index = int(which)
        except ValueError:
            return None
        if index not in s.frames:
            return None
    frame, mask, score = s.frames[index]
    overlays = {"boxes": [], "mask_outline": [], "pointing": None}
    if mask is not None:
        overlays["mask_outline"] = mask_outline(mask.mask)
    det = managed.last_detection
    if det is not None and det.get("view") == index:
        overlays["boxes"] = [{"label": det["label"], "bbox": det["bbox"],
                              "score": det["score"]}]
        overlays["pointing"] = det.get("pointing")
    return {
        "view": index,
        "width": frame.width,
        "height": frame.height,
        "png": base64.b64encode(encode_png_rgb(frame.color)).decode("ascii"),
        "score": list(score.as_tuple()) if score is not None else None,
        "overlays": overlays,
    }


_STATIC_TYPES = {".html": "text/html", ".js": "text/javascript",
                 ".css": "text/css", ".json": "application/json",
                 ".png": "image/png", ".map": "application/json"}


class _Handler(BaseHTTPRequestHandler):
    state: ServiceState = None       # bound by make_server
    static_root: str | None = None   # optional console bundle directory

    # -- plumbing ----------------------------------------------------------

    def log_message(self, fmt, *args):
        pass

    def _json(self, code: int, payload: dict) -> None:
        body = json.dumps(payload).encode("utf-8")
        self.send_response(code)
        self.send_header("Content-Type", "application/json")
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _error(self, code: int, message: str) -> None:
        self._json(code, {"error": message})

    def _read_body(self):
        try:
            length = int(self.headers.get("Content-Length", "0"))
            raw = self.rfile.read(length)
            return json.loads(raw.decode("utf-8"))
        except (ValueError, json.JSONDecodeError):
            return None

    def _query(self) -> dict:
        if "?" not in self.path:
            return {}
        out = {}
        for part in self.path.split("?", 1)[1].split("&"):
            if "=" in part:
                k, v = part.split("=", 1)
                out[k] = v
        return out

    def _route(self) -> str:
        return self.path.split("?", 1)[0]

    # -- verbs ---------------------------------------------------------------

    def do_POST(self):
        path = self._route()
        if path == f"{API_PREFIX}/sessions":
            body = self._read_body()
            if not isinstance(body, dict) or "scene" not in body:
                return self._error(400, "expected JSON body with a 'scene' path")
            try:
                session_id = self.state.create_session(body["scene"], body.get("config"))
            except Exception as exc:
                return self._error(400, f"could not create session: {exc}")
            return self._json(200, {"session": session_id})

        m = re.fullmatch(f"{API_PREFIX}/sessions/([^/]+)/commands", path)
        if m:
            managed = self.state.get(m.group(1))
            if managed is None:
                return self._error(404, f"unknown session {m.group(1)!r}")
            body = self._read_body()
            if not isinstance(body, dict) or not isinstance(body.get("utterance"), str):
                return self._error(400, "expected JSON body with an 'utterance' string")
            with managed.lock:
                response = managed.session.submit(body["utterance"])
                seq = len(managed.events)
            return self._json(200, {"ok": response.ok, "text": response.text,
                                    "payload": response.payload, "seq": seq})
        return self._error(404, f"no such endpoint: {path}")

    def do_GET(self):
        path = self._route()
        m = re.fullmatch(f"{API_PREFIX}/sessions/([^/]+)/state", path)
        if m:
            managed = self.state.get(m.group(1))
            if managed is None:
                return self._error(404, f"unknown session {m.group(1)!r}")
            return self._json(200, session_snapshot(managed))

        m = re.fullmatch(f"{API_PREFIX}/sessions/([^/]+)/frames/([^/]+)", path)
        if m:
            managed = self.state.get(m.group(1))
            if managed is None:
                return self._error(404, f"unknown session {m.group(1)!r}")
            with managed.lock:
                payload = frame_payload(managed, m.group(2))
            if payload is None:
                return self._error(404, f"unknown view {m.group(2)!r}")
            return self._json(200, payload)

        m = re.fullmatch(f"{API_PREFIX}/sessions/([^/]+)/events\\.json", path)
        if m:
            managed = self.state.get(m.group(1))
            if managed is None:
                return self._error(404, f"unknown session {m.group(1)!r}")
            since = int(self._query().get("since", "0"))
            return self._json(200, {"events": managed.events_since(since)})

        m = re.fullmatch(f"{API_PREFIX}/sessions/([^/]+)/events", path)
        if m:
            managed = self.state.get(m.group(1))
            if managed is None:
                return self._error(404, f"unknown session {m.group(1)!r}")
            return self._stream_events(managed)
        if self.static_root is not None and not path.startswith(API_PREFIX):
            return self._serve_static(path)
        return self._error(404, f"no such endpoint: {path}")

    def _serve_static(self, path: str) -> None:
        import os

        rel = path.lstrip("/") or "index.html"
        full = os.path.realpath(os.path.join(self.static_root, rel))
        root = os.path.realpath(self.static_root)
        if not full.startswith(root + os.sep) and full != root:
            return self._error(404, "not found")
        if not os.path.isfile(full):
            return self._error(404, f"not found: {path}")
        ext = os.path.splitext(full)[1]
        with open(full, "rb") as f:
            body = f.read()
        self.send_response(200)
        self.send_header("Content-Type", _STATIC_TYPES.get(ext, "application/octet-stream"))
        self.send_header("Content-Length", str(len(body)))
        self.end_headers()
        self.wfile.write(body)

    def _stream_events(self, managed: ManagedSession) -> None:
        query = self._query()
        since = int(query.get("since", "0"))
        max_events = int(query["max"]) if "max" in query else None
        self.send_response(200)
        self.send_header("Content-Type", "text/event-stream")
        self.send_header("Cache-Control", "no-cache")
        self.end_headers()
        sent = 0
        cursor = since
        try:
            while True:
                batch = managed.wait_for_event(cursor, timeout=15.0)
                for event in batch:
                    data = json.dumps(event)
                    self.wfile.write(f"id: {event['seq']}\ndata: {data}\n\n".encode())
                    cursor = event["seq"]
                    sent += 1
                    if max_events is not None and sent >= max_events:
                        return
                self.wfile.flush()
                if not batch and max_events is not None:
                    return
        except (BrokenPipeError, ConnectionResetError):
            return


def make_server(host: str = "127.0.0.1", port: int = 0,
                state: ServiceState | None = None,
                static_root: str | None = None) -> ThreadingHTTPServer:
    state = state or ServiceState()
    handler = type("BoundHandler", (_Handler,),
                   {"state": state, "static_root": static_root})
    server = ThreadingHTTPServer((host, port), handler)
    server.service_state = state
    return server


def serve(host: str = "127.0.0.1", port: int = 8787,
          static_root: str | None = None) -> None:
    server = make_server(host, port, static_root=static_root)
    where = f"http://{host}:{server.server_address[1]}"
    if static_root:
        print(f"serving API and console on {where} (static root {static_root})")
    else:
        print(f"serving API on {where}")
    try:
        server.serve_forever()
    except KeyboardInterrupt:
        server.shutdown()
