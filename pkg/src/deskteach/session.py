"""Teaching protocol: typed commands drive registration and queries.

Command parsing is keyword matching over normalized text. The state machine
is total: every (phase, command) pair produces a Response, failures
included, and a registration that fails partway leaves the registry exactly
as it was. Accepted commands append to an event log; replaying the log on a
fresh session reproduces the same final state because every stage is
seeded from the config.
"""

from __future__ import annotations

import re
from dataclasses import dataclass

import numpy as np

from .augmenter import TrainingSample, augment_2d, augment_3d
from .detector import Registry, extend_object, query, register_object
from .explorer import explore, make_scene_evaluator, select_canonical
from .renderer import SceneSpec, back_project, mirror_scene_z, render, scene_center
from .segmenter import NoDominantPlane, fit_dominant_plane
from .store import Config, load_scene, validate_config
from .viewsphere import build_view_sphere, camera_pose_for

ARTICLES = ("the ", "a ", "an ")

IDLE = "idle"
AWAITING_LABEL = "awaiting_label"
EXPLORING = "exploring"
READY = "ready"


class ParseError(Exception):
    pass


class CorruptLog(Exception):
    pass


@dataclass(frozen=True)
class Command:
    kind: str            # start | label | flip | finish | query | list | load | quit
    arg: str | None = None


@dataclass(frozen=True)
class Response:
    text: str
    ok: bool = True
    payload: dict | None = None


def _normalize(utterance: str) -> str:
    text = re.sub(r"[.!?,]+", " ", utterance.lower())
    return re.sub(r"\s+", " ", text).strip()


def _strip_article(name: str) -> str:
    for art in ARTICLES:
        if name.startswith(art):
            return name[len(art):]
    return name


def parse_command(utterance: str) -> Command:
    """Keyword matching; raises ParseError on anything unrecognized."""
    norm = _normalize(utterance)
    if not norm:
        raise ParseError("I did not understand")
    if norm.startswith("start") and "registration" in norm:
        return Command("start")
    if norm.startswith("this is "):
        name = _strip_article(norm[len("this is "):].strip())
        if not name:
            raise ParseError("I did not understand the name")
        return Command("label", name)
    if norm.startswith("where is "):
        name = _strip_article(norm[len("where is "):].strip())
        if not name:
            raise ParseError("I did not understand the name")
        return Command("query", name)
    if norm.startswith("flip"):
        return Command("flip")
    if norm in ("done", "finish") or norm.startswith("finish"):
        return Command("finish")
    if norm == "list" or norm.startswith("list "):
        return Command("list")
    if norm.startswith("load"):
        m = re.match(r"\s*load(?:\s+scene)?\s+(.+?)\s*$", utterance.strip(), re.IGNORECASE)
        if not m:
            raise ParseError("I did not understand the scene path")
        return Command("load", m.group(1).rstrip(".!?"))
    if norm in ("quit", "exit"):
        return Command("quit")
    raise ParseError("I did not understand")


class Session:
    """One teacher, one scene, one registry."""

    def __init__(self, scene: SceneSpec, config: Config | None = None,
                 scene_path: str | None = None):
        self.config = config or Config()
        validate_config(self.config)
        self.scene = scene
        self.scene_path = scene_path
        self.sphere = build_view_sphere(self.config.sphere_frequency,
                                        self.config.sphere_radius,
                                        self.config.sphere_cutoff)
        self.registry = Registry(unknown_threshold=self.config.detector_threshold)
        self.phase = IDLE
        self.log: list = []
        self.last_registered: str | None = None
        self.current_view = 0
        self.frames: dict = {}          # view index -> (frame, mask, score)
        self.last_exploration = None
        self.observers: list = []
        self.done = False

    # -- events ------------------------------------------------------------

    def _emit(self, event: dict) -> None:
        for observer in self.observers:
            observer(event)

    def _set_phase(self, phase: str) -> None:
        self.phase = phase
        self._emit({"kind": "state_changed", "phase": phase,
                    "objects": self.registry.names()})

    # -- command surface ---------------------------------------------------

    def submit(self, utterance: str) -> Response:
        """Parse, log, and apply one utterance; never raises."""
        try:
            command = parse_command(utterance)
        except ParseError as exc:
            response = Response(text=str(exc), ok=False)
            self._emit({"kind": "protocol_reply", "text": response.text, "ok": False})
            return response
        self.log.append(utterance)
        response = self.step(command)
        self._emit({"kind": "protocol_reply", "text": response.text, "ok": response.ok})
        return response

    def step(self, command: Command) -> Response:
        try:
            return self._dispatch(command)
        except Exception as exc:  # the session survives anything
            self._set_phase(IDLE if self.phase == EXPLORING else self.phase)
            return Response(text=f"that failed: {exc}", ok=False)

    def _dispatch(self, command: Command) -> Response:
        if self.phase == EXPLORING:
            return Response(text="I am busy exploring, one moment", ok=False)
        handler = getattr(self, f"_cmd_{command.kind}", None)
        if handler is None:
            return Response(text="I did not understand", ok=False)
        return handler(command)

    # -- handlers ------------------------------------------------------------

    def _cmd_start(self, command: Command) -> Response:
        if self.phase == AWAITING_LABEL:
            return Response(text="I am already waiting for the object's name", ok=False)
        self._set_phase(AWAITING_LABEL)
        return Response(text="Put the object on the table and tell me its name "
                             "(\"This is the ...\")")

    def _cmd_label(self, command: Command) -> Response:
        if self.phase != AWAITING_LABEL:
            return Response(text="Say \"start object registration\" first", ok=False)
        name = command.arg
        if name in self.registry:
            return Response(text=f"I already know {name}; pick another name", ok=False)
        return self._register(name)

    def _cmd_query(self, command: Command) -> Response:
        name = command.arg
        if not self.registry.models:
            return Response(text="no objects registered", ok=False)
        if name not in self.registry:
            return Response(text=f"I don't know this object: {name}", ok=False)
        frame, plane = self._capture(self.current_view)
        if plane is None:
            return Response(text="I cannot see the table", ok=False)
        found = query(self.registry, frame, plane, name,
                      min_height=self.config.seg_min_height,
                      min_pixels=self.config.seg_min_pixels)
        if found is None:
            return Response(text=f"I do not see {name} on the table")
        u0, v0, u1, v1 = found.bbox
        cx, cy = (u0 + u1) / 2.0, (v0 + v1) / 2.0
        pointing = np.array([cx - frame.width / 2.0, cy - frame.height / 2.0])
        norm = np.linalg.norm(pointing)
        pointing = (pointing / norm).tolist() if norm > 0 else [0.0, 0.0]
        payload = {"label": found.label, "bbox": [u0, v0, u1, v1],
                   "score": found.score, "view": self.current_view,
                   "pointing": pointing}
        self._emit({"kind": "detection", "detections": [payload]})
        return Response(text=f"{name} is here (box {u0},{v0}..{u1},{v1})",
                        payload=payload)

    def _cmd_flip(self, command: Command) -> Response:
        if self.phase != READY or self.last_registered is None:
            return Response(text="Flip is only useful right after a registration", ok=False)
        mirrored = mirror_scene_z(self.scene)
        samples, visited, canonical = self._collect_samples(mirrored, self.last_registered)
        if not samples:
            return Response(text="the flipped side shows no object", ok=False)
        extend_object(self.registry, self.last_registered, samples)
        return Response(text=f"captured the flipped side of {self.last_registered}: "
                             f"{len(samples)} more samples from {visited} views")

    def _cmd_finish(self, command: Command) -> Response:
        if self.phase == AWAITING_LABEL:
            self._set_phase(IDLE)
            return Response(text="registration cancelled")
        if self.phase == READY:
            self._set_phase(IDLE)
            return Response(text="registration finished")
        return Response(text="nothing to finish", ok=False)

    def _cmd_list(self, command: Command) -> Response:
        names = self.registry.names()
        if not names:
            return Response(text="no objects registered")
        return Response(text="I know: " + ", ".join(names),
                        payload={"objects": names})

    def _cmd_load(self, command: Command) -> Response:
        try:
            scene = load_scene(command.arg)
        except Exception as exc:
            return Response(text=f"could not load scene: {exc}", ok=False)
        self.scene = scene
        self.scene_path = command.arg
        self.frames.clear()
        self.current_view = 0
        return Response(text=f"loaded scene {command.arg} "
                             f"({len(scene.objects)} objects)")

    def _cmd_quit(self, command: Command) -> Response:
        self.done = True
        return Response(text="bye")

    # -- pipeline ------------------------------------------------------------

    def _capture(self, view_index: int):
        """Render the current scene from one sphere viewpoint and fit the table."""
        pose = camera_pose_for(self.sphere, view_index, target=scene_center(self.scene))
        frame = render(self.scene, pose, width=self.config.frame_width,
                       height=self.config.frame_height,
                       depth_noise_sigma=self.config.depth_noise_sigma,
                       noise_seed=self.config.noise_seed)
        try:
            plane = fit_dominant_plane(back_project(frame),
                                       iterations=self.config.seg_iterations,
                                       inlier_threshold=self.config.seg_inlier_threshold,
                                       seed=self.config.explorer_seed,
                                       min_inlier_fraction=self.config.seg_min_plane_fraction)
        except (NoDominantPlane, ValueError):
            return frame, None
        return frame, plane

    def _collect_samples(self, scene: SceneSpec, label: str):
        """Explore a scene and expand its canonical views into samples."""
        config = self.config
        base_eval = make_scene_evaluator(scene, self.sphere, config.gov_weights(),
                                         **config.evaluator_kwargs())

        def eval_and_notify(index):
            score, frame, mask = base_eval(index)
            self.frames[index] = (frame, mask, score)
            self._emit({"kind": "view_evaluated", "view": index,
                        "score": score.as_tuple(), "move": None})
            return score, frame, mask

        state = explore(scene, self.sphere, budget=config.explorer_budget,
                        evaluator=eval_and_notify)
        canonical = select_canonical(state, config.explorer_k)
        self.last_exploration = state

        samples: list = []
        for view in canonical.views:
            if view.mask is None:
                continue
            base = TrainingSample(image=view.frame.color.copy(), mask=view.mask,
                                  label=label, provenance=(view.index, "capture"))
            samples.extend(augment_2d(base, config.augment_2d_params()))
            samples.extend(augment_3d(scene, self.sphere, view.index, label,
                                      jitter=config.aug_jitter, count=config.aug_draws,
                                      seed=config.explorer_seed,
                                      width=config.frame_width, height=config.frame_height,
                                      seg_seed=config.explorer_seed,
                                      min_height=config.seg_min_height,
                                      min_pixels=config.seg_min_pixels))
        best_view = canonical.views[0].index if canonical.views else 0
        return samples, len(state.visited), best_view

    def _register(self, name: str) -> Response:
        self._set_phase(EXPLORING)
        try:
            samples, visited, best_view = self._collect_samples(self.scene, name)
            if not samples:
                self._set_phase(IDLE)
                return Response(text="I could not find an object on the table; "
                                     "registration cancelled", ok=False)
            register_object(self.registry, name, samples)
        except Exception:
            self._set_phase(IDLE)
            raise
        self.last_registered = name
        self.current_view = 0  # park back at the calibrated top view
        self._set_phase(READY)
        return Response(text=f"registered {name}: {visited} views explored, "
                             f"{len(samples)} training samples",
                        payload={"label": name, "views": visited,
                                 "samples": len(samples), "best_view": best_view})


def save_log(session: Session, path) -> None:
    """Persist the accepted-command log, one utterance per line."""
    with open(path, "w", encoding="utf-8") as f:
        for line in session.log:
            f.write(line + "\n")


def load_log(path) -> list:
    with open(path, "r", encoding="utf-8") as f:
        return [line.rstrip("\n") for line in f if line.strip()]


def replay(lines, scene: SceneSpec, config: Config | None = None,
           scene_path: str | None = None) -> Session:
    """Rebuild a session by reapplying a recorded command log."""
    for i, line in enumerate(lines, start=1):
        try:
            parse_command(line)
        except ParseError as exc:
            raise CorruptLog(f"log line {i}: {exc}") from None
    session = Session(scene, config, scene_path)
    for line in lines:
        session.submit(line)
    return session
