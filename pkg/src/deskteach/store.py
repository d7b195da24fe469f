"""Persistence: config, registry and scene text formats, CSV output.

Every format is line-oriented text with a magic+version header so files are
diffable and versioned. Serialization is canonical (fixed key order, repr
floats), which makes save -> load -> save a byte-level identity. Loaders
never mutate live objects: they either return a fresh value or raise with
the offending path, line, or field named.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field, replace

import numpy as np

from .augmenter import Augment2dParams
from .gov import GovWeights
from .meshes import Mesh
from .renderer import Lighting, SceneObject, SceneSpec, Table
from .detector import Registry, ObjectModel, FEATURE_DIM

CONFIG_MAGIC = "deskteach-config"
REGISTRY_MAGIC = "deskteach-registry"
SCENE_MAGIC = "deskteach-scene"
FORMAT_VERSION = 1


class StoreError(Exception):
    pass


class FormatError(StoreError):
    """Parse failure; message carries file and line number."""


@dataclass(frozen=True)
class Config:
    sphere_frequency: int = 4
    sphere_radius: float = 350.0
    sphere_cutoff: float = -0.10
    frame_width: int = 160
    frame_height: int = 120
    focal: float = 120.0
    depth_noise_sigma: float = 0.0
    noise_seed: int = 0
    gov_w_sil: float = 0.25
    gov_w_depth: float = 0.25
    gov_w_curv: float = 0.25
    gov_w_color: float = 0.25
    gov_depth_bins: int = 32
    gov_curv_bins: int = 32
    gov_hue_bins: int = 30
    gov_gray_bins: int = 8
    explorer_budget: int = 12
    explorer_k: int = 5
    explorer_seed: int = 0
    seg_iterations: int = 200
    seg_inlier_threshold: float = 3.0
    seg_min_height: float = 5.0
    seg_min_pixels: int = 30
    seg_min_plane_fraction: float = 0.2
    aug_rotations: tuple = (0.0, -15.0, 15.0, 90.0)
    aug_scales: tuple = (0.8, 1.0, 1.25)
    aug_flip: bool = True
    aug_backgrounds: tuple = ((40, 40, 40), (210, 210, 205))
    aug_jitter: float = 0.08
    aug_draws: int = 4
    detector_threshold: float = 0.8

    def gov_weights(self) -> GovWeights:
        return GovWeights(self.gov_w_sil, self.gov_w_depth, self.gov_w_curv, self.gov_w_color)

    def augment_2d_params(self) -> Augment2dParams:
        flips = (False, True) if self.aug_flip else (False,)
        return Augment2dParams(rotations_deg=self.aug_rotations, scales=self.aug_scales,
                               flips=flips, backgrounds=self.aug_backgrounds)

    def evaluator_kwargs(self) -> dict:
        return dict(width=self.frame_width, height=self.frame_height,
                    seg_seed=self.explorer_seed, ransac_iterations=self.seg_iterations,
                    inlier_threshold=self.seg_inlier_threshold,
                    min_height=self.seg_min_height, min_pixels=self.seg_min_pixels,
                    depth_bins=self.gov_depth_bins, curv_bins=self.gov_curv_bins,
                    hue_bins=self.gov_hue_bins, gray_bins=self.gov_gray_bins,
                    depth_noise_sigma=self.depth_noise_sigma, noise_seed=self.noise_seed)


def _fmt_float(x: float) -> str:
    return repr(float(x))


def _fmt_floats(xs) -> str:
    return ";".join(_fmt_float(x) for x in xs)


def _fmt_colors(cs) -> str:
    return ";".join(",".join(str(int(v)) for v in c) for c in cs)


def _parse_floats(text: str) -> tuple:
    return tuple(float(p) for p in text.split(";") if p != "")


def _parse_colors(text: str) -> tuple:
    out = []
    for part in text.split(";"):
        nums = [int(v) for v in part.split(",")]
        if len(nums) != 3 or not all(0 <= v <= 255 for v in nums):
            raise ValueError(f"bad color triple {part!r}")
        out.append(tuple(nums))
    return tuple(out)


def _parse_bool(text: str) -> bool:
    if text not in ("true", "false"):
        raise ValueError(f"expected true/false, got {text!r}")
    return text == "true"


# key in file, dataclass attribute, (parse, format) pair
_CONFIG_FIELDS = [
    ("sphere.frequency", "sphere_frequency", int, str),
    ("sphere.radius", "sphere_radius", float, _fmt_float),
    ("sphere.cutoff", "sphere_cutoff", float, _fmt_float),
    ("frame.width", "frame_width", int, str),
    ("frame.height", "frame_height", int, str),
    ("frame.focal", "focal", float, _fmt_float),
    ("frame.depth_noise_sigma", "depth_noise_sigma", float, _fmt_float),
    ("frame.noise_seed", "noise_seed", int, str),
    ("gov.w_sil", "gov_w_sil", float, _fmt_float),
    ("gov.w_depth", "gov_w_depth", float, _fmt_float),
    ("gov.w_curv", "gov_w_curv", float, _fmt_float),
    ("gov.w_color", "gov_w_color", float, _fmt_float),
    ("gov.depth_bins", "gov_depth_bins", int, str),
    ("gov.curv_bins", "gov_curv_bins", int, str),
    ("gov.hue_bins", "gov_hue_bins", int, str),
    ("gov.gray_bins", "gov_gray_bins", int, str),
    ("explorer.budget", "explorer_budget", int, str),
    ("explorer.canonical_k", "explorer_k", int, str),
    ("explorer.seed", "explorer_seed", int, str),
    ("segmenter.iterations", "seg_iterations", int, str),
    ("segmenter.inlier_threshold", "seg_inlier_threshold", float, _fmt_float),
    ("segmenter.min_height", "seg_min_height", float, _fmt_float),
    ("segmenter.min_pixels", "seg_min_pixels", int, str),
    ("segmenter.min_plane_fraction", "seg_min_plane_fraction", float, _fmt_float),
    ("augment.rotations", "aug_rotations", _parse_floats, _fmt_floats),
    ("augment.scales", "aug_scales", _parse_floats, _fmt_floats),
    ("augment.flip", "aug_flip", _parse_bool, lambda b: "true" if b else "false"),
    ("augment.backgrounds", "aug_backgrounds", _parse_colors, _fmt_colors),
    ("augment.jitter", "aug_jitter", float, _fmt_float),
    ("augment.draws", "aug_draws", int, str),
    ("detector.threshold", "detector_threshold", float, _fmt_float),
]

_KEY_TO_FIELD = {key: (attr, parse) for key, attr, parse, _ in _CONFIG_FIELDS}


def validate_config(config: Config) -> None:
    """Range checks; raises naming the offending field and its bound."""
    checks = [
        ("sphere.frequency", config.sphere_frequency >= 1, ">= 1"),
        ("sphere.radius", config.sphere_radius > 0, "> 0"),
        ("sphere.cutoff", -1.0 <= config.sphere_cutoff <= 1.0, "in [-1, 1]"),
        ("frame.width", config.frame_width >= 16, ">= 16"),
        ("frame.height", config.frame_height >= 16, ">= 16"),
        ("frame.focal", config.focal > 0, "> 0"),
        ("frame.depth_noise_sigma", config.depth_noise_sigma >= 0, ">= 0"),
        ("gov.depth_bins", config.gov_depth_bins >= 2, ">= 2"),
        ("gov.curv_bins", config.gov_curv_bins >= 2, ">= 2"),
        ("gov.hue_bins", config.gov_hue_bins >= 2, ">= 2"),
        ("gov.gray_bins", config.gov_gray_bins >= 1, ">= 1"),
        ("explorer.budget", config.explorer_budget >= 1, ">= 1"),
        ("explorer.canonical_k", config.explorer_k >= 1, ">= 1"),
        ("segmenter.iterations", config.seg_iterations >= 1, ">= 1"),
        ("segmenter.inlier_threshold", config.seg_inlier_threshold > 0, "> 0"),
        ("segmenter.min_height", config.seg_min_height > 0, "> 0"),
        ("segmenter.min_pixels", config.seg_min_pixels >= 1, ">= 1"),
        ("segmenter.min_plane_fraction", 0 < config.seg_min_plane_fraction <= 1, "in (0, 1]"),
        ("augment.scales", all(s > 0 for s in config.aug_scales), "all > 0"),
        ("augment.jitter", 0 <= config.aug_jitter < np.pi / 8, "in [0, pi/8)"),
        ("augment.draws", config.aug_draws >= 0, ">= 0"),
        ("detector.threshold", config.detector_threshold > 0, "> 0"),
    ]
    for name, ok, bound in checks:
        if not ok:
            raise StoreError(f"config field {name} out of range (must be {bound})")
    w = [config.gov_w_sil, config.gov_w_depth, config.gov_w_curv, config.gov_w_color]
    if any(x < 0 for x in w) or abs(sum(w) - 1.0) > 1e-9:
        raise StoreError("config field gov.weights invalid: must be nonnegative and sum to 1")


def config_to_text(config: Config) -> str:
    lines = [f"{CONFIG_MAGIC} v{FORMAT_VERSION}"]
    for key, attr, _, fmt in _CONFIG_FIELDS:
        lines.append(f"{key} = {fmt(getattr(config, attr))}")
    return "\n".join(lines) + "\n"


def save_config(config: Config, path) -> None:
    validate_config(config)
    with open(path, "w", encoding="utf-8") as f:
        f.write(config_to_text(config))


def _check_header(line: str, magic: str, path, lineno: int = 1) -> None:
    parts = line.strip().split()
    if len(parts) != 2 or parts[0] != magic or not parts[1].startswith("v"):
        raise FormatError(f"{path}:{lineno}: expected header '{magic} v{FORMAT_VERSION}'")
    try:
        version = int(parts[1][1:])
    except ValueError:
        raise FormatError(f"{path}:{lineno}: bad version {parts[1]!r}") from None
    if version != FORMAT_VERSION:
        raise FormatError(f"{path}:{lineno}: unsupported {magic} version {version} "
                          f"(this build reads v{FORMAT_VERSION})")


def load_config(path) -> Config:
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except FileNotFoundError:
        raise StoreError(f"config file not found: {path}") from None
    if not lines:
        raise FormatError(f"{path}:1: empty config file")
    _check_header(lines[0], CONFIG_MAGIC, path)
    values = {}
    for lineno, line in enumerate(lines[1:], start=2):
        if not line.strip() or line.lstrip().startswith("#"):
            continue
        if "=" not in line:
            raise FormatError(f"{path}:{lineno}: expected 'key = value'")
        key, _, raw = line.partition("=")
        key = key.strip()
        raw = raw.strip()
        if key not in _KEY_TO_FIELD:
            raise FormatError(f"{path}:{lineno}: unknown config key {key!r}")
        attr, parse = _KEY_TO_FIELD[key]
        try:
            values[attr] = parse(raw)
        except ValueError as exc:
            raise FormatError(f"{path}:{lineno}: bad value for {key}: {exc}") from None
    config = replace(Config(), **values)
    try:
        validate_config(config)
    except StoreError as exc:
        raise StoreError(f"{path}: {exc}") from None
    return config


def registry_to_text(registry: Registry) -> str:
    lines = [f"{REGISTRY_MAGIC} v{FORMAT_VERSION}",
             f"threshold {_fmt_float(registry.unknown_threshold)}"]
    for name in registry.names():
        model = registry.models[name]
        lines.append(f"model {model.ordinal} {model.name}")
        for row in model.exemplars:
            lines.append("exemplar " + " ".join(_fmt_float(x) for x in row))
    return "\n".join(lines) + "\n"


def save_registry(registry: Registry, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(registry_to_text(registry))


def registry_from_text(text: str, path="<registry>") -> Registry:
    lines = text.splitlines()
    if not lines:
        raise FormatError(f"{path}:1: empty registry file")
    _check_header(lines[0], REGISTRY_MAGIC, path)
    registry = Registry()
    lineno = 1
    if len(lines) < 2 or not lines[1].startswith("threshold "):
        raise FormatError(f"{path}:2: expected 'threshold <value>'")
    try:
        registry.unknown_threshold = float(lines[1].split(" ", 1)[1])
    except (IndexError, ValueError):
        raise FormatError(f"{path}:2: bad threshold line") from None

    current: ObjectModel | None = None
    rows: list = []

    def finish(lineno_for_error):
        nonlocal current, rows
        if current is None:
            return
        if not rows:
            raise FormatError(f"{path}:{lineno_for_error}: model {current.name!r} has no exemplars")
        current.exemplars = np.array(rows, dtype=np.float64)
        if current.name in registry.models:
            raise FormatError(f"{path}:{lineno_for_error}: duplicate model name {current.name!r}")
        registry.models[current.name] = current
        current, rows = None, []

    for lineno, line in enumerate(lines[2:], start=3):
        if not line.strip():
            continue
        if line.startswith("model "):
            finish(lineno)
            parts = line.split(" ", 2)
            if len(parts) != 3 or not parts[2].strip():
                raise FormatError(f"{path}:{lineno}: expected 'model <ordinal> <name>'")
            try:
                ordinal = int(parts[1])
            except ValueError:
                raise FormatError(f"{path}:{lineno}: bad model ordinal {parts[1]!r}") from None
            current = ObjectModel(name=parts[2], ordinal=ordinal,
                                  exemplars=np.zeros((0, FEATURE_DIM)))
        elif line.startswith("exemplar "):
            if current is None:
                raise FormatError(f"{path}:{lineno}: exemplar before any model line")
            try:
                row = [float(x) for x in line.split()[1:]]
            except ValueError:
                raise FormatError(f"{path}:{lineno}: bad exemplar number") from None
            if len(row) != FEATURE_DIM:
                raise FormatError(f"{path}:{lineno}: exemplar has {len(row)} values, "
                                  f"expected {FEATURE_DIM}")
            rows.append(row)
        else:
            raise FormatError(f"{path}:{lineno}: unrecognized line {line.split(' ')[0]!r}")
    finish(len(lines) + 1)

    ordinals = sorted(m.ordinal for m in registry.models.values())
    if len(set(ordinals)) != len(ordinals):
        raise FormatError(f"{path}: duplicate model ordinals")
    registry.next_ordinal = (ordinals[-1] + 1) if ordinals else 1
    return registry


def load_registry(path) -> Registry:
    try:
        with open(path, "r", encoding="utf-8") as f:
            text = f.read()
    except FileNotFoundError:
        raise StoreError(f"registry file not found: {path}") from None
    return registry_from_text(text, path)


def scene_to_text(scene: SceneSpec) -> str:
    if scene.table is None:
        raise StoreError("scene files require a table definition")
    t = scene.table
    lines = [f"{SCENE_MAGIC} v{FORMAT_VERSION}"]
    lines.append("table " + " ".join(_fmt_float(x) for x in t.point)
                 + " " + " ".join(_fmt_float(x) for x in t.normal)
                 + " " + " ".join(str(int(c)) for c in t.color)
                 + " " + _fmt_float(t.half_extent))
    li = scene.lighting
    lines.append("light " + _fmt_float(li.ambient) + " " + _fmt_float(li.diffuse)
                 + " " + " ".join(_fmt_float(x) for x in li.direction))
    for obj in scene.objects:
        lines.append(f"object {obj.name}")
        pose = np.hstack([np.asarray(obj.rotation), np.asarray(obj.translation)[:, None]])
        lines.append("pose " + " ".join(_fmt_float(x) for x in pose.ravel()))
        for v in obj.mesh.vertices:
            lines.append("v " + " ".join(_fmt_float(x) for x in v))
        for face, color in zip(obj.mesh.faces, obj.mesh.face_colors):
            lines.append("f " + " ".join(str(int(i)) for i in face)
                         + " " + " ".join(str(int(c)) for c in color))
        lines.append("end")
    return "\n".join(lines) + "\n"


def save_scene(scene: SceneSpec, path) -> None:
    with open(path, "w", encoding="utf-8") as f:
        f.write(scene_to_text(scene))


def _floats_from(parts, count, path, lineno, what):
    if len(parts) != count:
        raise FormatError(f"{path}:{lineno}: {what} expects {count} numbers, got {len(parts)}")
    try:
        return [float(p) for p in parts]
    except ValueError:
        raise FormatError(f"{path}:{lineno}: bad number in {what}") from None


def load_scene(path) -> SceneSpec:
    try:
        with open(path, "r", encoding="utf-8") as f:
            lines = f.read().splitlines()
    except FileNotFoundError:
        raise StoreError(f"scene file not found: {path}") from None
    if not lines:
        raise FormatError(f"{path}:1: empty scene file")
    _check_header(lines[0], SCENE_MAGIC, path)

    table = None
    lighting = Lighting()
    objects = []
    obj_name = None
    obj_pose = None
    verts: list = []
    faces: list = []
    colors: list = []
    face_lines: list = []

    def finish_object(lineno):
        nonlocal obj_name, obj_pose, verts, faces, colors, face_lines
        if not verts or not faces:
            raise FormatError(f"{path}:{lineno}: object {obj_name!r} needs vertices and faces")
        mesh = Mesh(np.array(verts), np.array(faces, dtype=np.int64),
                    np.array(colors, dtype=np.uint8))
        tri = mesh.vertices[mesh.faces]
        areas = 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)
        bad = np.nonzero(areas <= 1e-9)[0]
        if bad.size:
            raise FormatError(f"{path}:{face_lines[int(bad[0])]}: degenerate triangle (zero area)")
        rotation = np.eye(3) if obj_pose is None else obj_pose[:, :3]
        translation = np.zeros(3) if obj_pose is None else obj_pose[:, 3]
        objects.append(SceneObject(name=obj_name, mesh=mesh, rotation=rotation,
                                   translation=translation))
        obj_name, obj_pose = None, None
        verts, faces, colors, face_lines = [], [], [], []

    for lineno, line in enumerate(lines[1:], start=2):
        s = line.strip()
        if not s or s.startswith("#"):
            continue
        tag, _, rest = s.partition(" ")
        parts = rest.split()
        if tag == "table":
            vals = _floats_from(parts, 10, path, lineno, "table")
            table = Table(point=np.array(vals[0:3]), normal=np.array(vals[3:6]),
                          color=tuple(int(c) for c in vals[6:9]), half_extent=vals[9])
        elif tag == "light":
            vals = _floats_from(parts, 5, path, lineno, "light")
            lighting = Lighting(ambient=vals[0], diffuse=vals[1],
                                direction=tuple(vals[2:5]))
        elif tag == "object":
            if obj_name is not None:
                raise FormatError(f"{path}:{lineno}: object {obj_name!r} missing 'end'")
            if not rest.strip():
                raise FormatError(f"{path}:{lineno}: object needs a name")
            obj_name = rest.strip()
        elif tag == "pose":
            if obj_name is None:
                raise FormatError(f"{path}:{lineno}: pose outside an object block")
            vals = _floats_from(parts, 12, path, lineno, "pose")
            obj_pose = np.array(vals).reshape(3, 4)
            rot = obj_pose[:, :3]
            if not np.allclose(rot @ rot.T, np.eye(3), atol=1e-6):
                raise FormatError(f"{path}:{lineno}: pose rotation is not orthonormal")
        elif tag == "v":
            if obj_name is None:
                raise FormatError(f"{path}:{lineno}: vertex outside an object block")
            verts.append(_floats_from(parts, 3, path, lineno, "vertex"))
        elif tag == "f":
            if obj_name is None:
                raise FormatError(f"{path}:{lineno}: face outside an object block")
            vals = _floats_from(parts, 6, path, lineno, "face")
            idx = [int(v) for v in vals[0:3]]
            if any(i < 0 or i >= len(verts) for i in idx):
                raise FormatError(f"{path}:{lineno}: face index out of range")
            faces.append(idx)
            colors.append([int(v) for v in vals[3:6]])
            face_lines.append(lineno)
        elif tag == "end":
            if obj_name is None:
                raise FormatError(f"{path}:{lineno}: 'end' outside an object block")
            finish_object(lineno)
        else:
            raise FormatError(f"{path}:{lineno}: unrecognized line tag {tag!r}")

    if obj_name is not None:
        raise FormatError(f"{path}:{len(lines)}: object {obj_name!r} missing 'end'")
    if table is None:
        raise FormatError(f"{path}: missing table definition")
    return SceneSpec(objects=tuple(objects), table=table, lighting=lighting)


def write_csv(path, fieldnames, rows) -> None:
    """RFC-4180 CSV with a header row."""
    with open(path, "w", newline="", encoding="utf-8") as f:
        writer = csv.DictWriter(f, fieldnames=list(fieldnames))
        writer.writeheader()
        for row in rows:
            writer.writerow(row)


def csv_text(fieldnames, rows) -> str:
    buf = io.StringIO()
    writer = csv.DictWriter(buf, fieldnames=list(fieldnames))
    writer.writeheader()
    for row in rows:
        writer.writerow(row)
    return buf.getvalue()
