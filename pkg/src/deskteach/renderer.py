"""Software RGB-D camera over tabletop triangle-mesh scenes.

Ray casting is exact: each pixel ray is intersected with the (finite) table
plane and every object triangle, keeping the nearest hit. Depth is the range
along the optical axis (mm), so a top-down camera over a flat table reads
its own height. 0 marks invalid depth. Each frame also carries the hit map
(per pixel: -1 background, 0 table, k >= 1 object k-1), which downstream
tests use as the segmentation ground truth.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from .meshes import Mesh
from .viewsphere import CameraPose

NEAR_MM = 1.0
INVALID_DEPTH = 0.0


@dataclass(frozen=True)
class Intrinsics:
    fx: float
    fy: float
    cx: float
    cy: float

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ValueError("focal lengths must be positive")


def default_intrinsics(width: int, height: int, focal: float = 120.0) -> Intrinsics:
    return Intrinsics(fx=focal, fy=focal, cx=width / 2.0, cy=height / 2.0)


@dataclass(frozen=True)
class Table:
    point: np.ndarray        # (3,) mm, a point on the plane
    normal: np.ndarray       # (3,) unit
    color: tuple = (168, 162, 150)
    half_extent: float = 400.0  # mm, square extent around `point`

    def __post_init__(self):
        object.__setattr__(self, "point", np.asarray(self.point, dtype=np.float64))
        n = np.asarray(self.normal, dtype=np.float64)
        object.__setattr__(self, "normal", n / np.linalg.norm(n))


@dataclass(frozen=True)
class Lighting:
    ambient: float = 0.35
    diffuse: float = 0.65
    direction: tuple = (0.3, 0.2, 0.9)  # toward the light, world frame

    def unit_direction(self) -> np.ndarray:
        d = np.asarray(self.direction, dtype=np.float64)
        return d / np.linalg.norm(d)


@dataclass(frozen=True)
class SceneObject:
    name: str
    mesh: Mesh
    rotation: np.ndarray = field(default_factory=lambda: np.eye(3))
    translation: np.ndarray = field(default_factory=lambda: np.zeros(3))

    def world_vertices(self) -> np.ndarray:
        return self.mesh.vertices @ np.asarray(self.rotation).T + np.asarray(self.translation)


@dataclass(frozen=True)
class SceneSpec:
    objects: tuple = ()
    table: Table | None = None
    lighting: Lighting = field(default_factory=Lighting)


def default_table() -> Table:
    return Table(point=np.zeros(3), normal=np.array([0.0, 0.0, 1.0]))


def place_on_table(name: str, mesh: Mesh, xy=(0.0, 0.0), rotation=None,
                   table_z: float = 0.0) -> SceneObject:
    """Drop a mesh so its lowest point rests on the table plane z = table_z."""
    rot = np.eye(3) if rotation is None else np.asarray(rotation, dtype=np.float64)
    world = mesh.vertices @ rot.T
    lift = table_z - world[:, 2].min()
    return SceneObject(name=name, mesh=mesh, rotation=rot,
                       translation=np.array([xy[0], xy[1], lift]))


def scene_center(scene: SceneSpec) -> np.ndarray:
    """World-frame center of the objects' joint bounding box.

    The view sphere is centered here (the object's geometric center), so
    even zero-elevation viewpoints sit above the table plane. Falls back to
    the table anchor, then the origin, for object-free scenes.
    """
    if scene.objects:
        world = np.vstack([obj.world_vertices() for obj in scene.objects])
        return (world.min(axis=0) + world.max(axis=0)) / 2.0
    if scene.table is not None:
        return scene.table.point.copy()
    return np.zeros(3)


def mirror_scene_z(scene: SceneSpec) -> SceneSpec:
    """Flip every object upside down in place (for two-sided registration)."""
    from .meshes import flip_mesh_z

    flipped = []
    for obj in scene.objects:
        world = obj.world_vertices()
        baked = Mesh(world.copy(), obj.mesh.faces.copy(), obj.mesh.face_colors.copy())
        m = flip_mesh_z(baked)
        flipped.append(SceneObject(name=obj.name, mesh=m))
    return replace(scene, objects=tuple(flipped))


@dataclass(frozen=True)
class RgbdFrame:
    width: int
    height: int
    intrinsics: Intrinsics
    color: np.ndarray   # (H, W, 3) uint8
    depth: np.ndarray   # (H, W) float64 mm, 0 = invalid
    hits: np.ndarray    # (H, W) int32: -1 none, 0 table, k>=1 object k-1

    def __post_init__(self):
        self.color.setflags(write=False)
        self.depth.setflags(write=False)
        self.hits.setflags(write=False)

    @property
    def valid(self) -> np.ndarray:
        return self.depth > 0


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray   # (K, 3) mm, camera frame
    colors: np.ndarray   # (K, 3) uint8
    pixels: np.ndarray   # (K, 2) int (u, v) source pixel of each point


_RAY_CACHE: dict = {}


def _camera_rays(intr: Intrinsics, width: int, height: int) -> np.ndarray:
    """(H, W, 3) per-pixel ray directions in camera frame, z component 1."""
    key = (intr.fx, intr.fy, intr.cx, intr.cy, width, height)
    cached = _RAY_CACHE.get(key)
    if cached is None:
        u = (np.arange(width, dtype=np.float64) - intr.cx) / intr.fx
        v = (np.arange(height, dtype=np.float64) - intr.cy) / intr.fy
        d = np.empty((height, width, 3), dtype=np.float64)
        d[:, :, 0] = u[None, :]
        d[:, :, 1] = v[:, None]
        d[:, :, 2] = 1.0
        d.setflags(write=False)
        _RAY_CACHE[key] = d
        cached = d
    return cached


def _shade(color_u8, normal, lighting: Lighting) -> np.ndarray:
    light = lighting.unit_direction()
    s = lighting.ambient + lighting.diffuse * abs(float(np.dot(normal, light)))
    return np.clip(np.round(np.asarray(color_u8, dtype=np.float64) * s), 0, 255).astype(np.uint8)


def render(scene: SceneSpec, pose: CameraPose, intrinsics: Intrinsics | None = None,
           width: int = 160, height: int = 120,
           depth_noise_sigma: float = 0.0, noise_seed: int = 0) -> RgbdFrame:
    """Ray-cast the scene from `pose`. Deterministic for fixed inputs."""
    if width < 16 or height < 16:
        raise ValueError("frame must be at least 16x16 pixels")
    intr = intrinsics or default_intrinsics(width, height)

    origin = pose.position
    rot = pose.rotation
    dirs_cam = _camera_rays(intr, width, height)
    # world direction for camera-frame d is R^T d; ray depth parameter equals z_cam
    dirs_world = dirs_cam.reshape(-1, 3) @ rot
    dirs_world = dirs_world.reshape(height, width, 3)

    depth = np.full((height, width), np.inf)
    hits = np.full((height, width), -1, dtype=np.int32)
    color = np.zeros((height, width, 3), dtype=np.uint8)

    if scene.table is not None:
        _cast_table(scene.table, scene.lighting, origin, dirs_world, depth, hits, color)

    for k, obj in enumerate(scene.objects):
        _cast_mesh(k + 1, obj, scene.lighting, origin, rot, intr, dirs_world,
                   depth, hits, color)

    valid = np.isfinite(depth)
    out_depth = np.where(valid, depth, INVALID_DEPTH)

    if depth_noise_sigma > 0:
        rng = np.random.default_rng(noise_seed)
        noise = rng.normal(0.0, depth_noise_sigma, size=out_depth.shape)
        out_depth = np.where(valid, np.maximum(out_depth + noise, NEAR_MM * 0.5), INVALID_DEPTH)

    return RgbdFrame(width=width, height=height, intrinsics=intr,
                     color=color, depth=out_depth, hits=hits)


def _cast_table(table: Table, lighting: Lighting, origin, dirs_world, depth, hits, color):
    n = table.normal
    num = float(np.dot(n, table.point)) - float(np.dot(n, origin))
    denom = dirs_world @ n
    ok = np.abs(denom) > 1e-14
    t = np.full(depth.shape, np.inf)
    t[ok] = num / denom[ok]
    ok &= t > NEAR_MM
    if not ok.any():
        return
    # in-plane square extent around the table anchor point
    axis_a = np.cross(n, [0.0, 0.0, 1.0])
    if np.linalg.norm(axis_a) < 1e-9:
        axis_a = np.array([1.0, 0.0, 0.0])
    else:
        axis_a /= np.linalg.norm(axis_a)
    axis_b = np.cross(n, axis_a)
    rel = origin - table.point + t[ok, None] * dirs_world[ok]
    inside = (np.abs(rel @ axis_a) <= table.half_extent) & (np.abs(rel @ axis_b) <= table.half_extent)
    ok[ok] = inside
    closer = ok & (t < depth)
    if not closer.any():
        return
    depth[closer] = t[closer]
    hits[closer] = 0
    color[closer] = _shade(table.color, n, lighting)


def _cast_mesh(hit_id, obj: SceneObject, lighting: Lighting, origin, rot, intr,
               dirs_world, depth, hits, color):
    verts = obj.world_vertices()
    faces = obj.mesh.faces
    if faces.shape[0] == 0:
        return
    height, width = depth.shape
    cam = (verts - origin) @ rot.T

    # pixel bounding box of the whole object; fall back to the full frame if
    # any vertex sits at or behind the near plane
    if np.all(cam[:, 2] > NEAR_MM):
        us = intr.cx + intr.fx * cam[:, 0] / cam[:, 2]
        vs = intr.cy + intr.fy * cam[:, 1] / cam[:, 2]
        u0 = max(0, int(np.floor(us.min())) - 1)
        u1 = min(width - 1, int(np.ceil(us.max())) + 1)
        v0 = max(0, int(np.floor(vs.min())) - 1)
        v1 = min(height - 1, int(np.ceil(vs.max())) + 1)
        if u0 > u1 or v0 > v1:
            return
    else:
        u0, u1, v0, v1 = 0, width - 1, 0, height - 1

    d = dirs_world[v0:v1 + 1, u0:u1 + 1].reshape(-1, 3)      # (P, 3)
    tri = verts[faces]                                        # (F, 3, 3)
    a = tri[:, 0]
    e1 = tri[:, 1] - a                                        # (F, 3)
    e2 = tri[:, 2] - a
    tvec = origin - a                                         # (F, 3)
    qvec = np.cross(tvec, e1)                                 # (F, 3)
    t_num = np.einsum("fk,fk->f", e2, qvec)                   # (F,)

    # batched Moller-Trumbore: faces x pixels
    pvec = np.cross(d[None, :, :], e2[:, None, :])            # (F, P, 3)
    det = np.einsum("fpk,fk->fp", pvec, e1)                   # (F, P)
    bv_num = d @ qvec.T                                       # (P, F)
    eps = 1e-10
    with np.errstate(divide="ignore", invalid="ignore"):
        inv = 1.0 / det
        bu = np.einsum("fpk,fk->fp", pvec, tvec) * inv
        bv = bv_num.T * inv
        t = t_num[:, None] * inv
        ok = (np.abs(det) > 1e-14) & (bu >= -eps) & (bv >= -eps) & (bu + bv <= 1.0 + eps) & (t > NEAR_MM)
    t = np.where(ok, t, np.inf)
    best_face = np.argmin(t, axis=0)                          # (P,)
    best_t = t[best_face, np.arange(t.shape[1])]

    sub_depth = depth[v0:v1 + 1, u0:u1 + 1].reshape(-1)
    closer = best_t < sub_depth
    if not closer.any():
        return

    normals = np.cross(e1, e2)
    normals /= np.linalg.norm(normals, axis=1, keepdims=True)
    light = lighting.unit_direction()
    shade = lighting.ambient + lighting.diffuse * np.abs(normals @ light)
    shaded = np.clip(np.round(obj.mesh.face_colors.astype(np.float64) * shade[:, None]), 0, 255).astype(np.uint8)

    sub_depth[closer] = best_t[closer]
    depth[v0:v1 + 1, u0:u1 + 1] = sub_depth.reshape(v1 - v0 + 1, u1 - u0 + 1)
    sub_hits = hits[v0:v1 + 1, u0:u1 + 1].reshape(-1)
    sub_hits[closer] = hit_id
    hits[v0:v1 + 1, u0:u1 + 1] = sub_hits.reshape(v1 - v0 + 1, u1 - u0 + 1)
    sub_color = color[v0:v1 + 1, u0:u1 + 1].reshape(-1, 3)
    sub_color[closer] = shaded[best_face[closer]]
    color[v0:v1 + 1, u0:u1 + 1] = sub_color.reshape(v1 - v0 + 1, u1 - u0 + 1, 3)


def camera_points_grid(frame: RgbdFrame) -> np.ndarray:
    """(H, W, 3) back-projected camera-frame points; rows of zeros where invalid."""
    intr = frame.intrinsics
    u = np.arange(frame.width, dtype=np.float64)
    v = np.arange(frame.height, dtype=np.float64)
    d = frame.depth
    x = (u[None, :] - intr.cx) * d / intr.fx
    y = (v[:, None] - intr.cy) * d / intr.fy
    pts = np.stack([x, y, d], axis=-1)
    pts[~frame.valid] = 0.0
    return pts


def back_project(frame: RgbdFrame) -> PointCloud:
    """Point cloud of every valid pixel, camera frame, colors attached."""
    vv, uu = np.nonzero(frame.valid)
    d = frame.depth[vv, uu]
    intr = frame.intrinsics
    x = (uu - intr.cx) * d / intr.fx
    y = (vv - intr.cy) * d / intr.fy
    points = np.column_stack([x, y, d])
    return PointCloud(points=points, colors=frame.color[vv, uu].copy(),
                      pixels=np.column_stack([uu, vv]))


def project_point(intr: Intrinsics, point) -> tuple:
    """Camera-frame point back to (u, v) pixel coordinates."""
    x, y, z = point
    if z <= 0:
        raise ValueError("cannot project a point at or behind the camera")
    return (intr.cx + intr.fx * x / z, intr.cy + intr.fy * y / z)


def save_ppm(path, color: np.ndarray) -> None:
    """Binary PPM (P6) dump of an (H, W, 3) uint8 image."""
    h, w = color.shape[:2]
    with open(path, "wb") as f:
        f.write(f"P6\n{w} {h}\n255\n".encode("ascii"))
        f.write(np.ascontiguousarray(color, dtype=np.uint8).tobytes())


def save_pgm16(path, depth_mm: np.ndarray) -> None:
    """Binary 16-bit PGM (P5) dump of depth in integer mm; 0 = invalid."""
    h, w = depth_mm.shape
    q = np.clip(np.round(depth_mm), 0, 65535).astype(">u2")
    with open(path, "wb") as f:
        f.write(f"P5\n{w} {h}\n65535\n".encode("ascii"))
        f.write(q.tobytes())


def save_pbm(path, mask: np.ndarray) -> None:
    """ASCII PBM (P1) dump of a boolean mask."""
    h, w = mask.shape
    lines = [f"P1\n{w} {h}\n"]
    for row in mask.astype(np.uint8):
        lines.append(" ".join(str(int(x)) for x in row) + "\n")
    with open(path, "w") as f:
        f.writelines(lines)
