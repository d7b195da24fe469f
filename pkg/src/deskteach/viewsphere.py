"""Geodesic viewpoint hemisphere and object-centered camera poses.

Viewpoints are unit direction vectors in an object-centered frame whose +z
axis is the table normal. The lattice is a frequency-f geodesic subdivision
of a pole-oriented icosahedron (one vertex exactly at +z), filtered to
z >= cutoff, so index 0 of the final ordering is always the straight-down
top view.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

UNIT_TOL = 1e-6


def _pole_icosahedron():
    """12 unit vertices and 20 faces, with vertices at +z and -z."""
    lat = np.arctan(0.5)
    verts = [(0.0, 0.0, 1.0)]
    for k in range(5):
        az = 2.0 * np.pi * k / 5.0
        verts.append((np.cos(lat) * np.cos(az), np.cos(lat) * np.sin(az), np.sin(lat)))
    for k in range(5):
        az = 2.0 * np.pi * k / 5.0 + np.pi / 5.0
        verts.append((np.cos(lat) * np.cos(az), np.cos(lat) * np.sin(az), -np.sin(lat)))
    verts.append((0.0, 0.0, -1.0))
    faces = []
    for k in range(5):
        k1 = (k + 1) % 5
        faces.append((0, 1 + k, 1 + k1))
        faces.append((1 + k, 6 + k, 1 + k1))
        faces.append((1 + k1, 6 + k, 6 + k1))
        faces.append((11, 6 + k1, 6 + k))
    return np.array(verts, dtype=np.float64), np.array(faces, dtype=np.int64)


def _subdivide(verts, faces, frequency):
    """Barycentric subdivision projected to the unit sphere.

    Returns (points (N,3), edges set of index pairs). Points on shared face
    edges are deduplicated by 12-decimal rounding so the lattice is a single
    connected mesh with 10f^2+2 vertices and 30f^2 edges.
    """
    point_index: dict[tuple, int] = {}
    points: list[np.ndarray] = []
    edges: set[tuple[int, int]] = set()

    def index_of(p):
        key = tuple(np.round(p, 12))
        if key in point_index:
            return point_index[key]
        i = len(points)
        point_index[key] = i
        points.append(p)
        return i

    f = frequency
    for i0, i1, i2 in faces:
        v0, v1, v2 = verts[i0], verts[i1], verts[i2]
        local = {}
        for a in range(f + 1):
            for b in range(f - a + 1):
                c = f - a - b
                p = (a * v1 + b * v2 + c * v0) / f
                p = p / np.linalg.norm(p)
                local[(a, b)] = index_of(p)
        for a in range(f):
            for b in range(f - a):
                pa = local[(a, b)]
                pb = local[(a + 1, b)]
                pc = local[(a, b + 1)]
                for u, v in ((pa, pb), (pa, pc), (pb, pc)):
                    edges.add((u, v) if u < v else (v, u))
                if a + b < f - 1:
                    pd = local[(a + 1, b + 1)]
                    for u, v in ((pb, pd), (pc, pd)):
                        edges.add((u, v) if u < v else (v, u))
    return np.array(points, dtype=np.float64), edges


@dataclass(frozen=True)
class ViewSphere:
    """Immutable candidate-viewpoint lattice over a hemisphere."""

    radius: float                      # mm
    frequency: int
    cutoff: float                      # minimum admitted z component
    viewpoints: np.ndarray             # (N, 3) unit directions
    adjacency: tuple = field(repr=False)  # tuple[N] of sorted index tuples

    @property
    def viewpoint_count(self) -> int:
        return self.viewpoints.shape[0]


def build_view_sphere(frequency: int, radius: float, cutoff: float) -> ViewSphere:
    """Build the candidate-viewpoint hemisphere.

    frequency >= 1 selects the geodesic subdivision level (10f^2+2 vertices
    on the full sphere); cutoff in [-1, 1] drops every vertex with
    z < cutoff. Ordering is descending z then ascending azimuth, which puts
    the top view at index 0 and is reproducible bit for bit.
    """
    if not isinstance(frequency, (int, np.integer)) or frequency < 1:
        raise ValueError(f"frequency must be a positive integer, got {frequency!r}")
    if radius <= 0:
        raise ValueError(f"radius must be positive, got {radius!r}")
    if not -1.0 <= cutoff <= 1.0:
        raise ValueError(f"cutoff must lie in [-1, 1], got {cutoff!r}")

    base_verts, base_faces = _pole_icosahedron()
    points, edges = _subdivide(base_verts, base_faces, int(frequency))

    keep = points[:, 2] >= cutoff
    kept_indices = np.nonzero(keep)[0]
    points = points[keep]

    azimuth = np.mod(np.arctan2(points[:, 1], points[:, 0]), 2.0 * np.pi)
    order = np.lexsort((azimuth, -points[:, 2]))
    points = points[order]

    old_to_new = {int(kept_indices[o]): new for new, o in enumerate(order)}
    neighbor_sets: list[set[int]] = [set() for _ in range(points.shape[0])]
    for u, v in edges:
        nu = old_to_new.get(u)
        nv = old_to_new.get(v)
        if nu is not None and nv is not None:
            neighbor_sets[nu].add(nv)
            neighbor_sets[nv].add(nu)

    points.setflags(write=False)
    adjacency = tuple(tuple(sorted(s)) for s in neighbor_sets)
    return ViewSphere(
        radius=float(radius),
        frequency=int(frequency),
        cutoff=float(cutoff),
        viewpoints=points,
        adjacency=adjacency,
    )


def geodesic_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Great-circle angle in radians between two unit directions."""
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    for v in (a, b):
        n = np.linalg.norm(v)
        if abs(n - 1.0) > UNIT_TOL:
            raise ValueError(f"expected a unit vector, got norm {n!r}")
    return float(np.arccos(np.clip(np.dot(a, b), -1.0, 1.0)))


def neighbors(sphere: ViewSphere, index: int) -> tuple:
    """Adjacent viewpoint indices of `index` (never contains `index`)."""
    if not 0 <= index < sphere.viewpoint_count:
        raise IndexError(f"viewpoint index {index} out of range [0, {sphere.viewpoint_count})")
    return sphere.adjacency[index]


@dataclass(frozen=True)
class CameraPose:
    """World-frame camera placement looking at a target point.

    `rotation` maps world to camera coordinates: rows are the camera's
    right, down, and forward axes, so p_cam = rotation @ (p_world - position)
    and image u/v follow the usual x-right, y-down pinhole convention.
    """

    position: np.ndarray   # (3,) mm
    rotation: np.ndarray   # (3, 3), orthonormal, det +1
    up_hint: np.ndarray

    @property
    def optical_axis(self) -> np.ndarray:
        """Unit forward direction in world coordinates."""
        return self.rotation[2]


DEFAULT_UP_HINT = np.array([0.0, 1.0, 0.0])
FALLBACK_UP_HINT = np.array([1.0, 0.0, 0.0])


def look_at(position, target, up_hint=None) -> CameraPose:
    """Pose at `position` with the optical axis through `target`.

    The roll is fixed by up_hint; when up_hint is parallel to the optical
    axis the fallback axis (1,0,0) takes over, keeping the construction
    total and deterministic.
    """
    position = np.asarray(position, dtype=np.float64)
    target = np.asarray(target, dtype=np.float64)
    hint = DEFAULT_UP_HINT if up_hint is None else np.asarray(up_hint, dtype=np.float64)

    forward = target - position
    norm = np.linalg.norm(forward)
    if norm == 0:
        raise ValueError("camera position coincides with the target")
    forward = forward / norm

    right = np.cross(forward, hint)
    if np.linalg.norm(right) < 1e-9:
        hint = FALLBACK_UP_HINT
        right = np.cross(forward, hint)
    right = right / np.linalg.norm(right)
    down = np.cross(forward, right)

    rotation = np.stack([right, down, forward])
    rotation.setflags(write=False)
    position = position.copy()
    position.setflags(write=False)
    return CameraPose(position=position, rotation=rotation, up_hint=hint)


def camera_pose_for(sphere: ViewSphere, index: int, target=(0.0, 0.0, 0.0),
                    up_hint=None) -> CameraPose:
    """Pose for viewpoint `index`: radius away from `target`, aimed at it."""
    if not 0 <= index < sphere.viewpoint_count:
        raise IndexError(f"viewpoint index {index} out of range [0, {sphere.viewpoint_count})")
    target = np.asarray(target, dtype=np.float64)
    position = target + sphere.radius * sphere.viewpoints[index]
    return look_at(position, target, up_hint)
