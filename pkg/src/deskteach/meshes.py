"""Procedural colored triangle meshes for desk-scale scenes.

All generators return closed meshes centered on the z axis with the shape
spanning z in [-height/2, +height/2]; callers drop them onto the table with
`place_on_table`. Colors come from an explicit palette or from a seeded hue
draw, so a fixed seed reproduces the mesh byte for byte.
"""

from __future__ import annotations

import colorsys
from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Mesh:
    vertices: np.ndarray     # (N, 3) float64, mm
    faces: np.ndarray        # (M, 3) int64
    face_colors: np.ndarray  # (M, 3) uint8

    def __post_init__(self):
        self.vertices.setflags(write=False)
        self.faces.setflags(write=False)
        self.face_colors.setflags(write=False)

    @property
    def face_count(self) -> int:
        return self.faces.shape[0]


def mesh_surface_area(mesh: Mesh) -> float:
    """Total triangle area in mm^2."""
    tri = mesh.vertices[mesh.faces]
    cross = np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0])
    return float(0.5 * np.linalg.norm(cross, axis=1).sum())


def validate_mesh(mesh: Mesh, min_area: float = 1e-9) -> None:
    """Raise if any triangle is degenerate (area <= min_area)."""
    tri = mesh.vertices[mesh.faces]
    areas = 0.5 * np.linalg.norm(np.cross(tri[:, 1] - tri[:, 0], tri[:, 2] - tri[:, 0]), axis=1)
    bad = np.nonzero(areas <= min_area)[0]
    if bad.size:
        raise ValueError(f"mesh contains {bad.size} degenerate triangle(s), first at face {int(bad[0])}")


def hsv_color(hue: float, saturation: float = 0.9, value: float = 0.95) -> tuple:
    """8-bit RGB from HSV with hue in [0, 1)."""
    r, g, b = colorsys.hsv_to_rgb(hue % 1.0, saturation, value)
    return (int(round(r * 255)), int(round(g * 255)), int(round(b * 255)))


def _seeded_palette(seed: int) -> list:
    rng = np.random.default_rng(seed)
    base = float(rng.uniform(0.0, 1.0))
    return [hsv_color(base), hsv_color(base + 0.13)]


def _face_color_array(colors, count_per_group):
    rows = []
    for color, count in zip(colors, count_per_group):
        rows.append(np.tile(np.asarray(color, dtype=np.uint8), (count, 1)))
    return np.vstack(rows)


def make_box(width: float, depth: float, height: float, seed: int = 0,
             palette=None) -> Mesh:
    """Axis-aligned box: 12 triangles, sides in the base color, caps accented."""
    if width <= 0 or depth <= 0 or height <= 0:
        raise ValueError("box dimensions must be positive")
    base, accent = palette or _seeded_palette(seed)
    x, y, z = width / 2.0, depth / 2.0, height / 2.0
    v = np.array([
        (-x, -y, -z), (x, -y, -z), (x, y, -z), (-x, y, -z),
        (-x, -y, z), (x, -y, z), (x, y, z), (-x, y, z),
    ], dtype=np.float64)
    side_faces = [
        (0, 1, 5), (0, 5, 4),   # -y
        (2, 3, 7), (2, 7, 6),   # +y
        (1, 2, 6), (1, 6, 5),   # +x
        (3, 0, 4), (3, 4, 7),   # -x
    ]
    cap_faces = [
        (0, 2, 1), (0, 3, 2),   # bottom
        (4, 5, 6), (4, 6, 7),   # top
    ]
    faces = np.array(side_faces + cap_faces, dtype=np.int64)
    colors = _face_color_array([base, accent], [len(side_faces), len(cap_faces)])
    return Mesh(v, faces, colors)


def _prism(polygon_xy: np.ndarray, height: float, side_colors, cap_colors) -> Mesh:
    """Closed prism over a star-shaped polygon (fan caps from the origin).

    side_colors / cap_colors: one RGB per polygon edge.
    """
    m = polygon_xy.shape[0]
    z0, z1 = -height / 2.0, height / 2.0
    bottom = np.column_stack([polygon_xy, np.full(m, z0)])
    top = np.column_stack([polygon_xy, np.full(m, z1)])
    centers = np.array([(0.0, 0.0, z0), (0.0, 0.0, z1)])
    verts = np.vstack([bottom, top, centers])
    c_bot, c_top = 2 * m, 2 * m + 1

    faces = []
    colors = []
    for k in range(m):
        k1 = (k + 1) % m
        faces.append((k, k1, m + k1))
        faces.append((k, m + k1, m + k))
        colors.extend([side_colors[k], side_colors[k]])
    for k in range(m):
        k1 = (k + 1) % m
        faces.append((c_bot, k1, k))
        colors.append(cap_colors[k])
    for k in range(m):
        k1 = (k + 1) % m
        faces.append((c_top, m + k, m + k1))
        colors.append(cap_colors[k])
    return Mesh(verts, np.array(faces, dtype=np.int64),
                np.array(colors, dtype=np.uint8))


def make_cylinder(radius: float, height: float, segments: int = 24, seed: int = 0,
                  palette=None) -> Mesh:
    """Closed cylinder: 4n triangles (2n side, n per cap)."""
    if radius <= 0 or height <= 0:
        raise ValueError("cylinder dimensions must be positive")
    if segments < 3:
        raise ValueError("cylinder needs at least 3 segments")
    base, accent = palette or _seeded_palette(seed)
    ang = 2.0 * np.pi * np.arange(segments) / segments
    poly = np.column_stack([radius * np.cos(ang), radius * np.sin(ang)])
    return _prism(poly, height, [base] * segments, [accent] * segments)


def make_gear_like(teeth: int = 8, outer_radius: float = 40.0, body_radius: float = 28.0,
                   height: float = 14.0, seed: int = 0, palette=None) -> Mesh:
    """Toothed disc: a star-polygon prism with accented tooth sectors."""
    if teeth < 3:
        raise ValueError("gear needs at least 3 teeth")
    if not 0 < body_radius < outer_radius:
        raise ValueError("need 0 < body_radius < outer_radius")
    if height <= 0:
        raise ValueError("gear height must be positive")
    base, accent = palette or _seeded_palette(seed)

    sector = 2.0 * np.pi / teeth
    poly = []
    tooth_edge = []  # True where the edge starting at this vertex crosses a tooth top
    for k in range(teeth):
        a = k * sector
        poly.append((body_radius * np.cos(a), body_radius * np.sin(a)))
        tooth_edge.append(False)                     # rising flank
        poly.append((outer_radius * np.cos(a + 0.25 * sector),
                     outer_radius * np.sin(a + 0.25 * sector)))
        tooth_edge.append(True)                      # tooth top
        poly.append((outer_radius * np.cos(a + 0.50 * sector),
                     outer_radius * np.sin(a + 0.50 * sector)))
        tooth_edge.append(False)                     # falling flank
        poly.append((body_radius * np.cos(a + 0.75 * sector),
                     body_radius * np.sin(a + 0.75 * sector)))
        tooth_edge.append(False)                     # body arc
    poly = np.array(poly)
    side_colors = [accent if t else base for t in tooth_edge]
    cap_colors = [accent if t else base for t in tooth_edge]
    return _prism(poly, height, side_colors, cap_colors)


def make_shaft(radii=(10.0, 16.0, 8.0), section_heights=(22.0, 14.0, 24.0),
               segments: int = 20, seed: int = 0, palette=None) -> Mesh:
    """Stepped shaft: stacked coaxial cylindrical sections of varying radius."""
    radii = tuple(float(r) for r in radii)
    section_heights = tuple(float(h) for h in section_heights)
    if len(radii) != len(section_heights) or not radii:
        raise ValueError("radii and section_heights must be equal-length and nonempty")
    if any(r <= 0 for r in radii) or any(h <= 0 for h in section_heights):
        raise ValueError("shaft dimensions must be positive")
    if segments < 3:
        raise ValueError("shaft needs at least 3 segments")
    base, accent = palette or _seeded_palette(seed)
    section_colors = [base if i % 2 == 0 else accent for i in range(len(radii))]

    total = sum(section_heights)
    # profile of (radius, z) pairs, bottom to top, duplicating z at radius steps
    profile = [(radii[0], -total / 2.0)]
    z = -total / 2.0
    for i, h in enumerate(section_heights):
        z += h
        profile.append((radii[i], z))
        if i + 1 < len(radii):
            profile.append((radii[i + 1], z))
    band_colors = []
    for i in range(len(section_heights)):
        band_colors.append(section_colors[i])       # vertical band
        if i + 1 < len(section_heights):
            band_colors.append(section_colors[i + 1])  # annulus at the step

    ang = 2.0 * np.pi * np.arange(segments) / segments
    cos_a, sin_a = np.cos(ang), np.sin(ang)
    rings = []
    for r, zz in profile:
        rings.append(np.column_stack([r * cos_a, r * sin_a, np.full(segments, zz)]))
    verts = np.vstack(rings + [np.array([(0.0, 0.0, profile[0][1]),
                                         (0.0, 0.0, profile[-1][1])])])
    c_bot = len(profile) * segments
    c_top = c_bot + 1

    faces = []
    colors = []
    for band in range(len(profile) - 1):
        r_lo, z_lo = profile[band]
        r_hi, z_hi = profile[band + 1]
        if r_lo == r_hi and z_lo == z_hi:
            continue
        lo, hi = band * segments, (band + 1) * segments
        for k in range(segments):
            k1 = (k + 1) % segments
            faces.append((lo + k, lo + k1, hi + k1))
            faces.append((lo + k, hi + k1, hi + k))
            colors.extend([band_colors[band], band_colors[band]])
    last = (len(profile) - 1) * segments
    for k in range(segments):
        k1 = (k + 1) % segments
        faces.append((c_bot, k1, k))
        colors.append(section_colors[0])
        faces.append((c_top, last + k, last + k1))
        colors.append(section_colors[-1])
    return Mesh(verts, np.array(faces, dtype=np.int64),
                np.array(colors, dtype=np.uint8))


def make_ball(radius: float, subdivisions: int = 2, seed: int = 0, palette=None) -> Mesh:
    """Geodesic sphere (20 * 4^k faces), single-colored."""
    if radius <= 0:
        raise ValueError("ball radius must be positive")
    base = (palette or _seeded_palette(seed))[0]
    phi = (1.0 + np.sqrt(5.0)) / 2.0
    verts = np.array([
        (-1, phi, 0), (1, phi, 0), (-1, -phi, 0), (1, -phi, 0),
        (0, -1, phi), (0, 1, phi), (0, -1, -phi), (0, 1, -phi),
        (phi, 0, -1), (phi, 0, 1), (-phi, 0, -1), (-phi, 0, 1),
    ], dtype=np.float64)
    verts /= np.linalg.norm(verts, axis=1, keepdims=True)
    faces = [
        (0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11),
        (1, 5, 9), (5, 11, 4), (11, 10, 2), (10, 7, 6), (7, 1, 8),
        (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9),
        (4, 9, 5), (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1),
    ]
    verts = [v for v in verts]
    cache: dict[tuple, int] = {}

    def midpoint(i, j):
        key = (i, j) if i < j else (j, i)
        if key in cache:
            return cache[key]
        p = verts[i] + verts[j]
        p /= np.linalg.norm(p)
        verts.append(p)
        cache[key] = len(verts) - 1
        return cache[key]

    for _ in range(subdivisions):
        new_faces = []
        for a, b, c in faces:
            ab, bc, ca = midpoint(a, b), midpoint(b, c), midpoint(c, a)
            new_faces += [(a, ab, ca), (b, bc, ab), (c, ca, bc), (ab, bc, ca)]
        faces = new_faces
    v = np.array(verts) * radius
    f = np.array(faces, dtype=np.int64)
    colors = np.tile(np.asarray(base, dtype=np.uint8), (f.shape[0], 1))
    return Mesh(v, f, colors)


def flip_mesh_z(mesh: Mesh) -> Mesh:
    """Mirror the mesh about its own z midplane (upside-down flip)."""
    z = mesh.vertices[:, 2]
    pivot = (z.min() + z.max())
    v = mesh.vertices.copy()
    v[:, 2] = pivot - v[:, 2]
    faces = mesh.faces[:, ::-1].copy()  # keep outward winding consistent
    return Mesh(v, faces, mesh.face_colors.copy())
