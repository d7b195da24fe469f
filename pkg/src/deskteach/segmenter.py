"""Dominant-plane estimation and above-plane object mask extraction.

Everything runs in the camera frame of a single RGB-D frame: the tabletop is
recovered by seeded RANSAC over the back-projected cloud, refined by least
squares, and oriented so positive signed distance points toward the camera.
Object proposals are 4-connected components of pixels at least `min_height`
above the refined plane.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy import ndimage

from .renderer import PointCloud, RgbdFrame, camera_points_grid

FOUR_CONNECTED = np.array([[0, 1, 0], [1, 1, 1], [0, 1, 0]], dtype=np.int8)


class NoDominantPlane(Exception):
    """Raised when RANSAC consensus stays under the required fraction."""


@dataclass(frozen=True)
class PlaneModel:
    normal: np.ndarray    # unit
    offset: float         # plane equation normal . x = offset
    inlier_count: int

    def signed_height(self, points: np.ndarray) -> np.ndarray:
        """Distance above the plane, positive on the camera side."""
        return points @ self.normal - self.offset


@dataclass(frozen=True)
class ObjectMask:
    mask: np.ndarray      # (H, W) bool
    bbox: tuple           # (u0, v0, u1, v1) inclusive pixel bounds
    pixel_count: int
    component: int        # scanline discovery order, used as the tie-break

    def __post_init__(self):
        self.mask.setflags(write=False)


def fit_dominant_plane(cloud: PointCloud, iterations: int = 200,
                       inlier_threshold: float = 3.0, seed: int = 0,
                       min_inlier_fraction: float = 0.2,
                       max_consensus_points: int = 1500) -> PlaneModel:
    """Seeded RANSAC plane fit with least-squares refinement.

    Consensus is scored on a seeded subsample of at most
    `max_consensus_points` points; refinement and the reported inlier count
    use the full cloud. Raises NoDominantPlane when the winning hypothesis
    explains less than `min_inlier_fraction` of the scored points.
    """
    points = np.asarray(cloud.points, dtype=np.float64)
    n_points = points.shape[0]
    if n_points < 3:
        raise ValueError(f"plane fit needs at least 3 points, got {n_points}")

    rng = np.random.default_rng(seed)
    if n_points > max_consensus_points:
        score_idx = rng.choice(n_points, size=max_consensus_points, replace=False)
        scored = points[score_idx]
    else:
        scored = points

    picks = rng.integers(0, n_points, size=(iterations, 3))
    p1 = points[picks[:, 0]]
    p2 = points[picks[:, 1]]
    p3 = points[picks[:, 2]]
    normals = np.cross(p2 - p1, p3 - p1)
    norms = np.linalg.norm(normals, axis=1)
    ok = norms > 1e-12
    if not ok.any():
        raise NoDominantPlane("all RANSAC hypotheses were degenerate")
    normals = normals[ok] / norms[ok, None]
    offsets = np.einsum("ij,ij->i", normals, p1[ok])

    dist = np.abs(scored @ normals.T - offsets[None, :])
    counts = (dist <= inlier_threshold).sum(axis=0)
    best = int(np.argmax(counts))
    if counts[best] < min_inlier_fraction * scored.shape[0]:
        raise NoDominantPlane(
            f"best consensus {counts[best]}/{scored.shape[0]} below "
            f"min fraction {min_inlier_fraction}")

    normal = normals[best]
    offset = float(offsets[best])
    # least-squares refinement over full-cloud inliers removes the quantization
    # of the 3-point hypothesis before any height thresholding happens
    for _ in range(2):
        inliers = points[np.abs(points @ normal - offset) <= inlier_threshold]
        if inliers.shape[0] < 3:
            break
        centroid = inliers.mean(axis=0)
        _, _, vt = np.linalg.svd(inliers - centroid, full_matrices=False)
        normal = vt[-1]
        offset = float(normal @ centroid)

    # orient so the camera origin has positive signed height
    if -offset < 0:
        normal = -normal
        offset = -offset
    normal = normal.copy()
    normal.setflags(write=False)
    inlier_count = int((np.abs(points @ normal - offset) <= inlier_threshold).sum())
    return PlaneModel(normal=normal, offset=offset, inlier_count=inlier_count)


def extract_object_masks(frame: RgbdFrame, plane: PlaneModel,
                         min_height: float = 5.0, min_pixels: int = 30) -> list:
    """Above-plane 4-connected components, largest first.

    Components smaller than `min_pixels` are dropped. Equal-sized components
    keep scanline discovery order.
    """
    grid = camera_points_grid(frame)
    height_above = grid @ plane.normal - plane.offset
    above = frame.valid & (height_above >= min_height)
    labels, count = ndimage.label(above, structure=FOUR_CONNECTED)

    masks = []
    for comp in range(1, count + 1):
        m = labels == comp
        pixel_count = int(m.sum())
        if pixel_count < min_pixels:
            continue
        vv, uu = np.nonzero(m)
        bbox = (int(uu.min()), int(vv.min()), int(uu.max()), int(vv.max()))
        masks.append(ObjectMask(mask=m, bbox=bbox, pixel_count=pixel_count, component=comp))
    masks.sort(key=lambda m: (-m.pixel_count, m.component))
    return masks


def primary_mask(masks: list) -> ObjectMask:
    """The largest mask; raises when the scene had no object."""
    if not masks:
        raise ValueError("no object found: empty mask list")
    return masks[0]


def segment_frame(frame: RgbdFrame, iterations: int = 200, inlier_threshold: float = 3.0,
                  seed: int = 0, min_height: float = 5.0, min_pixels: int = 30,
                  min_inlier_fraction: float = 0.2):
    """Convenience pipeline: cloud, plane, ordered masks for one frame.

    Returns (plane, masks); masks is empty when nothing rises above the
    table. Raises NoDominantPlane/ValueError like its parts.
    """
    from .renderer import back_project

    cloud = back_project(frame)
    plane = fit_dominant_plane(cloud, iterations=iterations,
                               inlier_threshold=inlier_threshold, seed=seed,
                               min_inlier_fraction=min_inlier_fraction)
    masks = extract_object_masks(frame, plane, min_height=min_height, min_pixels=min_pixels)
    return plane, masks
