"""Training-set expansion from canonical-view captures.

Two families: in-plane variation (rotation/scale/flip about the mask
centroid, composited over replacement backgrounds) and re-rendered pose
jitter (seeded draws inside an angular cone around the canonical viewpoint,
each re-segmented). Masks are resampled nearest-neighbor so they stay
binary; images are bilinear.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass
from itertools import product

import numpy as np
from scipy import ndimage

from .renderer import render
from .segmenter import NoDominantPlane, ObjectMask, segment_frame
from .viewsphere import ViewSphere, look_at

log = logging.getLogger(__name__)

MAX_JITTER_RAD = np.pi / 8


@dataclass(frozen=True)
class TrainingSample:
    image: np.ndarray      # (H, W, 3) uint8
    mask: ObjectMask
    label: str
    provenance: tuple      # (source view index, transform description)

    def __post_init__(self):
        if not self.label:
            raise ValueError("training sample label must be nonempty")
        if self.image.shape[:2] != self.mask.mask.shape:
            raise ValueError("image and mask dimensions differ")
        self.image.setflags(write=False)


@dataclass(frozen=True)
class Augment2dParams:
    rotations_deg: tuple = (0.0, -15.0, 15.0, 90.0)
    scales: tuple = (0.8, 1.0, 1.25)
    flips: tuple = (False, True)
    backgrounds: tuple = ((40, 40, 40), (210, 210, 205))  # RGB, or None to keep source


def _mask_from_bits(bits: np.ndarray, component: int) -> ObjectMask | None:
    if not bits.any():
        return None
    vv, uu = np.nonzero(bits)
    return ObjectMask(mask=bits, bbox=(int(uu.min()), int(vv.min()), int(uu.max()), int(vv.max())),
                      pixel_count=int(bits.sum()), component=component)


def _transform_about(image, mask_bits, centroid_rc, rot_deg, scale, flip):
    """Rotate/scale/flip image and mask about a fixed point, in lockstep."""
    theta = np.radians(rot_deg)
    rot = np.array([[np.cos(theta), -np.sin(theta)],
                    [np.sin(theta), np.cos(theta)]])
    flip_m = np.diag([1.0, -1.0 if flip else 1.0])
    inverse = (flip_m @ rot.T) / scale     # output coords -> input coords
    center = np.asarray(centroid_rc, dtype=np.float64)
    offset = center - inverse @ center

    out_img = np.empty_like(image)
    for ch in range(3):
        out_img[:, :, ch] = ndimage.affine_transform(
            image[:, :, ch], inverse, offset=offset, order=1, mode="constant", cval=0)
    out_bits = ndimage.affine_transform(
        mask_bits.astype(np.uint8), inverse, offset=offset, order=0,
        mode="constant", cval=0) > 0
    return out_img, out_bits


def augment_2d(sample: TrainingSample, params: Augment2dParams | None = None,
               seed: int = 0) -> list:
    """One sample per (rotation, scale, flip, background) combination.

    The identity combination (0 deg, scale 1, no flip, background None)
    reproduces the input pixel for pixel. Combinations whose transformed
    mask leaves the frame entirely are dropped. The transform grid is fully
    parameterized, so `seed` does not influence the output; it is accepted
    for symmetry with the pose-jitter family.
    """
    del seed
    params = params or Augment2dParams()
    if any(s <= 0 for s in params.scales):
        raise ValueError("scales must be positive")

    vv, uu = np.nonzero(sample.mask.mask)
    centroid = (float(vv.mean()), float(uu.mean()))
    src_view = sample.provenance[0]

    out = []
    for rot, scale, flip, bg in product(params.rotations_deg, params.scales,
                                        params.flips, params.backgrounds):
        identity = rot % 360.0 == 0.0 and scale == 1.0 and not flip
        if identity:
            img_t = sample.image.copy()
            bits_t = sample.mask.mask.copy()
        else:
            img_t, bits_t = _transform_about(sample.image, sample.mask.mask,
                                             centroid, rot, scale, flip)
        mask_t = _mask_from_bits(bits_t, sample.mask.component)
        if mask_t is None:
            continue
        if bg is None:
            composed = np.where(bits_t[..., None], img_t, sample.image)
        else:
            backdrop = np.empty_like(img_t)
            backdrop[:] = np.asarray(bg, dtype=np.uint8)
            composed = np.where(bits_t[..., None], img_t, backdrop)
        desc = f"rot{rot:g}_scale{scale:g}_flip{int(flip)}_bg{bg}"
        out.append(TrainingSample(image=composed, mask=mask_t, label=sample.label,
                                  provenance=(src_view, desc)))
    return out


def cone_directions(direction: np.ndarray, jitter: float, count: int,
                    rng: np.random.Generator) -> np.ndarray:
    """`count` unit vectors drawn uniformly within `jitter` radians of `direction`."""
    direction = np.asarray(direction, dtype=np.float64)
    if count == 0:
        return np.zeros((0, 3))
    u = rng.uniform(0.0, 1.0, size=count)
    phi = rng.uniform(0.0, 2.0 * np.pi, size=count)
    cos_t = 1.0 - u * (1.0 - np.cos(jitter))
    sin_t = np.sqrt(np.maximum(0.0, 1.0 - cos_t**2))
    helper = np.array([1.0, 0.0, 0.0])
    if abs(direction @ helper) > 0.9:
        helper = np.array([0.0, 1.0, 0.0])
    e1 = np.cross(direction, helper)
    e1 /= np.linalg.norm(e1)
    e2 = np.cross(direction, e1)
    return (cos_t[:, None] * direction[None, :]
            + sin_t[:, None] * (np.cos(phi)[:, None] * e1 + np.sin(phi)[:, None] * e2))


def augment_3d(scene, sphere: ViewSphere, view_index: int, label: str,
               jitter: float = 0.08, count: int = 4, seed: int = 0,
               target=None, width: int = 160, height: int = 120,
               seg_seed: int = 0, min_height: float = 5.0, min_pixels: int = 30) -> list:
    """Re-render from seeded pose perturbations around a canonical viewpoint.

    Draws whose segmentation finds no object are skipped, so fewer than
    `count` samples may come back; callers see the shortfall in the list
    length.
    """
    from .renderer import scene_center

    if not 0.0 <= jitter < MAX_JITTER_RAD:
        raise ValueError(f"jitter must lie in [0, pi/8), got {jitter!r}")
    target = scene_center(scene) if target is None else np.asarray(target, dtype=np.float64)
    rng = np.random.default_rng(seed)
    directions = cone_directions(sphere.viewpoints[view_index], jitter, count, rng)

    samples = []
    for i, d in enumerate(directions):
        pose = look_at(target + sphere.radius * d, target)
        frame = render(scene, pose, width=width, height=height)
        try:
            _, masks = segment_frame(frame, seed=seg_seed, min_height=min_height,
                                     min_pixels=min_pixels)
        except (NoDominantPlane, ValueError):
            masks = []
        if not masks:
            continue
        samples.append(TrainingSample(
            image=frame.color.copy(), mask=masks[0], label=label,
            provenance=(view_index, f"jitter{jitter:g}_draw{i}")))
    if len(samples) < count:
        log.debug("pose jitter shortfall: %d of %d draws kept", len(samples), count)
    return samples


def export_training_set(samples, directory) -> str:
    """Write samples as PPM+PBM pairs plus a manifest; returns the manifest path.

    Manifest lines: sample id, label, source view, transform description
    (tab-separated), one per sample, after a magic+version header.
    """
    from pathlib import Path

    from .renderer import save_pbm, save_ppm

    directory = Path(directory)
    directory.mkdir(parents=True, exist_ok=True)
    lines = ["deskteach-training v1"]
    for i, sample in enumerate(samples):
        stem = f"sample_{i:04d}"
        save_ppm(directory / f"{stem}.ppm", sample.image)
        save_pbm(directory / f"{stem}.pbm", sample.mask.mask)
        view, transform = sample.provenance
        lines.append(f"{stem}\t{sample.label}\t{view}\t{transform}")
    manifest = directory / "manifest.tsv"
    manifest.write_text("\n".join(lines) + "\n", encoding="utf-8")
    return str(manifest)
