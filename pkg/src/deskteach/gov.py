"""Goodness-of-view scoring of a masked object region.

Four per-view metrics, each normalized to [0, 1]:

* silhouette: object boundary pixels over the frame half-perimeter,
* depth entropy: histogram entropy of masked depths over their own range,
* curvature entropy: histogram entropy of a per-pixel normal-deviation proxy,
* color entropy: histogram entropy of masked hues (saturated pixels) plus
  brightness (gray pixels).

The combined score is a weighted sum. By convention an empty mask scores
all zeros rather than raising, so viewpoint exploration can walk through
views where the object is hidden or clipped.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .renderer import RgbdFrame, camera_points_grid

WEIGHT_SUM_TOL = 1e-9
CURVATURE_CLAMP = 0.2
DEPTH_RANGE_FLOOR_MM = 1.0


@dataclass(frozen=True)
class GovWeights:
    w_sil: float = 0.25
    w_depth: float = 0.25
    w_curv: float = 0.25
    w_color: float = 0.25

    def __post_init__(self):
        v = self.as_array()
        if (v < 0).any():
            raise ValueError("GOV weights must be nonnegative")
        if abs(float(v.sum()) - 1.0) > WEIGHT_SUM_TOL:
            raise ValueError(f"GOV weights must sum to 1, got {float(v.sum())!r}")

    def as_array(self) -> np.ndarray:
        return np.array([self.w_sil, self.w_depth, self.w_curv, self.w_color])


@dataclass(frozen=True)
class GovScore:
    silhouette: float
    depth_entropy: float
    curvature_entropy: float
    color_entropy: float
    combined: float

    ZERO = None  # set below

    def as_tuple(self):
        return (self.silhouette, self.depth_entropy, self.curvature_entropy,
                self.color_entropy, self.combined)


GovScore.ZERO = GovScore(0.0, 0.0, 0.0, 0.0, 0.0)


def _as_bool_mask(mask) -> np.ndarray:
    inner = getattr(mask, "mask", mask)
    return np.asarray(inner, dtype=bool)


def normalized_entropy(counts, bins: int) -> float:
    """Shannon entropy (base 2) of a histogram, normalized by log2(bins)."""
    counts = np.asarray(counts, dtype=np.float64)
    total = counts.sum()
    if total <= 0:
        return 0.0
    p = counts[counts > 0] / total
    return float(-(p * np.log2(p)).sum() / np.log2(bins) + 0.0)


def silhouette_length(mask, frame_dims) -> float:
    """Boundary-pixel count over 2*(width+height), clamped to 1."""
    m = _as_bool_mask(mask)
    if not m.any():
        return 0.0
    width, height = frame_dims
    padded = np.zeros((m.shape[0] + 2, m.shape[1] + 2), dtype=bool)
    padded[1:-1, 1:-1] = m
    interior = (padded[:-2, 1:-1] & padded[2:, 1:-1] &
                padded[1:-1, :-2] & padded[1:-1, 2:])
    boundary = int((m & ~interior).sum())
    return min(1.0, boundary / (2.0 * (width + height)))


def depth_entropy(frame: RgbdFrame, mask, bins: int = 32) -> float:
    """Entropy of masked depths over their own [min, max] span."""
    if bins < 2:
        raise ValueError("depth_entropy needs at least 2 bins")
    m = _as_bool_mask(mask) & frame.valid
    depths = frame.depth[m]
    if depths.size == 0:
        return 0.0
    lo, hi = float(depths.min()), float(depths.max())
    if hi - lo < DEPTH_RANGE_FLOOR_MM:
        return 0.0
    counts, _ = np.histogram(depths, bins=bins, range=(lo, hi))
    return normalized_entropy(counts, bins)


def _pixel_normals(frame: RgbdFrame):
    """Central-difference surface normals; returns (normals, validity)."""
    grid = camera_points_grid(frame)
    valid = frame.valid
    h, w = valid.shape
    normals = np.zeros((h, w, 3))
    ok = np.zeros((h, w), dtype=bool)
    du = grid[1:-1, 2:] - grid[1:-1, :-2]
    dv = grid[2:, 1:-1] - grid[:-2, 1:-1]
    pair_ok = (valid[1:-1, 2:] & valid[1:-1, :-2] &
               valid[2:, 1:-1] & valid[:-2, 1:-1] & valid[1:-1, 1:-1])
    n = np.cross(du, dv)
    norm = np.linalg.norm(n, axis=-1)
    pair_ok &= norm > 1e-12
    with np.errstate(invalid="ignore", divide="ignore"):
        n = n / norm[..., None]
    normals[1:-1, 1:-1][pair_ok] = n[pair_ok]
    ok[1:-1, 1:-1] = pair_ok
    return normals, ok


def curvature_entropy(frame: RgbdFrame, mask, bins: int = 32) -> float:
    """Entropy of a curvature proxy: deviation from the mean neighbor normal."""
    if bins < 2:
        raise ValueError("curvature_entropy needs at least 2 bins")
    m = _as_bool_mask(mask)
    if not m.any():
        return 0.0
    normals, ok = _pixel_normals(frame)

    h, w = ok.shape
    acc = np.zeros((h, w, 3))
    cnt = np.zeros((h, w))
    for dv, du in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        src_v = slice(max(0, dv), h + min(0, dv))
        src_u = slice(max(0, du), w + min(0, du))
        dst_v = slice(max(0, -dv), h + min(0, -dv))
        dst_u = slice(max(0, -du), w + min(0, -du))
        weight = ok[src_v, src_u].astype(np.float64)
        acc[dst_v, dst_u] += normals[src_v, src_u] * weight[..., None]
        cnt[dst_v, dst_u] += weight

    mean_norm = np.linalg.norm(acc, axis=-1)
    proxy_ok = ok & (cnt > 0) & (mean_norm > 1e-12)
    with np.errstate(invalid="ignore", divide="ignore"):
        unit_mean = acc / mean_norm[..., None]
    dev = 1.0 - np.einsum("hwk,hwk->hw", normals, unit_mean)
    proxies = np.clip(dev[m & proxy_ok], 0.0, CURVATURE_CLAMP)
    if proxies.size == 0:
        return 0.0
    counts, _ = np.histogram(proxies, bins=bins, range=(0.0, CURVATURE_CLAMP))
    return normalized_entropy(counts, bins)


def rgb_to_hsv_arrays(colors_u8: np.ndarray):
    """Vectorized HSV: hue in degrees [0, 360), saturation and value in [0, 1]."""
    c = colors_u8.astype(np.float64) / 255.0
    r, g, b = c[..., 0], c[..., 1], c[..., 2]
    mx = c.max(axis=-1)
    mn = c.min(axis=-1)
    delta = mx - mn
    hue = np.zeros_like(mx)
    nz = delta > 0
    rmax = nz & (mx == r)
    gmax = nz & (mx == g) & ~rmax
    bmax = nz & ~rmax & ~gmax
    hue[rmax] = np.mod((g[rmax] - b[rmax]) / delta[rmax], 6.0)
    hue[gmax] = (b[gmax] - r[gmax]) / delta[gmax] + 2.0
    hue[bmax] = (r[bmax] - g[bmax]) / delta[bmax] + 4.0
    hue *= 60.0
    sat = np.where(mx > 0, np.divide(delta, mx, out=np.zeros_like(mx), where=mx > 0), 0.0)
    return hue, sat, mx


def color_histogram(colors_u8: np.ndarray, hue_bins: int = 30, gray_bins: int = 8,
                    sat_gate: float = 0.2, val_gate: float = 0.2) -> np.ndarray:
    """Concatenated hue + gray-value histogram used by GOV and the detector."""
    hue, sat, val = rgb_to_hsv_arrays(colors_u8)
    colorful = (sat > sat_gate) & (val > val_gate)
    hue_counts, _ = np.histogram(hue[colorful], bins=hue_bins, range=(0.0, 360.0))
    gray_counts, _ = np.histogram(val[~colorful], bins=gray_bins, range=(0.0, 1.0))
    return np.concatenate([hue_counts, gray_counts]).astype(np.float64)


def color_entropy(frame: RgbdFrame, mask, hue_bins: int = 30, gray_bins: int = 8) -> float:
    """Entropy of the gated hue + gray histogram of masked pixels."""
    if hue_bins < 2:
        raise ValueError("color_entropy needs at least 2 hue bins")
    m = _as_bool_mask(mask)
    if not m.any():
        return 0.0
    counts = color_histogram(frame.color[m], hue_bins=hue_bins, gray_bins=gray_bins)
    return normalized_entropy(counts, hue_bins + gray_bins)


def combined_gov(components, weights: GovWeights) -> float:
    """Weighted sum of the four metric values."""
    comps = np.asarray(components, dtype=np.float64)
    if comps.shape != (4,):
        raise ValueError("expected exactly 4 metric components")
    return float(comps @ weights.as_array())


def evaluate_gov(frame: RgbdFrame, mask, weights: GovWeights | None = None,
                 depth_bins: int = 32, curv_bins: int = 32,
                 hue_bins: int = 30, gray_bins: int = 8) -> GovScore:
    """All four metrics plus the weighted combination for one masked view.

    `mask` may be None or empty, in which case the all-zero score comes back.
    """
    weights = weights or GovWeights()
    if mask is None or not _as_bool_mask(mask).any():
        return GovScore.ZERO
    sil = silhouette_length(mask, (frame.width, frame.height))
    dep = depth_entropy(frame, mask, bins=depth_bins)
    cur = curvature_entropy(frame, mask, bins=curv_bins)
    col = color_entropy(frame, mask, hue_bins=hue_bins, gray_bins=gray_bins)
    return GovScore(sil, dep, cur, col, combined_gov((sil, dep, cur, col), weights))
