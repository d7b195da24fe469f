"""Incremental instance detector over handcrafted exemplar features.

Each registered object keeps an append-only matrix of feature vectors, one
per training sample. Proposals from the segmenter are labeled by the nearest
exemplar across all models (block-scaled Euclidean distance), or "unknown"
beyond a distance threshold. Because registration only ever adds a new
model, everything learned earlier stays bit-identical: there is no shared
parameter vector to forget with.

Feature layout (48 values):
    [0:38)   gated color histogram, 30 hue + 8 gray bins, L1-normalized
    [38:45)  the 7 moment invariants of the mask, signed-log scaled
    [45]     fill ratio (mask pixels / bounding-box area)
    [46]     aspect ratio (short side / long side)
    [47]     normalized silhouette length

The backend swap point is the (extract_features, classify) pair: a learned
embedding plus classifier can replace them while detect/query, Detection,
and the registry file survive unchanged.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gov import color_histogram, silhouette_length
from .renderer import RgbdFrame
from .segmenter import ObjectMask, PlaneModel, extract_object_masks

FEATURE_DIM = 48
HIST_SLICE = slice(0, 38)
HU_SLICE = slice(38, 45)
GEOM_SLICE = slice(45, 48)

# relative influence of each feature block on the distance metric
BLOCK_SCALE = np.concatenate([np.full(38, 1.0), np.full(7, 0.5), np.full(3, 1.0)])

# gentle signed-log; keeps the moment block commensurate with the color
# block across viewpoint changes instead of exploding on near-zero invariants
HU_LOG_SCALE = 1e-3
DEFAULT_UNKNOWN_THRESHOLD = 0.8
UNKNOWN_LABEL = "unknown"


def _hu_invariants(bits: np.ndarray) -> np.ndarray:
    """The 7 rotation/scale/translation-invariant mask moments."""
    vv, uu = np.nonzero(bits)
    m00 = float(vv.size)
    x = uu.astype(np.float64)
    y = vv.astype(np.float64)
    xb, yb = x.mean(), y.mean()
    dx, dy = x - xb, y - yb

    def mu(p, q):
        return float((dx**p * dy**q).sum())

    def eta(p, q):
        return mu(p, q) / m00 ** (1.0 + (p + q) / 2.0)

    n20, n02, n11 = eta(2, 0), eta(0, 2), eta(1, 1)
    n30, n03 = eta(3, 0), eta(0, 3)
    n21, n12 = eta(2, 1), eta(1, 2)

    a = n30 + n12
    b = n21 + n03
    c = n30 - 3 * n12
    d = 3 * n21 - n03
    h = np.array([
        n20 + n02,
        (n20 - n02) ** 2 + 4 * n11**2,
        c**2 + d**2,
        a**2 + b**2,
        c * a * (a**2 - 3 * b**2) + d * b * (3 * a**2 - b**2),
        (n20 - n02) * (a**2 - b**2) + 4 * n11 * a * b,
        d * a * (a**2 - 3 * b**2) - c * b * (3 * a**2 - b**2),
    ])
    return np.sign(h) * np.log10(1.0 + np.abs(h) / HU_LOG_SCALE)


def extract_features(image: np.ndarray, mask) -> np.ndarray:
    """Deterministic 48-dim descriptor of one masked object region."""
    bits = np.asarray(getattr(mask, "mask", mask), dtype=bool)
    if not bits.any():
        raise ValueError("cannot extract features from an empty mask")

    hist = color_histogram(image[bits])
    total = hist.sum()
    if total > 0:
        hist = hist / total

    hu = _hu_invariants(bits)

    vv, uu = np.nonzero(bits)
    w = int(uu.max()) - int(uu.min()) + 1
    h = int(vv.max()) - int(vv.min()) + 1
    fill = vv.size / float(w * h)
    aspect = min(w, h) / float(max(w, h))
    sil = silhouette_length(bits, (image.shape[1], image.shape[0]))

    out = np.empty(FEATURE_DIM)
    out[HIST_SLICE] = hist
    out[HU_SLICE] = hu
    out[GEOM_SLICE] = (fill, aspect, sil)
    return out


def feature_distance(a: np.ndarray, b: np.ndarray) -> float:
    """Block-scaled Euclidean distance between two feature vectors."""
    d = (np.asarray(a) - np.asarray(b)) * BLOCK_SCALE
    return float(np.sqrt(d @ d))


def score_from_distance(distance: float) -> float:
    """Detection confidence, strictly decreasing in distance, in (0, 1]."""
    return 1.0 / (1.0 + distance)


@dataclass
class ObjectModel:
    name: str
    ordinal: int               # registration order, strictly increasing
    exemplars: np.ndarray      # (K, FEATURE_DIM), rows append-only

    @property
    def exemplar_count(self) -> int:
        return self.exemplars.shape[0]


@dataclass
class Registry:
    models: dict = field(default_factory=dict)   # name -> ObjectModel
    unknown_threshold: float = DEFAULT_UNKNOWN_THRESHOLD
    next_ordinal: int = 1

    def names(self) -> list:
        return sorted(self.models, key=lambda n: self.models[n].ordinal)

    def __contains__(self, name) -> bool:
        return name in self.models


def _features_of_samples(samples) -> np.ndarray:
    if not samples:
        raise ValueError("need at least one training sample")
    return np.vstack([extract_features(s.image, s.mask) for s in samples])


def register_object(registry: Registry, name: str, samples) -> Registry:
    """Add a new object model; no existing model is read or written."""
    if name in registry.models:
        raise ValueError(f"object {name!r} is already registered")
    feats = _features_of_samples(samples)
    registry.models[name] = ObjectModel(name=name, ordinal=registry.next_ordinal,
                                        exemplars=feats)
    registry.next_ordinal += 1
    return registry


def extend_object(registry: Registry, name: str, samples) -> Registry:
    """Append exemplars to an existing model (used by the flip pass)."""
    if name not in registry.models:
        raise KeyError(f"object {name!r} is not registered")
    feats = _features_of_samples(samples)
    model = registry.models[name]
    model.exemplars = np.vstack([model.exemplars, feats])
    return registry


@dataclass(frozen=True)
class Detection:
    label: str
    bbox: tuple               # (u0, v0, u1, v1) inclusive
    score: float
    mask: ObjectMask
    distance: float | None    # None only when the registry holds no exemplars


def _nearest_exemplar(registry: Registry, feature: np.ndarray):
    """(distance, model) of the closest exemplar, ties by ordinal then row."""
    best = None
    for name in registry.names():
        model = registry.models[name]
        delta = (model.exemplars - feature) * BLOCK_SCALE
        dists = np.sqrt(np.einsum("ij,ij->i", delta, delta))
        row = int(np.argmin(dists))
        key = (float(dists[row]), model.ordinal, row)
        if best is None or key < best[0]:
            best = (key, model)
    if best is None:
        return None, None
    return best[0][0], best[1]


def classify(registry: Registry, feature: np.ndarray):
    """(label, score, distance) for one feature vector."""
    distance, model = _nearest_exemplar(registry, feature)
    if distance is None:
        return UNKNOWN_LABEL, 1.0, None
    if distance > registry.unknown_threshold:
        return UNKNOWN_LABEL, score_from_distance(distance), distance
    return model.name, score_from_distance(distance), distance


def detect(registry: Registry, frame: RgbdFrame, plane: PlaneModel,
           min_height: float = 5.0, min_pixels: int = 30) -> list:
    """Segment proposals and label each by its nearest exemplar."""
    detections = []
    for mask in extract_object_masks(frame, plane, min_height=min_height,
                                     min_pixels=min_pixels):
        feature = extract_features(frame.color, mask)
        label, score, distance = classify(registry, feature)
        detections.append(Detection(label=label, bbox=mask.bbox, score=score,
                                    mask=mask, distance=distance))
    return detections


def query(registry: Registry, frame: RgbdFrame, plane: PlaneModel, name: str,
          min_height: float = 5.0, min_pixels: int = 30) -> Detection | None:
    """Best detection carrying `name`, or None when the object is not seen."""
    if name not in registry.models:
        raise KeyError(f"object {name!r} is not registered")
    matches = [d for d in detect(registry, frame, plane, min_height, min_pixels)
               if d.label == name]
    if not matches:
        return None
    return max(matches, key=lambda d: d.score)
