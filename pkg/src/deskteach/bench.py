"""View-budget benchmark: selection strategies vs downstream accuracy.

For each (strategy, budget, seed) cell a fresh registry is trained on the
strategy's selected views of every corpus object, then evaluated on the 10
viewpoints geodesically farthest from that object's training set. Accuracy
is per-proposal top-1 label accuracy; a test view with no proposal at all
counts as one incorrect answer. Raw rows and mean/stddev aggregates are
emitted as CSV.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .augmenter import Augment2dParams, TrainingSample, augment_2d
from .detector import Registry, detect, extract_features, register_object
from .explorer import explore, make_scene_evaluator
from .gov import GovWeights
from .meshes import hsv_color, make_box, make_cylinder, make_gear_like, make_shaft
from .renderer import (
    SceneSpec,
    back_project,
    default_table,
    place_on_table,
    render,
    scene_center,
)
from .segmenter import NoDominantPlane, fit_dominant_plane, segment_frame
from .viewsphere import ViewSphere, build_view_sphere, camera_pose_for

STRATEGIES = ("random", "explore", "oracle")

RAW_FIELDS = ("object", "strategy", "budget", "seed", "selected_views",
              "train_samples", "proposals", "correct", "accuracy")
AGG_FIELDS = ("strategy", "budget", "mean_accuracy", "std_accuracy", "rows")

# light in-plane variation applied to every training capture
BENCH_AUGMENT = Augment2dParams(rotations_deg=(0.0, 90.0), scales=(1.0,),
                                flips=(False,), backgrounds=(None,))


HUE_BINS = 30  # keep in sync with the detector's histogram


def corpus_palette(index: int, n_objects: int) -> list:
    """Two near-identical tones inside one hue bin, bins pairwise disjoint.

    Each object owns a single 12-degree hue bin, so its color histogram is
    essentially viewpoint-invariant while any two objects stay a full
    histogram swap apart (the hue-disjoint construction the no-forgetting
    checks rely on). Requires n_objects <= 20 for distinct bins.
    """
    bin_index = int(np.floor(index * HUE_BINS / max(n_objects, HUE_BINS // 2)))
    center = (bin_index + 0.5) / HUE_BINS
    spread = 0.25 / HUE_BINS
    return [hsv_color(center - spread), hsv_color(center + spread, value=0.85)]


PRONE = np.array([[1.0, 0.0, 0.0],
                  [0.0, 0.0, -1.0],
                  [0.0, 1.0, 0.0]])  # lie on the side: local +z -> world +y


def generate_corpus(n_objects: int, seed: int = 0) -> list:
    """Seeded single-object scenes with pairwise-disjoint hue bins.

    Objects rest in their natural pose: gears flat on a face, shafts and
    cylinders lying prone, boxes as low plates.
    """
    if n_objects < 1:
        raise ValueError("corpus needs at least one object")
    rng = np.random.default_rng(seed)
    kinds = ("gear", "shaft", "box", "cylinder")
    scenes = []
    for i in range(n_objects):
        kind = kinds[i % len(kinds)]
        palette = corpus_palette(i, n_objects)
        rotation = None
        if kind == "gear":
            teeth = int(rng.integers(6, 11))
            outer = float(rng.uniform(30.0, 38.0))
            mesh = make_gear_like(teeth=teeth, outer_radius=outer,
                                  body_radius=0.64 * outer,
                                  height=float(rng.uniform(1.20, 1.30)) * outer,
                                  palette=palette)
        elif kind == "shaft":
            r_end = float(rng.uniform(8.0, 11.0))
            flange = float(rng.uniform(1.6, 2.0)) * r_end
            heights = (float(rng.uniform(16.0, 20.0)), float(rng.uniform(8.0, 12.0)),
                       float(rng.uniform(20.0, 26.0)))
            mesh = make_shaft(radii=(r_end, flange, r_end), section_heights=heights,
                              palette=palette)
            rotation = PRONE
        elif kind == "box":
            mesh = make_box(float(rng.uniform(56.0, 64.0)),
                            float(rng.uniform(28.0, 34.0)),
                            float(rng.uniform(16.0, 22.0)), palette=palette)
        else:
            mesh = make_cylinder(float(rng.uniform(14.0, 18.0)),
                                 float(rng.uniform(46.0, 56.0)),
                                 segments=20, palette=palette)
            rotation = PRONE
        name = f"{kind}-{i:02d}"
        scenes.append(SceneSpec(objects=(place_on_table(name, mesh, rotation=rotation),),
                                table=default_table()))
    return scenes


def object_name(scene: SceneSpec) -> str:
    return scene.objects[0].name


def select_views(strategy: str, scene: SceneSpec, sphere: ViewSphere, budget: int,
                 weights: GovWeights | None = None, seed: int = 0,
                 **evaluator_kwargs) -> list:
    """Distinct view indices of size min(budget, viewpoint count)."""
    if budget < 1:
        raise ValueError("budget must be >= 1")
    n = sphere.viewpoint_count
    size = min(budget, n)
    if strategy == "random":
        rng = np.random.default_rng(seed)
        return [int(i) for i in rng.choice(n, size=size, replace=False)]
    if strategy == "explore":
        state = explore(scene, sphere, budget=size, weights=weights, **evaluator_kwargs)
        return [r.index for r in state.visited]
    if strategy == "oracle":
        evaluator = make_scene_evaluator(scene, sphere, weights, **evaluator_kwargs)
        scored = [(evaluator(i)[0].combined, i) for i in range(n)]
        scored.sort(key=lambda t: (-t[0], t[1]))
        return [i for _, i in scored[:size]]
    raise ValueError(f"unknown strategy {strategy!r} (expected one of {STRATEGIES})")


def farthest_test_views(sphere: ViewSphere, training: list, count: int = 10) -> list:
    """The `count` viewpoints with the largest minimum distance to the
    training set; disjoint from it by construction."""
    train_dirs = sphere.viewpoints[list(training)]
    candidates = [i for i in range(sphere.viewpoint_count) if i not in set(training)]
    dots = sphere.viewpoints[candidates] @ train_dirs.T
    min_dist = np.arccos(np.clip(dots, -1.0, 1.0)).min(axis=1)
    order = sorted(range(len(candidates)), key=lambda j: (-min_dist[j], candidates[j]))
    return [candidates[j] for j in order[:count]]


def held_out_views(sphere: ViewSphere, training: list, count: int, seed) -> list:
    """Seeded uniform draw of test viewpoints disjoint from the training set.

    A strategy-agnostic held-out set: picking the views farthest from the
    training set instead would hand concentrated selectors a systematically
    harder exam than scattered ones, which defeats a strategy comparison.
    """
    candidates = [i for i in range(sphere.viewpoint_count) if i not in set(training)]
    rng = np.random.default_rng(seed)
    size = min(count, len(candidates))
    picks = rng.choice(len(candidates), size=size, replace=False)
    return [candidates[int(j)] for j in picks]


def _training_samples(scene: SceneSpec, sphere: ViewSphere, views: list,
                      label: str, augment: bool, seg_seed: int = 0,
                      noise_sigma: float = 0.0) -> list:
    samples = []
    center = scene_center(scene)
    for view in views:
        frame = render(scene, camera_pose_for(sphere, view, target=center),
                       depth_noise_sigma=noise_sigma, noise_seed=view)
        try:
            _, masks = segment_frame(frame, seed=seg_seed)
        except (NoDominantPlane, ValueError):
            continue
        if not masks:
            continue
        base = TrainingSample(image=frame.color.copy(), mask=masks[0], label=label,
                              provenance=(view, "capture"))
        if augment:
            samples.extend(augment_2d(base, BENCH_AUGMENT))
        else:
            samples.append(base)
    return samples


@dataclass
class BenchResult:
    rows: list = field(default_factory=list)
    aggregates: list = field(default_factory=list)

    def aggregate_from_rows(self) -> list:
        """Mean/stddev per (strategy, budget), recomputed from raw rows."""
        cells: dict = {}
        for row in self.rows:
            cells.setdefault((row["strategy"], row["budget"]), []).append(row["accuracy"])
        out = []
        for (strategy, budget), accs in sorted(cells.items()):
            mean = sum(accs) / len(accs)
            var = sum((a - mean) ** 2 for a in accs) / len(accs)
            out.append({"strategy": strategy, "budget": budget,
                        "mean_accuracy": mean, "std_accuracy": math.sqrt(var),
                        "rows": len(accs)})
        return out

    def mean_accuracy(self, strategy: str, budget: int) -> float:
        for agg in self.aggregates:
            if agg["strategy"] == strategy and agg["budget"] == budget:
                return agg["mean_accuracy"]
        raise KeyError(f"no aggregate for ({strategy}, {budget})")


def run_benchmark(corpus: list, strategies, budgets, seeds, sphere: ViewSphere | None = None,
                  weights: GovWeights | None = None, unknown_threshold: float = 0.8,
                  test_view_count: int = 10, augment: bool = True,
                  noise_sigma: float = 0.0, progress=None) -> BenchResult:
    """Full strategy x budget x seed sweep over the corpus."""
    if not corpus or not budgets:
        raise ValueError("corpus and budgets must be nonempty")
    sphere = sphere or build_view_sphere(4, 350.0, -0.10)
    result = BenchResult()

    for strategy in strategies:
        for budget in budgets:
            for seed in seeds:
                registry = Registry(unknown_threshold=unknown_threshold)
                selections: dict = {}
                for obj_idx, scene in enumerate(corpus):
                    name = object_name(scene)
                    views = select_views(strategy, scene, sphere, budget,
                                         weights=weights, seed=seed * 10007 + obj_idx,
                                         depth_noise_sigma=noise_sigma)
                    selections[name] = views
                    samples = _training_samples(scene, sphere, views, name, augment,
                                                noise_sigma=noise_sigma)
                    if samples:
                        register_object(registry, name, samples)
                for obj_idx, scene in enumerate(corpus):
                    name = object_name(scene)
                    views = selections[name]
                    center = scene_center(scene)
                    test_views = held_out_views(sphere, views, test_view_count,
                                                seed=(seed * 10007 + obj_idx, 0x7e57))
                    proposals = 0
                    correct = 0
                    train_count = (registry.models[name].exemplar_count
                                   if name in registry else 0)
                    for tv in test_views:
                        frame = render(scene, camera_pose_for(sphere, tv, target=center),
                                       depth_noise_sigma=noise_sigma,
                                       noise_seed=seed * 31 + tv)
                        try:
                            plane = fit_dominant_plane(back_project(frame), seed=0)
                            found = detect(registry, frame, plane)
                        except (NoDominantPlane, ValueError):
                            found = []
                        if not found:
                            proposals += 1  # silent view counted as a miss
                            continue
                        for det in found:
                            proposals += 1
                            if det.label == name:
                                correct += 1
                    accuracy = correct / proposals if proposals else 0.0
                    result.rows.append({
                        "object": name, "strategy": strategy, "budget": budget,
                        "seed": seed,
                        "selected_views": ";".join(str(v) for v in views),
                        "train_samples": train_count,
                        "proposals": proposals, "correct": correct,
                        "accuracy": accuracy,
                    })
                if progress is not None:
                    progress(strategy, budget, seed)
    result.aggregates = result.aggregate_from_rows()
    return result


def corpus_feature_separation(corpus: list, sphere: ViewSphere | None = None) -> np.ndarray:
    """Pairwise distances between per-object mean top-view features."""
    sphere = sphere or build_view_sphere(2, 350.0, -0.10)
    feats = []
    for scene in corpus:
        frame = render(scene, camera_pose_for(sphere, 0, target=scene_center(scene)))
        _, masks = segment_frame(frame)
        feats.append(extract_features(frame.color, masks[0]))
    feats = np.array(feats)
    n = len(feats)
    out = np.zeros((n, n))
    for i in range(n):
        for j in range(n):
            d = feats[i] - feats[j]
            out[i, j] = float(np.sqrt(d @ d))
    return out
