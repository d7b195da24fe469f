"""Online viewpoint exploration over the view sphere.

The routine alternates two moves under a hard evaluation budget: local
hill-climbing on combined GOV across sphere adjacency, then a jump to the
unvisited viewpoint geodesically farthest from the current one. Every
evaluation (including neighbors probed during a climb) counts against the
budget, mirroring a robot that pays for every capture. No viewpoint is ever
evaluated twice.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .gov import GovScore, GovWeights, evaluate_gov
from .viewsphere import ViewSphere, camera_pose_for, neighbors


class BudgetExhausted(ValueError):
    pass


class AlreadyVisited(ValueError):
    pass


@dataclass
class VisitRecord:
    index: int
    score: GovScore
    move: str                     # "start" | "climb" | "jump"
    frame: object = None
    mask: object = None


@dataclass
class ExplorationState:
    """Single-writer record of one exploration run."""

    sphere: ViewSphere
    budget: int
    evaluator: object             # callable(index) -> (GovScore, frame, mask)
    visited: list = field(default_factory=list)
    trail: list = field(default_factory=list)   # accepted (move, index) steps
    current: int | None = None
    _by_index: dict = field(default_factory=dict)

    def is_visited(self, index: int) -> bool:
        return index in self._by_index

    def score_of(self, index: int) -> GovScore:
        return self._by_index[index].score

    def record_of(self, index: int) -> VisitRecord:
        return self._by_index[index]

    def budget_exhausted(self) -> bool:
        return len(self.visited) >= self.budget

    def all_visited(self) -> bool:
        return len(self.visited) >= self.sphere.viewpoint_count

    def evaluate_view(self, index: int, move: str = "start") -> GovScore:
        """Capture and score one viewpoint; errors on revisit or empty budget."""
        if self.budget_exhausted():
            raise BudgetExhausted(f"budget of {self.budget} evaluations exhausted")
        if self.is_visited(index):
            raise AlreadyVisited(f"viewpoint {index} was already evaluated")
        if not 0 <= index < self.sphere.viewpoint_count:
            raise IndexError(f"viewpoint index {index} out of range")
        score, frame, mask = self.evaluator(index)
        record = VisitRecord(index=index, score=score, move=move, frame=frame, mask=mask)
        self.visited.append(record)
        self._by_index[index] = record
        return score


def evaluate_view(state: ExplorationState, index: int, move: str = "start") -> GovScore:
    return state.evaluate_view(index, move)


def _accept(state: ExplorationState, move: str, index: int):
    state.current = index
    state.trail.append((move, index))


def hill_climb(state: ExplorationState, start: int) -> int:
    """Climb combined GOV over adjacency from an already-evaluated start.

    First-improvement climbing: unvisited neighbors of the current view are
    evaluated one at a time in ascending index order, and the climb moves as
    soon as one strictly improves on the current view (so an exact GOV tie
    among improving neighbors resolves to the lower index). Evaluating every
    neighbor before moving would spend the whole budget inside the start
    view's immediate neighborhood; single-step moves keep the trajectory
    walking uphill instead. Returns the resting view: one whose evaluated
    neighbors all failed to improve, or the best reached when the budget ran
    out mid-climb.
    """
    if not state.is_visited(start):
        raise ValueError(f"hill_climb start {start} must be evaluated first")
    origin = state.sphere.viewpoints[start]
    current = start
    improved = True
    while improved:
        improved = False
        # probe outward-most neighbors first (smallest dot with the climb
        # origin) so the walk leaves the start's plateau instead of circling
        # it; exact distance ties keep ascending index order
        candidates = sorted(
            (n for n in neighbors(state.sphere, current) if not state.is_visited(n)),
            key=lambda n: (round(float(state.sphere.viewpoints[n] @ origin), 9), n))
        for n in candidates:
            if state.budget_exhausted():
                return current
            score = state.evaluate_view(n, move="climb")
            if score.combined > state.score_of(current).combined:
                _accept(state, "climb", n)
                current = n
                improved = True
                break
    return current


def farthest_jump(state: ExplorationState) -> int | None:
    """Unvisited viewpoint farthest (great-circle) from the current view.

    None when every viewpoint is visited or the budget is spent; ties break
    toward the lower index.
    """
    if state.current is None:
        raise ValueError("exploration has not started")
    if state.budget_exhausted() or state.all_visited():
        return None
    unvisited = np.array([i for i in range(state.sphere.viewpoint_count)
                          if not state.is_visited(i)])
    cur = state.sphere.viewpoints[state.current]
    dots = state.sphere.viewpoints[unvisited] @ cur
    # max geodesic distance == min dot product; argmin picks the first (lowest
    # index) among exact ties because `unvisited` is ascending
    return int(unvisited[int(np.argmin(dots))])


def make_scene_evaluator(scene, sphere: ViewSphere, weights: GovWeights | None = None,
                         target=None, width: int = 160, height: int = 120,
                         seg_seed: int = 0, ransac_iterations: int = 200,
                         inlier_threshold: float = 3.0, min_height: float = 5.0,
                         min_pixels: int = 30, depth_bins: int = 32, curv_bins: int = 32,
                         hue_bins: int = 30, gray_bins: int = 8,
                         depth_noise_sigma: float = 0.0, noise_seed: int = 0):
    """Evaluator closure: render -> segment -> GOV for one viewpoint index.

    The sphere is centered on `target`, by default the scene's object
    center.
    """
    from .renderer import render, scene_center
    from .segmenter import NoDominantPlane, segment_frame

    weights = weights or GovWeights()
    if target is None:
        target = scene_center(scene)

    def evaluator(index: int):
        pose = camera_pose_for(sphere, index, target)
        frame = render(scene, pose, width=width, height=height,
                       depth_noise_sigma=depth_noise_sigma, noise_seed=noise_seed)
        try:
            _, masks = segment_frame(frame, iterations=ransac_iterations,
                                     inlier_threshold=inlier_threshold, seed=seg_seed,
                                     min_height=min_height, min_pixels=min_pixels)
            mask = masks[0] if masks else None
        except (NoDominantPlane, ValueError):
            mask = None
        score = evaluate_gov(frame, mask, weights, depth_bins=depth_bins,
                             curv_bins=curv_bins, hue_bins=hue_bins, gray_bins=gray_bins)
        return score, frame, mask

    return evaluator


def explore(scene, sphere: ViewSphere, budget: int, weights: GovWeights | None = None,
            start_index: int = 0, evaluator=None, **evaluator_kwargs) -> ExplorationState:
    """Run the full climb/jump loop from the default top view.

    Stops when the budget is spent or every viewpoint is visited. A custom
    `evaluator` (index -> (GovScore, frame, mask)) replaces the render
    pipeline, which is how synthetic GOV fields are injected in tests.
    """
    if sphere.viewpoint_count == 0:
        raise ValueError("cannot explore an empty view sphere")
    if budget < 1:
        raise ValueError(f"budget must be >= 1, got {budget}")
    if evaluator is None:
        evaluator = make_scene_evaluator(scene, sphere, weights, **evaluator_kwargs)
    state = ExplorationState(sphere=sphere, budget=budget, evaluator=evaluator)
    state.evaluate_view(start_index, move="start")
    _accept(state, "start", start_index)
    hill_climb(state, start_index)
    while not state.budget_exhausted() and not state.all_visited():
        target = farthest_jump(state)
        if target is None:
            break
        state.evaluate_view(target, move="jump")
        _accept(state, "jump", target)
        hill_climb(state, target)
    return state


@dataclass(frozen=True)
class CanonicalView:
    index: int
    frame: object
    mask: object
    score: GovScore


@dataclass(frozen=True)
class CanonicalSet:
    views: tuple

    def indices(self):
        return [v.index for v in self.views]


def select_canonical(state: ExplorationState, k: int) -> CanonicalSet:
    """Top-k visited views by combined GOV (ties toward lower index)."""
    if not state.visited:
        raise ValueError("cannot select canonical views before any evaluation")
    ordered = sorted(state.visited, key=lambda r: (-r.score.combined, r.index))
    chosen = ordered[:k] if k < len(ordered) else ordered
    views = tuple(CanonicalView(index=r.index, frame=r.frame, mask=r.mask, score=r.score)
                  for r in chosen)
    return CanonicalSet(views=views)


TRAJECTORY_FIELDS = ("step", "view_index", "move", "silhouette", "depth_entropy",
                     "curvature_entropy", "color_entropy", "combined")


def trajectory_rows(state: ExplorationState) -> list:
    """One CSV-ready dict per evaluation, in visit order."""
    rows = []
    for step, rec in enumerate(state.visited):
        s = rec.score
        rows.append({
            "step": step,
            "view_index": rec.index,
            "move": rec.move,
            "silhouette": s.silhouette,
            "depth_entropy": s.depth_entropy,
            "curvature_entropy": s.curvature_entropy,
            "color_entropy": s.color_entropy,
            "combined": s.combined,
        })
    return rows
