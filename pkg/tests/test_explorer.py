import numpy as np
import pytest

from deskteach.explorer import (
    AlreadyVisited,
    BudgetExhausted,
    ExplorationState,
    evaluate_view,
    explore,
    farthest_jump,
    hill_climb,
    make_scene_evaluator,
    select_canonical,
    trajectory_rows,
)
from deskteach.gov import GovScore, evaluate_gov
from deskteach.meshes import make_gear_like
from deskteach.renderer import SceneSpec, default_table, place_on_table, render, scene_center
from deskteach.segmenter import segment_frame
from deskteach.viewsphere import (
    build_view_sphere,
    camera_pose_for,
    geodesic_distance,
    neighbors,
)


def gov_only(x):
    return GovScore(0.0, 0.0, 0.0, 0.0, float(x))


def field_evaluator(field, default=0.0):
    def evaluator(index):
        return gov_only(field.get(index, default)), None, None
    return evaluator


@pytest.fixture(scope="module")
def sphere():
    return build_view_sphere(2, 350.0, -0.10)


@pytest.fixture(scope="module")
def full_sphere():
    return build_view_sphere(2, 350.0, -1.0)


def fresh_state(sphere, budget, field=None, default=0.0):
    return ExplorationState(sphere=sphere, budget=budget,
                            evaluator=field_evaluator(field or {}, default))


def test_revisit_is_an_error(sphere):
    state = fresh_state(sphere, budget=5)
    evaluate_view(state, 3)
    with pytest.raises(AlreadyVisited):
        evaluate_view(state, 3)


def test_budget_one_exhausts_after_single_visit(sphere):
    state = fresh_state(sphere, budget=1)
    evaluate_view(state, 0)
    assert state.budget_exhausted()
    with pytest.raises(BudgetExhausted):
        evaluate_view(state, 1)


def test_evaluate_view_composes_render_and_gov(sphere):
    scene = SceneSpec(objects=(place_on_table("gear", make_gear_like(seed=1)),),
                      table=default_table())
    state = ExplorationState(sphere=sphere, budget=3,
                             evaluator=make_scene_evaluator(scene, sphere))
    got = state.evaluate_view(4)
    frame = render(scene, camera_pose_for(sphere, 4, target=scene_center(scene)))
    _, masks = segment_frame(frame)
    expected = evaluate_gov(frame, masks[0] if masks else None)
    assert got == expected


def test_hill_climb_requires_evaluated_start(sphere):
    state = fresh_state(sphere, budget=5)
    with pytest.raises(ValueError):
        hill_climb(state, 0)


def test_hill_climb_stays_when_neighbors_lower(sphere):
    field = {0: 0.9}
    state = fresh_state(sphere, budget=30, field=field, default=0.1)
    state.evaluate_view(0, move="start")
    assert hill_climb(state, 0) == 0


def test_hill_climb_follows_monotone_chain(sphere):
    # build an adjacency chain 0 -> a -> b -> c with strictly rising scores
    chain = [0]
    while len(chain) < 4:
        for n in neighbors(sphere, chain[-1]):
            if n not in chain:
                chain.append(n)
                break
    field = {v: 0.5 + 0.1 * i for i, v in enumerate(chain)}
    state = fresh_state(sphere, budget=60, field=field, default=0.01)
    state.evaluate_view(0, move="start")
    assert hill_climb(state, 0) == chain[-1]
    # oracle: the chain end is the argmax of the injected field
    assert chain[-1] == max(field, key=field.get)


def test_hill_climb_tie_moves_to_lower_index(sphere):
    ns = sorted(neighbors(sphere, 0))
    field = {0: 0.5, ns[0]: 0.8, ns[1]: 0.8}
    state = fresh_state(sphere, budget=60, field=field, default=0.1)
    state.evaluate_view(0, move="start")
    hill_climb(state, 0)
    first_climb = [idx for move, idx in state.trail if move == "climb"][0]
    assert first_climb == ns[0]


def test_farthest_jump_none_when_all_visited(sphere):
    state = fresh_state(sphere, budget=sphere.viewpoint_count + 5)
    for i in range(sphere.viewpoint_count):
        state.evaluate_view(i, move="start")
    state.current = 0
    assert farthest_jump(state) is None


def test_farthest_jump_reaches_antipode(full_sphere):
    state = fresh_state(full_sphere, budget=10)
    state.evaluate_view(0, move="start")
    state.current = 0
    target = farthest_jump(state)
    bottom = int(np.argmin(full_sphere.viewpoints[:, 2]))
    assert target == bottom
    d = geodesic_distance(full_sphere.viewpoints[0], full_sphere.viewpoints[target])
    assert d == pytest.approx(np.pi, abs=1e-9)


def test_farthest_jump_matches_bruteforce_scan(sphere):
    state = fresh_state(sphere, budget=10)
    state.evaluate_view(0, move="start")
    state.current = 0
    target = farthest_jump(state)
    # oracle: exhaustive distance scan over unvisited viewpoints
    best, best_d = None, -1.0
    for i in range(sphere.viewpoint_count):
        if state.is_visited(i):
            continue
        d = geodesic_distance(sphere.viewpoints[0], sphere.viewpoints[i])
        if d > best_d + 1e-15:
            best, best_d = i, d
    assert target == best


def test_explore_budget_one_visits_only_start(sphere):
    state = explore(None, sphere, budget=1, evaluator=field_evaluator({}, 0.3))
    assert [r.index for r in state.visited] == [0]


def test_explore_unlimited_budget_visits_every_view_once(sphere):
    n = sphere.viewpoint_count
    state = explore(None, sphere, budget=n + 10, evaluator=field_evaluator({}, 0.3))
    indices = [r.index for r in state.visited]
    assert sorted(indices) == list(range(n))
    assert len(set(indices)) == n


def test_explore_respects_budget(sphere):
    for budget in (1, 3, 7, 12):
        state = explore(None, sphere, budget=budget, evaluator=field_evaluator({}, 0.2))
        assert len(state.visited) == min(budget, sphere.viewpoint_count)


def test_explore_two_peak_field_covers_both_basins(sphere):
    # peak A near the start, peak B on the far side of the hemisphere
    peak_a = 0
    far = int(np.argmax([geodesic_distance(sphere.viewpoints[0], v)
                         for v in sphere.viewpoints]))
    field = {peak_a: 0.9, far: 0.95}
    for n in neighbors(sphere, peak_a):
        field[n] = 0.5
    for n in neighbors(sphere, far):
        field[n] = 0.55
    state = explore(None, sphere, budget=sphere.viewpoint_count,
                    evaluator=field_evaluator(field, 0.05))
    visited = {r.index for r in state.visited}
    assert peak_a in visited and far in visited
    # within every climb segment the accepted combined GOV strictly increases
    segment = []
    for move, idx in state.trail:
        if move in ("start", "jump"):
            segment = [state.score_of(idx).combined]
        else:
            assert state.score_of(idx).combined > segment[-1]
            segment.append(state.score_of(idx).combined)


def test_explore_is_deterministic_on_real_scene(sphere):
    scene = SceneSpec(objects=(place_on_table("gear", make_gear_like(seed=3)),),
                      table=default_table())
    a = explore(scene, sphere, budget=8)
    b = explore(scene, sphere, budget=8)
    assert [(r.index, r.move, r.score) for r in a.visited] == \
           [(r.index, r.move, r.score) for r in b.visited]
    assert a.trail == b.trail


def test_explore_rejects_bad_budget(sphere):
    with pytest.raises(ValueError):
        explore(None, sphere, budget=0, evaluator=field_evaluator({}))


def test_select_canonical_top_one_is_argmax(sphere):
    field = {i: 0.01 * i for i in range(sphere.viewpoint_count)}
    state = explore(None, sphere, budget=10, evaluator=field_evaluator(field))
    top = select_canonical(state, 1)
    best = max(state.visited, key=lambda r: r.score.combined)
    assert top.indices() == [best.index]


def test_select_canonical_k_larger_than_visited(sphere):
    state = explore(None, sphere, budget=6, evaluator=field_evaluator({}, 0.4))
    got = select_canonical(state, len(state.visited) + 5)
    assert len(got.views) == len(state.visited)
    combined = [v.score.combined for v in got.views]
    assert combined == sorted(combined, reverse=True)


def test_select_canonical_tie_breaks_by_index(sphere):
    field = {0: 0.5, 3: 0.9, 7: 0.9}
    state = fresh_state(sphere, budget=10, field=field)
    for i in (0, 3, 7):
        state.evaluate_view(i, move="start")
    got = select_canonical(state, 2)
    assert got.indices() == [3, 7]


def test_select_canonical_requires_visits(sphere):
    state = fresh_state(sphere, budget=5)
    with pytest.raises(ValueError):
        select_canonical(state, 3)


def test_canonical_scores_dominate_unselected(sphere):
    rng = np.random.default_rng(4)
    field = {i: float(rng.random()) for i in range(sphere.viewpoint_count)}
    state = explore(None, sphere, budget=15, evaluator=field_evaluator(field))
    got = select_canonical(state, 5)
    worst_selected = min(v.score.combined for v in got.views)
    unselected = [r.score.combined for r in state.visited
                  if r.index not in got.indices()]
    assert all(worst_selected >= u for u in unselected)


def test_trajectory_rows_shape(sphere):
    state = explore(None, sphere, budget=5, evaluator=field_evaluator({}, 0.2))
    rows = trajectory_rows(state)
    assert len(rows) == 5
    assert rows[0]["step"] == 0
    assert rows[0]["move"] == "start"
    assert {"view_index", "combined", "silhouette"} <= set(rows[0])
