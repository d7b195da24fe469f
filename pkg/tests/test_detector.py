import numpy as np
import pytest

from deskteach.augmenter import TrainingSample
from deskteach.detector import (
    FEATURE_DIM,
    HIST_SLICE,
    HU_SLICE,
    Registry,
    UNKNOWN_LABEL,
    detect,
    extend_object,
    extract_features,
    feature_distance,
    query,
    register_object,
    score_from_distance,
)
from deskteach.explorer import explore, select_canonical
from deskteach.meshes import make_box, make_gear_like
from deskteach.renderer import SceneSpec, default_table, place_on_table, render
from deskteach.segmenter import ObjectMask, fit_dominant_plane, segment_frame
from deskteach.renderer import back_project
from deskteach.viewsphere import build_view_sphere, camera_pose_for

H, W = 120, 160


def blob_sample(color=(220, 30, 30), label="thing", size=20, origin=(40, 60)):
    image = np.full((H, W, 3), 70, dtype=np.uint8)
    bits = np.zeros((H, W), dtype=bool)
    r0, c0 = origin
    bits[r0:r0 + size, c0:c0 + size] = True
    image[bits] = color
    mask = ObjectMask(mask=bits, bbox=(c0, r0, c0 + size - 1, r0 + size - 1),
                      pixel_count=size * size, component=1)
    return TrainingSample(image=image, mask=mask, label=label, provenance=(0, "t"))


def test_feature_dimension_fixed():
    s = blob_sample()
    f = extract_features(s.image, s.mask)
    assert f.shape == (FEATURE_DIM,)


def test_red_object_concentrates_one_hue_bin():
    s = blob_sample(color=(220, 30, 30))
    f = extract_features(s.image, s.mask)
    hist = f[HIST_SLICE]
    assert hist.sum() == pytest.approx(1.0)
    assert hist.max() == pytest.approx(1.0)


def test_hu_block_scale_invariant_under_lattice_upscale():
    yy, xx = np.mgrid[0:40, 0:40]
    small = (yy - 20.0) ** 2 + (xx - 20.0) ** 2 <= 15.0**2
    big = np.kron(small, np.ones((2, 2), dtype=bool))
    img_small = np.full((40, 40, 3), 128, dtype=np.uint8)
    img_big = np.full((80, 80, 3), 128, dtype=np.uint8)
    f_small = extract_features(img_small, small)
    f_big = extract_features(img_big, big)
    assert np.abs(f_small[HU_SLICE] - f_big[HU_SLICE]).max() < 1e-3


def test_features_deterministic():
    s = blob_sample()
    a = extract_features(s.image, s.mask)
    b = extract_features(s.image, s.mask)
    assert a.tobytes() == b.tobytes()


def test_empty_mask_rejected():
    with pytest.raises(ValueError):
        extract_features(np.zeros((H, W, 3), dtype=np.uint8), np.zeros((H, W), dtype=bool))


def test_register_appends_without_touching_existing_models():
    reg = Registry()
    register_object(reg, "a", [blob_sample(label="a")])
    before = reg.models["a"].exemplars.tobytes()
    ordinal_before = reg.models["a"].ordinal
    register_object(reg, "b", [blob_sample(color=(30, 220, 30), label="b")])
    assert reg.models["a"].exemplars.tobytes() == before
    assert reg.models["a"].ordinal == ordinal_before
    assert reg.models["b"].ordinal > reg.models["a"].ordinal


def test_register_sample_count_matches_exemplars():
    reg = Registry()
    samples = [blob_sample(label="a") for _ in range(12)]
    register_object(reg, "a", samples)
    assert reg.models["a"].exemplar_count == 12


def test_duplicate_registration_rejected():
    reg = Registry()
    register_object(reg, "a", [blob_sample(label="a")])
    with pytest.raises(ValueError):
        register_object(reg, "a", [blob_sample(label="a")])


def test_empty_sample_list_rejected():
    with pytest.raises(ValueError):
        register_object(Registry(), "a", [])


def test_extend_appends_exemplars():
    reg = Registry()
    register_object(reg, "a", [blob_sample(label="a")])
    extend_object(reg, "a", [blob_sample(label="a"), blob_sample(label="a")])
    assert reg.models["a"].exemplar_count == 3
    with pytest.raises(KeyError):
        extend_object(reg, "nope", [blob_sample(label="x")])


def test_score_strictly_decreasing_in_distance():
    ds = [0.0, 0.1, 0.5, 1.0, 3.0]
    scores = [score_from_distance(d) for d in ds]
    assert scores == sorted(scores, reverse=True)
    assert scores[0] == 1.0
    assert all(0.0 < s <= 1.0 for s in scores)


@pytest.fixture(scope="module")
def sphere():
    return build_view_sphere(2, 350.0, -0.10)


def scene_frame_plane(mesh, name, view=0, sphere_=None):
    sphere_ = sphere_ or build_view_sphere(2, 350.0, -0.10)
    scene = SceneSpec(objects=(place_on_table(name, mesh),), table=default_table())
    frame = render(scene, camera_pose_for(sphere_, view))
    plane = fit_dominant_plane(back_project(frame), seed=0)
    return scene, frame, plane


def test_detect_with_empty_registry_labels_unknown(sphere):
    _, frame, plane = scene_frame_plane(make_box(40, 40, 40, seed=1), "cube", sphere_=sphere)
    out = detect(Registry(), frame, plane)
    assert len(out) == 1
    assert out[0].label == UNKNOWN_LABEL
    assert out[0].score == 1.0


def test_closed_loop_registration_and_detection(sphere):
    gear = make_gear_like(seed=7, palette=[(230, 60, 40), (240, 170, 40)])
    scene = SceneSpec(objects=(place_on_table("gear", gear),), table=default_table())
    state = explore(scene, sphere, budget=8)
    canonical = select_canonical(state, 4)
    samples = [TrainingSample(image=v.frame.color.copy(), mask=v.mask, label="gear",
                              provenance=(v.index, "canonical"))
               for v in canonical.views if v.mask is not None]
    reg = Registry()
    register_object(reg, "gear", samples)

    frame = render(scene, camera_pose_for(sphere, 0))
    plane = fit_dominant_plane(back_project(frame), seed=0)
    out = detect(reg, frame, plane)
    assert len(out) == 1
    assert out[0].label == "gear"
    # bounding box agrees with the renderer's ground-truth pixels
    truth = frame.hits == 1
    vv, uu = np.nonzero(truth)
    u0, v0, u1, v1 = out[0].bbox
    assert abs(u0 - uu.min()) <= 2 and abs(u1 - uu.max()) <= 2
    assert abs(v0 - vv.min()) <= 2 and abs(v1 - vv.max()) <= 2


def test_unseen_object_with_disjoint_hue_is_unknown(sphere):
    gear = make_gear_like(seed=7, palette=[(230, 60, 40), (240, 170, 40)])   # reds
    cube = make_box(40, 40, 40, palette=[(40, 90, 230), (70, 200, 230)])     # blues
    gear_scene = SceneSpec(objects=(place_on_table("gear", gear),), table=default_table())
    state = explore(gear_scene, sphere, budget=6)
    canonical = select_canonical(state, 3)
    samples = [TrainingSample(image=v.frame.color.copy(), mask=v.mask, label="gear",
                              provenance=(v.index, "canonical"))
               for v in canonical.views if v.mask is not None]
    reg = Registry()
    register_object(reg, "gear", samples)

    cube_scene = SceneSpec(objects=(place_on_table("cube", cube),), table=default_table())
    frame = render(cube_scene, camera_pose_for(sphere, 0))
    plane = fit_dominant_plane(back_project(frame), seed=0)
    out = detect(reg, frame, plane)
    assert len(out) == 1
    assert out[0].label == UNKNOWN_LABEL


def test_query_finds_and_misses(sphere):
    cube = make_box(40, 40, 40, palette=[(40, 200, 80), (40, 160, 220)])
    cube_scene = SceneSpec(objects=(place_on_table("cube", cube),), table=default_table())
    frame = render(cube_scene, camera_pose_for(sphere, 0))
    _, masks = segment_frame(frame)
    reg = Registry()
    register_object(reg, "cube", [TrainingSample(image=frame.color.copy(), mask=masks[0],
                                                 label="cube", provenance=(0, "c"))])
    plane = fit_dominant_plane(back_project(frame), seed=0)
    found = query(reg, frame, plane, "cube")
    assert found is not None and found.label == "cube"

    empty = render(SceneSpec(objects=(), table=default_table()),
                   camera_pose_for(sphere, 0))
    empty_plane = fit_dominant_plane(back_project(empty), seed=0)
    assert query(reg, empty, empty_plane, "cube") is None

    with pytest.raises(KeyError):
        query(reg, frame, plane, "widget")


def test_classification_invariant_to_exemplar_order(sphere):
    gear = make_gear_like(seed=3)
    scene = SceneSpec(objects=(place_on_table("gear", gear),), table=default_table())
    state = explore(scene, sphere, budget=6)
    canonical = select_canonical(state, 5)
    samples = [TrainingSample(image=v.frame.color.copy(), mask=v.mask, label="gear",
                              provenance=(v.index, "c"))
               for v in canonical.views if v.mask is not None]
    reg = Registry()
    register_object(reg, "gear", samples)

    frame = render(scene, camera_pose_for(sphere, 2))
    plane = fit_dominant_plane(back_project(frame), seed=0)
    baseline = [d.label for d in detect(reg, frame, plane)]

    shuffled = Registry()
    register_object(shuffled, "gear", samples[::-1])
    assert [d.label for d in detect(shuffled, frame, plane)] == baseline


def test_behavioral_no_forgetting_on_hue_disjoint_objects(sphere):
    red = make_gear_like(seed=1, palette=[(230, 50, 40), (240, 140, 40)])
    blue = make_box(45, 30, 35, palette=[(40, 80, 230), (60, 200, 230)])
    red_scene = SceneSpec(objects=(place_on_table("red-gear", red),), table=default_table())
    blue_scene = SceneSpec(objects=(place_on_table("blue-box", blue),), table=default_table())

    def samples_for(scene, label):
        state = explore(scene, sphere, budget=6)
        canonical = select_canonical(state, 3)
        return [TrainingSample(image=v.frame.color.copy(), mask=v.mask, label=label,
                               provenance=(v.index, "c"))
                for v in canonical.views if v.mask is not None]

    reg = Registry()
    register_object(reg, "red-gear", samples_for(red_scene, "red-gear"))

    test_frames = []
    for view in (0, 3, 6):
        frame = render(red_scene, camera_pose_for(sphere, view))
        plane = fit_dominant_plane(back_project(frame), seed=0)
        test_frames.append((frame, plane))
    before = [[(d.label, d.bbox, d.score) for d in detect(reg, f, p)]
              for f, p in test_frames]

    register_object(reg, "blue-box", samples_for(blue_scene, "blue-box"))
    after = [[(d.label, d.bbox, d.score) for d in detect(reg, f, p)]
             for f, p in test_frames]
    assert before == after


def test_feature_distance_symmetric():
    a = extract_features(*(lambda s: (s.image, s.mask))(blob_sample()))
    b = extract_features(*(lambda s: (s.image, s.mask))(blob_sample(color=(30, 220, 40))))
    assert feature_distance(a, b) == pytest.approx(feature_distance(b, a))
    assert feature_distance(a, a) == 0.0
