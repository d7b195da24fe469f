import numpy as np
import pytest

from deskteach.meshes import make_box, make_gear_like
from deskteach.renderer import (
    PointCloud,
    SceneSpec,
    back_project,
    default_table,
    place_on_table,
    render,
)
from deskteach.segmenter import (
    NoDominantPlane,
    extract_object_masks,
    fit_dominant_plane,
    primary_mask,
    segment_frame,
)
from deskteach.viewsphere import build_view_sphere, camera_pose_for, look_at


def cloud_of(points):
    points = np.asarray(points, dtype=np.float64)
    return PointCloud(points=points,
                      colors=np.zeros((points.shape[0], 3), dtype=np.uint8),
                      pixels=np.zeros((points.shape[0], 2), dtype=np.int64))


def test_coplanar_cloud_fits_exactly():
    xs, ys = np.meshgrid(np.linspace(-50, 50, 30), np.linspace(-50, 50, 30))
    pts = np.column_stack([xs.ravel(), ys.ravel(), np.full(xs.size, 200.0)])
    plane = fit_dominant_plane(cloud_of(pts), seed=1)
    assert plane.inlier_count == pts.shape[0]
    assert np.max(np.abs(plane.signed_height(pts))) < 1e-9


def test_noisy_plane_normal_within_one_degree():
    rng = np.random.default_rng(42)
    true_normal = np.array([0.1, -0.2, 0.97])
    true_normal /= np.linalg.norm(true_normal)
    base = rng.uniform(-80, 80, size=(900, 2))
    on_plane = np.column_stack([base, np.zeros(900)])
    # rotate the patch so its normal is true_normal, then push away from origin
    axis = np.cross([0, 0, 1], true_normal)
    axis /= np.linalg.norm(axis)
    ang = np.arccos(true_normal[2])
    k = axis
    km = np.array([[0, -k[2], k[1]], [k[2], 0, -k[0]], [-k[1], k[0], 0]])
    rot = np.eye(3) + np.sin(ang) * km + (1 - np.cos(ang)) * (km @ km)
    pts = on_plane @ rot.T + true_normal * 250.0
    outliers = rng.uniform(-80, 80, size=(100, 3)) + np.array([0, 0, 120.0])
    plane = fit_dominant_plane(cloud_of(np.vstack([pts, outliers])), seed=3)
    angle = np.degrees(np.arccos(min(1.0, abs(float(plane.normal @ true_normal)))))
    assert angle < 1.0


def test_two_points_is_an_error():
    with pytest.raises(ValueError):
        fit_dominant_plane(cloud_of([[0, 0, 0], [1, 1, 1]]))


def test_uniform_cloud_has_no_dominant_plane():
    rng = np.random.default_rng(0)
    pts = rng.uniform(-100, 100, size=(3000, 3))
    with pytest.raises(NoDominantPlane):
        fit_dominant_plane(cloud_of(pts), seed=5)


def test_ransac_deterministic_under_seed():
    rng = np.random.default_rng(11)
    pts = np.column_stack([rng.uniform(-60, 60, (500, 2)), np.full(500, 300.0)])
    pts = np.vstack([pts, rng.uniform(-60, 60, (50, 3))])
    a = fit_dominant_plane(cloud_of(pts), seed=7)
    b = fit_dominant_plane(cloud_of(pts), seed=7)
    assert a.normal.tobytes() == b.normal.tobytes()
    assert a.offset == b.offset
    assert a.inlier_count == b.inlier_count


def top_down_frame(scene):
    return render(scene, look_at((0.0, 0.0, 350.0), (0.0, 0.0, 0.0)))


def test_plane_only_frame_yields_no_masks():
    frame = top_down_frame(SceneSpec(objects=(), table=default_table()))
    plane, masks = segment_frame(frame)
    assert masks == []
    with pytest.raises(ValueError):
        primary_mask(masks)


def test_single_cube_mask_matches_hit_oracle():
    cube = place_on_table("cube", make_box(40, 40, 40, seed=1), xy=(15.0, -10.0))
    scene = SceneSpec(objects=(cube,), table=default_table())
    frame = top_down_frame(scene)
    plane, masks = segment_frame(frame)
    assert len(masks) == 1
    truth = frame.hits == 1
    inter = (masks[0].mask & truth).sum()
    union = (masks[0].mask | truth).sum()
    assert inter / union >= 0.95


def test_two_separated_cubes_give_two_disjoint_masks():
    a = place_on_table("a", make_box(30, 30, 30, seed=1), xy=(-60.0, 0.0))
    b = place_on_table("b", make_box(30, 30, 30, seed=2), xy=(60.0, 0.0))
    scene = SceneSpec(objects=(a, b), table=default_table())
    frame = top_down_frame(scene)
    _, masks = segment_frame(frame)
    assert len(masks) == 2
    u0a, v0a, u1a, v1a = masks[0].bbox
    u0b, v0b, u1b, v1b = masks[1].bbox
    assert u1a < u0b or u1b < u0a or v1a < v0b or v1b < v0a
    assert not (masks[0].mask & masks[1].mask).any()


def test_mask_pixels_all_above_min_height():
    gear = place_on_table("gear", make_gear_like(seed=4))
    scene = SceneSpec(objects=(gear,), table=default_table())
    sphere = build_view_sphere(2, 350.0, -0.10)
    frame = render(scene, camera_pose_for(sphere, 7))
    cloud = back_project(frame)
    plane = fit_dominant_plane(cloud, seed=0)
    min_height = 5.0
    masks = extract_object_masks(frame, plane, min_height=min_height)
    from deskteach.renderer import camera_points_grid

    grid = camera_points_grid(frame)
    for m in masks:
        heights = plane.signed_height(grid[m.mask])
        assert np.all(heights >= min_height)


def test_masks_disjoint_and_exclude_plane_inliers():
    a = place_on_table("a", make_box(30, 30, 30, seed=1), xy=(-55.0, 20.0))
    b = place_on_table("b", make_gear_like(seed=2), xy=(55.0, -20.0))
    scene = SceneSpec(objects=(a, b), table=default_table())
    frame = top_down_frame(scene)
    plane, masks = segment_frame(frame)
    combined = np.zeros_like(frame.valid)
    for m in masks:
        assert not (combined & m.mask).any()
        combined |= m.mask
    table_pixels = frame.hits == 0
    assert not (combined & table_pixels).any()


def test_mask_bbox_tight_and_count_consistent():
    cube = place_on_table("cube", make_box(40, 40, 40, seed=1))
    frame = top_down_frame(SceneSpec(objects=(cube,), table=default_table()))
    _, masks = segment_frame(frame)
    m = masks[0]
    vv, uu = np.nonzero(m.mask)
    assert m.bbox == (uu.min(), vv.min(), uu.max(), vv.max())
    assert m.pixel_count == m.mask.sum()


def test_primary_mask_selection_rules():
    big = np.zeros((10, 10), dtype=bool)
    big[:5] = True
    small = np.zeros((10, 10), dtype=bool)
    small[9, :4] = True
    from deskteach.segmenter import ObjectMask

    m1 = ObjectMask(mask=big, bbox=(0, 0, 9, 4), pixel_count=50, component=1)
    m2 = ObjectMask(mask=small, bbox=(0, 9, 3, 9), pixel_count=4, component=2)
    assert primary_mask([m1, m2]) is m1
    assert primary_mask([m2]) is m2
    # equal sizes: lower component wins (list arrives pre-sorted by contract)
    m3 = ObjectMask(mask=small, bbox=(0, 9, 3, 9), pixel_count=4, component=1)
    assert primary_mask([m3, m2]) is m3
