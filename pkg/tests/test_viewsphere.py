import numpy as np
import pytest

from deskteach.viewsphere import (
    build_view_sphere,
    camera_pose_for,
    geodesic_distance,
    look_at,
    neighbors,
)


def full_sphere(frequency):
    return build_view_sphere(frequency, radius=350.0, cutoff=-1.0)


def test_icosahedron_vertex_count():
    assert full_sphere(1).viewpoint_count == 12


def test_frequency_four_vertex_count():
    assert full_sphere(4).viewpoint_count == 162


@pytest.mark.parametrize("frequency", [2, 3, 5])
def test_geodesic_vertex_count_formula(frequency):
    assert full_sphere(frequency).viewpoint_count == 10 * frequency**2 + 2


def test_default_hemisphere_count_frozen():
    sphere = build_view_sphere(4, radius=350.0, cutoff=-0.10)
    assert sphere.viewpoint_count == 91


def test_all_viewpoints_unit_norm():
    sphere = build_view_sphere(4, 350.0, -0.10)
    norms = np.linalg.norm(sphere.viewpoints, axis=1)
    assert np.all(np.abs(norms - 1.0) < 1e-9)


def test_all_viewpoints_respect_cutoff():
    sphere = build_view_sphere(4, 350.0, -0.10)
    assert np.all(sphere.viewpoints[:, 2] >= -0.10)


def test_top_view_is_index_zero():
    sphere = build_view_sphere(4, 350.0, -0.10)
    assert np.allclose(sphere.viewpoints[0], [0.0, 0.0, 1.0], atol=1e-12)


def test_build_is_deterministic():
    a = build_view_sphere(4, 350.0, -0.10)
    b = build_view_sphere(4, 350.0, -0.10)
    assert a.viewpoints.tobytes() == b.viewpoints.tobytes()
    assert a.adjacency == b.adjacency


def test_invalid_arguments_rejected():
    with pytest.raises(ValueError):
        build_view_sphere(0, 350.0, -0.10)
    with pytest.raises(ValueError):
        build_view_sphere(4, 0.0, -0.10)
    with pytest.raises(ValueError):
        build_view_sphere(4, -350.0, -0.10)
    with pytest.raises(ValueError):
        build_view_sphere(4, 350.0, 1.5)


def test_adjacency_symmetric_no_self_and_valence_bounds():
    sphere = build_view_sphere(4, 350.0, -0.10)
    for i, neigh in enumerate(sphere.adjacency):
        assert i not in neigh
        assert 3 <= len(neigh) <= 6
        for j in neigh:
            assert i in sphere.adjacency[j]


def test_icosahedron_valence_is_five():
    sphere = full_sphere(1)
    for i in range(sphere.viewpoint_count):
        assert len(neighbors(sphere, i)) == 5


def test_subdivided_interior_valence_is_six():
    sphere = full_sphere(4)
    valences = sorted(len(a) for a in sphere.adjacency)
    # 12 pentagonal vertices from the base solid, hexagonal elsewhere
    assert valences[:12] == [5] * 12
    assert set(valences[12:]) == {6}


def test_hemisphere_boundary_vertex_loses_neighbors():
    full = full_sphere(4)
    cut = build_view_sphere(4, 350.0, -0.10)
    # match cut viewpoints back to full-sphere rows to compare valence
    full_valence = {}
    for i in range(full.viewpoint_count):
        key = tuple(np.round(full.viewpoints[i], 9))
        full_valence[key] = len(full.adjacency[i])
    boundary = [
        i for i in range(cut.viewpoint_count)
        if len(cut.adjacency[i]) < full_valence[tuple(np.round(cut.viewpoints[i], 9))]
    ]
    assert boundary, "expected at least one boundary vertex with reduced valence"
    # every reduced vertex sits near the cutoff ring
    assert all(cut.viewpoints[i, 2] < 0.1 for i in boundary)


def test_edges_shorter_than_twice_minimum():
    sphere = build_view_sphere(4, 350.0, -0.10)
    lengths = []
    for i, neigh in enumerate(sphere.adjacency):
        for j in neigh:
            if j > i:
                lengths.append(geodesic_distance(sphere.viewpoints[i], sphere.viewpoints[j]))
    lengths = np.array(lengths)
    assert lengths.max() < 2.0 * lengths.min()


def test_geodesic_trivial_values():
    a = np.array([0.0, 0.0, 1.0])
    assert geodesic_distance(a, a) == 0.0
    assert geodesic_distance(a, -a) == pytest.approx(np.pi, abs=1e-12)
    b = np.array([1.0, 0.0, 0.0])
    assert geodesic_distance(a, b) == pytest.approx(np.pi / 2, abs=1e-12)


def test_geodesic_rejects_non_unit():
    with pytest.raises(ValueError):
        geodesic_distance(np.array([0.0, 0.0, 2.0]), np.array([0.0, 0.0, 1.0]))


def test_geodesic_symmetry_and_triangle_inequality():
    rng = np.random.default_rng(7)
    for _ in range(300):
        u, v, w = rng.normal(size=(3, 3))
        u /= np.linalg.norm(u)
        v /= np.linalg.norm(v)
        w /= np.linalg.norm(w)
        duv = geodesic_distance(u, v)
        dvu = geodesic_distance(v, u)
        assert duv == pytest.approx(dvu, abs=1e-12)
        assert 0.0 <= duv <= np.pi
        assert duv <= geodesic_distance(u, w) + geodesic_distance(w, v) + 1e-9


def test_neighbors_index_out_of_range():
    sphere = full_sphere(1)
    with pytest.raises(IndexError):
        neighbors(sphere, 12)
    with pytest.raises(IndexError):
        neighbors(sphere, -1)


def test_top_view_camera_pose():
    sphere = build_view_sphere(4, 350.0, -0.10)
    pose = camera_pose_for(sphere, 0, target=(0.0, 0.0, 0.0))
    assert np.allclose(pose.position, [0.0, 0.0, 350.0])
    assert np.allclose(pose.optical_axis, [0.0, 0.0, -1.0])


def test_equatorial_camera_pose():
    pose = look_at(position=(350.0, 0.0, 0.0), target=(0.0, 0.0, 0.0))
    assert np.allclose(pose.optical_axis, [-1.0, 0.0, 0.0])


def test_pose_aims_at_target_for_every_viewpoint():
    sphere = build_view_sphere(2, 350.0, -0.10)
    target = np.array([5.0, -3.0, 2.0])
    for i in range(sphere.viewpoint_count):
        pose = camera_pose_for(sphere, i, target=target)
        expected = target - pose.position
        expected /= np.linalg.norm(expected)
        assert np.allclose(pose.optical_axis, expected, atol=1e-12)
        assert np.allclose(pose.optical_axis, -sphere.viewpoints[i], atol=1e-12)


def test_pose_rotation_orthonormal_det_plus_one():
    sphere = build_view_sphere(2, 350.0, -0.10)
    for i in range(sphere.viewpoint_count):
        rot = camera_pose_for(sphere, i).rotation
        assert np.allclose(rot @ rot.T, np.eye(3), atol=1e-12)
        assert np.linalg.det(rot) == pytest.approx(1.0, abs=1e-12)


def test_degenerate_up_hint_falls_back():
    pose = look_at(position=(0.0, 350.0, 0.0), target=(0.0, 0.0, 0.0))
    # optical axis is -y, parallel to the default up hint
    assert np.allclose(pose.optical_axis, [0.0, -1.0, 0.0])
    assert np.allclose(pose.up_hint, [1.0, 0.0, 0.0])
    assert np.linalg.det(pose.rotation) == pytest.approx(1.0, abs=1e-12)
