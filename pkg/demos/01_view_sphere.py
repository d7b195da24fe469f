"""Walk through the viewpoint hemisphere: counts, adjacency, camera poses.

Prints the lattice statistics and, if matplotlib is around, saves a 3D
scatter of the candidate viewpoints to demos/out/view_sphere.png.
"""

from pathlib import Path

import numpy as np

from deskteach.viewsphere import build_view_sphere, camera_pose_for, geodesic_distance

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

# the rig: frequency-4 geodesic hemisphere, 350 mm radius, slight under-horizon margin
sphere = build_view_sphere(frequency=4, radius=350.0, cutoff=-0.10)
print(f"viewpoints: {sphere.viewpoint_count}")
print(f"top view direction: {sphere.viewpoints[0]}")

valences = [len(a) for a in sphere.adjacency]
print(f"valence range: {min(valences)}..{max(valences)}")

edges = [(i, j) for i, adj in enumerate(sphere.adjacency) for j in adj if j > i]
lengths = [geodesic_distance(sphere.viewpoints[i], sphere.viewpoints[j]) for i, j in edges]
print(f"edge length: min {np.degrees(min(lengths)):.1f} deg, "
      f"max {np.degrees(max(lengths)):.1f} deg over {len(edges)} edges")

pose = camera_pose_for(sphere, 0, target=(0.0, 0.0, 20.0))
print(f"top camera sits at {pose.position}, optical axis {pose.optical_axis}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    fig = plt.figure(figsize=(6, 6))
    ax = fig.add_subplot(111, projection="3d")
    pts = sphere.viewpoints
    ax.scatter(pts[:, 0], pts[:, 1], pts[:, 2], s=14, c=pts[:, 2], cmap="viridis")
    for i, j in edges:
        ax.plot(*zip(pts[i], pts[j]), color="gray", linewidth=0.4)
    ax.set_box_aspect((1, 1, 0.6))
    ax.set_title(f"{sphere.viewpoint_count} candidate viewpoints")
    fig.savefig(OUT / "view_sphere.png", dpi=120)
    print(f"wrote {OUT / 'view_sphere.png'}")
except ImportError:
    print("matplotlib not installed; skipping the plot")
