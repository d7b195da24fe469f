"""Score every viewpoint of the sample gear and chart the GOV landscape.

Writes the per-view scores as CSV and, with matplotlib, an azimuthal map of
combined GOV over the hemisphere (the same projection the browser console
uses).
"""

from pathlib import Path

import numpy as np

from deskteach.explorer import make_scene_evaluator
from deskteach.store import load_scene, write_csv
from deskteach.viewsphere import build_view_sphere

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

scene = load_scene(Path(__file__).parent.parent / "data" / "scenes" / "gear.scene")
sphere = build_view_sphere(4, 350.0, -0.10)
evaluator = make_scene_evaluator(scene, sphere)

rows = []
for i in range(sphere.viewpoint_count):
    score, _, mask = evaluator(i)
    rows.append({
        "view": i,
        "z": round(float(sphere.viewpoints[i][2]), 4),
        "silhouette": score.silhouette,
        "depth_entropy": score.depth_entropy,
        "curvature_entropy": score.curvature_entropy,
        "color_entropy": score.color_entropy,
        "combined": score.combined,
        "mask_px": mask.pixel_count if mask is not None else 0,
    })
write_csv(OUT / "gov_per_view.csv", list(rows[0]), rows)
best = max(rows, key=lambda r: r["combined"])
print(f"best view: {best['view']} (z={best['z']}) combined={best['combined']:.3f}")
print(f"wrote {OUT / 'gov_per_view.csv'}")

try:
    import matplotlib

    matplotlib.use("Agg")
    import matplotlib.pyplot as plt

    pts = sphere.viewpoints
    # azimuthal projection: radius grows as elevation falls
    r = np.arccos(np.clip(pts[:, 2], -1, 1))
    theta = np.arctan2(pts[:, 1], pts[:, 0])
    x, y = r * np.cos(theta), r * np.sin(theta)
    combined = [row["combined"] for row in rows]
    fig, ax = plt.subplots(figsize=(6, 6))
    sc = ax.scatter(x, y, c=combined, s=60, cmap="plasma")
    fig.colorbar(sc, label="combined GOV")
    ax.set_aspect("equal")
    ax.set_title("goodness of view over the hemisphere (top view at center)")
    fig.savefig(OUT / "gov_map.png", dpi=120)
    print(f"wrote {OUT / 'gov_map.png'}")
except ImportError:
    print("matplotlib not installed; skipping the map")
