"""Render the sample gear, back-project, fit the table plane, cut the mask.

Dumps the color frame (PPM), the 16-bit depth map (PGM) and the object mask
(PBM) into demos/out/ so you can eyeball every stage.
"""

from pathlib import Path

import numpy as np

from deskteach.renderer import back_project, render, save_pbm, save_pgm16, save_ppm, scene_center
from deskteach.segmenter import fit_dominant_plane, segment_frame
from deskteach.store import load_scene
from deskteach.viewsphere import build_view_sphere, camera_pose_for

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

scene = load_scene(Path(__file__).parent.parent / "data" / "scenes" / "gear.scene")
sphere = build_view_sphere(4, 350.0, -0.10)

view = 17  # an oblique view; try others between 0 and 90
pose = camera_pose_for(sphere, view, target=scene_center(scene))
frame = render(scene, pose)
print(f"rendered view {view}: {int(frame.valid.sum())} valid depth pixels")

cloud = back_project(frame)
print(f"point cloud: {cloud.points.shape[0]} points")

plane = fit_dominant_plane(cloud, seed=0)
print(f"table plane: normal {np.round(plane.normal, 4)}, "
      f"{plane.inlier_count} inliers")

plane, masks = segment_frame(frame)
for m in masks:
    print(f"mask: {m.pixel_count} px, bbox {m.bbox}")

save_ppm(OUT / "gear_color.ppm", frame.color)
save_pgm16(OUT / "gear_depth.pgm", frame.depth)
if masks:
    save_pbm(OUT / "gear_mask.pbm", masks[0].mask)
print(f"wrote frames to {OUT}/")
