"""Run one viewpoint exploration and dump the trajectory.

Shows the climb/jump alternation on the sample gear and which views ended
up canonical. The trajectory CSV matches what the bench module consumes.
"""

from pathlib import Path

from deskteach.explorer import explore, select_canonical, trajectory_rows, TRAJECTORY_FIELDS
from deskteach.store import load_scene, write_csv
from deskteach.viewsphere import build_view_sphere

OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

scene = load_scene(Path(__file__).parent.parent / "data" / "scenes" / "gear.scene")
sphere = build_view_sphere(4, 350.0, -0.10)

state = explore(scene, sphere, budget=12)
print("trajectory (step, view, move, combined GOV):")
for row in trajectory_rows(state):
    print(f"  {row['step']:2d}  view {row['view_index']:3d}  {row['move']:<5}  "
          f"{row['combined']:.3f}")

canonical = select_canonical(state, 5)
print("canonical views:", canonical.indices())

write_csv(OUT / "trajectory.csv", TRAJECTORY_FIELDS, trajectory_rows(state))
print(f"wrote {OUT / 'trajectory.csv'}")
