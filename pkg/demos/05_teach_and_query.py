"""The full teaching loop, scripted: register the gear, then ask for it.

Equivalent to `deskteach teach --scene data/scenes/gear.scene --script ...`
but driven from Python so the intermediate state is visible. Afterwards the
registry is saved, reloaded and queried again to show the round trip.
"""

from pathlib import Path

from deskteach.session import Session
from deskteach.store import Config, load_registry, load_scene, save_registry

ROOT = Path(__file__).parent.parent
OUT = Path(__file__).parent / "out"
OUT.mkdir(exist_ok=True)

scene = load_scene(ROOT / "data" / "scenes" / "gear.scene")
session = Session(scene, Config())

for utterance in ("Start object registration.",
                  "This is the gear.",
                  "Where is the gear?",
                  "list"):
    response = session.submit(utterance)
    print(f"teacher> {utterance}")
    print(f"robot  > {response.text}")
    if response.payload and "bbox" in response.payload:
        print(f"         box={response.payload['bbox']} "
              f"score={response.payload['score']:.3f} "
              f"pointing={response.payload['pointing']}")

registry_path = OUT / "taught.registry"
save_registry(session.registry, registry_path)
reloaded = load_registry(registry_path)
print(f"registry round trip: {reloaded.names()} "
      f"({reloaded.models['gear'].exemplar_count} exemplars)")

# ask about something on a scene that also contains an unknown object
multi = load_scene(ROOT / "data" / "scenes" / "gear_and_box.scene")
session.scene = multi
print("teacher> Where is the gear?   (gear + an untaught box on the table)")
print(f"robot  > {session.submit('Where is the gear?').text}")
