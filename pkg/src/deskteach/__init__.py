"""Desk-scale active view selection and incremental object teaching.

A software re-creation of a tabletop teaching rig: a simulated eye-in-hand
RGB-D camera on a geodesic viewpoint hemisphere, goodness-of-view scoring,
online viewpoint exploration, and an append-only exemplar detector driven
by a typed teaching protocol.
"""

from .viewsphere import ViewSphere, CameraPose, build_view_sphere, geodesic_distance
from .meshes import Mesh, make_box, make_cylinder, make_gear_like, make_shaft
from .renderer import (
    Intrinsics,
    RgbdFrame,
    PointCloud,
    SceneSpec,
    Table,
    back_project,
    default_table,
    place_on_table,
    render,
)
from .segmenter import PlaneModel, ObjectMask, fit_dominant_plane, extract_object_masks
from .gov import GovScore, GovWeights, evaluate_gov
from .explorer import ExplorationState, CanonicalSet, explore, select_canonical
from .augmenter import TrainingSample, augment_2d, augment_3d
from .detector import Registry, Detection, detect, extract_features, query, register_object
from .session import Session, parse_command
from .bench import generate_corpus, run_benchmark, select_views
from .store import Config, load_config, load_registry, load_scene, save_config, save_registry, save_scene

__all__ = [name for name in dir() if not name.startswith("_")]
__version__ = "0.1.0"
