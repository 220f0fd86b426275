"""Bundled object manifest and canonical scene construction.

Objects of a shape share one grasp template (ids prefixed by shape), and all
generated scenes share a small set of fixed workspace geometries. That keeps
strategy outputs object-independent within a shape, which is what makes the
generated corpus exactly reproducible.
"""
from __future__ import annotations

import json
from dataclasses import dataclass
from importlib import resources

import numpy as np

from .geometry import Pose, VoxelMap
from .scene import HumanState, Mobility, ObjectModel, Scene, build_object


@dataclass(frozen=True)
class SceneGeometry:
    """One fixed workspace layout: receiver, robot, and map placement."""

    name: str
    map_origin: tuple
    map_resolution: float
    map_dims: tuple
    hand: tuple
    face: tuple
    torso: tuple
    robot_base: tuple


# Setup 0 is the corpus default; 1 and 2 vary the receiver and robot placement.
SCENE_GEOMETRIES = (
    SceneGeometry(
        name="facing_seated",
        map_origin=(0.0, 0.3, -0.5), map_resolution=0.1, map_dims=(14, 10, 10),
        hand=(0.35, 0.80, 0.0), face=(0.10, 1.25, 0.0),
        torso=(0.05, 0.90, 0.0), robot_base=(1.25, 0.90, 0.0),
    ),
    SceneGeometry(
        name="low_reach",
        map_origin=(0.0, 0.3, -0.5), map_resolution=0.1, map_dims=(14, 10, 10),
        hand=(0.30, 0.70, 0.05), face=(0.05, 1.20, 0.05),
        torso=(0.0, 0.85, 0.05), robot_base=(1.20, 0.85, 0.0),
    ),
    SceneGeometry(
        name="offset_approach",
        map_origin=(0.0, 0.3, -0.5), map_resolution=0.1, map_dims=(14, 10, 10),
        hand=(0.40, 0.85, -0.10), face=(0.10, 1.30, -0.05),
        torso=(0.10, 0.95, -0.05), robot_base=(1.30, 0.95, 0.10),
    ),
)


@dataclass(frozen=True)
class LibraryEntry:
    object: ObjectModel
    role: str  # "study", "train", or "test"


class ObjectLibrary:
    """The 32-object manifest with roles and shared grasp templates."""

    def __init__(self, entries: list):
        self.entries = list(entries)
        self._by_id = {e.object.id: e for e in self.entries}
        if len(self._by_id) != len(self.entries):
            raise ValueError("duplicate object ids in manifest")

    def get(self, object_id: str) -> ObjectModel:
        try:
            return self._by_id[object_id].object
        except KeyError:
            raise KeyError(f"unknown object id {object_id!r}") from None

    def role(self, object_id: str) -> str:
        return self._by_id[object_id].role

    def ids(self, role: str | None = None) -> list:
        if role is None:
            return [e.object.id for e in self.entries]
        return [e.object.id for e in self.entries if e.role == role]

    def objects(self, role: str | None = None) -> list:
        if role is None:
            return [e.object for e in self.entries]
        return [e.object for e in self.entries if e.role == role]

    def study_ids(self) -> list:
        return self.ids("study")

    def train_ids(self) -> list:
        # study objects train the learner alongside the synthetic train pool
        return [e.object.id for e in self.entries if e.role in ("study", "train")]

    def test_ids(self) -> list:
        return self.ids("test")

    def tasks(self) -> list:
        return sorted({e.object.task for e in self.entries})


_cached_library = None


def load_library() -> ObjectLibrary:
    """Load the bundled manifest (cached; entries are immutable)."""
    global _cached_library
    if _cached_library is not None:
        return _cached_library
    text = resources.files("handoverkit").joinpath("data/object_library.json").read_text()
    manifest = json.loads(text)
    templates = manifest["grasp_templates"]
    entries = []
    for row in manifest["objects"]:
        template = templates[row["shape"]]
        obj = build_object({
            "id": row["id"],
            "shape": row["shape"],
            "task": row["task"],
            "bounding_radius": template["bounding_radius"],
            "semantic_features": row.get("semantic_features", {}),
            "grasps": template["grasps"],
        })
        entries.append(LibraryEntry(object=obj, role=row["role"]))
    _cached_library = ObjectLibrary(entries)
    return _cached_library


def canonical_scene(obj: ObjectModel, mobility: Mobility, setup: int = 0,
                    task: str | None = None) -> Scene:
    """Scene placing the object handover workspace around a fixed receiver."""
    geom = SCENE_GEOMETRIES[setup]
    vmap = VoxelMap(np.array(geom.map_origin), geom.map_resolution, geom.map_dims)
    human = HumanState(
        hand=Pose(np.array(geom.hand)),
        face=Pose(np.array(geom.face)),
        mobility=Mobility(mobility),
        task=task if task is not None else obj.task,
        torso=np.array(geom.torso),
    )
    return Scene(map=vmap, human=human, object=obj, robot_base=Pose(np.array(geom.robot_base)))


def build_effort_setups(object_id: str = "glass") -> list:
    """The three bundled scenes used for strategy effort comparison."""
    obj = load_library().get(object_id)
    return [canonical_scene(obj, Mobility.HEALTHY, setup=i) for i in range(len(SCENE_GEOMETRIES))]
