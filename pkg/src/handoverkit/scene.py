"""Scene model: object, grasp candidates, human state, and loading/validation.

Scene files are JSON validated against ``schemas/scene.schema.json`` plus the
semantic checks the schema cannot express (quaternion norms, affordance
partition, grasp containment, hand-in-map).
"""
from __future__ import annotations

import enum
import json
from dataclasses import dataclass, field
from importlib import resources

import jsonschema
import numpy as np

from .geometry import Pose, VoxelMap, point_distance


class ParseError(Exception):
    """Scene file is not valid JSON or not schema-conformant."""


class ValidationError(Exception):
    """Scene JSON parsed but violates a semantic invariant."""


class Shape(str, enum.Enum):
    CUBIC = "cubic"
    CYLINDRICAL = "cylindrical"
    IRREGULAR = "irregular"
    SPHERICAL = "spherical"


class Mobility(str, enum.Enum):
    HEALTHY = "H"
    HIGH_MOBILITY = "H-M"
    LOW_MOBILITY = "L-M"
    LOW = "L"


MOBILITY_ORDER = [Mobility.HEALTHY, Mobility.HIGH_MOBILITY, Mobility.LOW_MOBILITY, Mobility.LOW]


@dataclass(frozen=True)
class GraspCandidate:
    """One grasp on the object, expressed in the object frame."""

    id: str
    pose: Pose
    in_affordance: bool  # True: human affordance region, False: robot candidate

    def to_dict(self) -> dict:
        return {"id": self.id, "pose": self.pose.to_dict(), "in_affordance": self.in_affordance}


@dataclass(frozen=True)
class ObjectModel:
    id: str
    shape: Shape
    task: str
    bounding_radius: float
    grasps: tuple[GraspCandidate, ...]
    semantic_features: dict = field(default_factory=dict)

    def human_grasps(self) -> list[GraspCandidate]:
        return [g for g in self.grasps if g.in_affordance]

    def robot_candidates(self) -> list[GraspCandidate]:
        return [g for g in self.grasps if not g.in_affordance]

    def grasp_by_id(self, grasp_id: str) -> GraspCandidate:
        for g in self.grasps:
            if g.id == grasp_id:
                return g
        raise KeyError(f"object {self.id!r} has no grasp {grasp_id!r}")

    def to_dict(self) -> dict:
        return {
            "id": self.id,
            "shape": self.shape.value,
            "task": self.task,
            "bounding_radius": self.bounding_radius,
            "semantic_features": dict(self.semantic_features),
            "grasps": [g.to_dict() for g in self.grasps],
        }


@dataclass(frozen=True)
class HumanState:
    hand: Pose
    face: Pose
    mobility: Mobility
    task: str
    torso: np.ndarray | None = None  # optional body reference point

    def to_dict(self) -> dict:
        out = {
            "hand": self.hand.to_dict(),
            "face": self.face.to_dict(),
            "mobility": self.mobility.value,
            "task": self.task,
        }
        if self.torso is not None:
            out["torso"] = [float(x) for x in self.torso]
        return out


@dataclass(frozen=True)
class Scene:
    map: VoxelMap
    human: HumanState
    object: ObjectModel
    robot_base: Pose

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "map": {
                "origin": [float(x) for x in self.map.origin],
                "resolution": self.map.resolution,
                "dims": list(self.map.dims),
            },
            "human": self.human.to_dict(),
            "object": self.object.to_dict(),
            "robot_base": self.robot_base.to_dict(),
        }


def _schema() -> dict:
    text = resources.files("handoverkit").joinpath("schemas/scene.schema.json").read_text()
    return json.loads(text)


def _pose_from(data: dict, where: str) -> Pose:
    try:
        return Pose.from_dict(data)
    except ValueError as exc:
        raise ValidationError(f"{where}: {exc}") from None


def human_grasps(obj: ObjectModel) -> list[GraspCandidate]:
    """Grasps inside the human affordance region."""
    return obj.human_grasps()


def robot_grasp_candidates(obj: ObjectModel) -> list[GraspCandidate]:
    """Grasps available to the robot (outside the affordance region)."""
    return obj.robot_candidates()


def build_object(data: dict) -> ObjectModel:
    """Construct and validate an ObjectModel from a plain dict."""
    grasps = []
    seen_ids = set()
    for i, g in enumerate(data["grasps"]):
        where = f"object.grasps[{i}]"
        if g["id"] in seen_ids:
            raise ValidationError(f"{where}: duplicate grasp id {g['id']!r}")
        seen_ids.add(g["id"])
        grasps.append(GraspCandidate(g["id"], _pose_from(g["pose"], where), bool(g["in_affordance"])))

    radius = float(data["bounding_radius"])
    for g in grasps:
        d = float(np.linalg.norm(g.pose.position))
        if d > radius + 1e-9:
            raise ValidationError(
                f"object.grasps[{g.id}]: position {d:.4f} m from center exceeds "
                f"bounding_radius {radius:.4f} m"
            )

    obj = ObjectModel(
        id=data["id"],
        shape=Shape(data["shape"]),
        task=data["task"],
        bounding_radius=radius,
        grasps=tuple(grasps),
        semantic_features=dict(data.get("semantic_features", {})),
    )
    # both sides of the affordance partition must be populated
    if not obj.human_grasps():
        raise ValidationError(f"object {obj.id!r} has no affordance-region grasp")
    if not obj.robot_candidates():
        raise ValidationError(f"object {obj.id!r} has no robot grasp candidate")
    return obj


def scene_from_dict(data: dict) -> Scene:
    """Validate a parsed scene dict (schema plus semantic checks)."""
    try:
        jsonschema.validate(data, _schema())
    except jsonschema.ValidationError as exc:
        path = "/".join(str(p) for p in exc.absolute_path) or "<root>"
        raise ParseError(f"schema violation at {path}: {exc.message}") from None

    m = data["map"]
    vmap = VoxelMap(np.asarray(m["origin"], dtype=float), float(m["resolution"]), tuple(m["dims"]))

    h = data["human"]
    human = HumanState(
        hand=_pose_from(h["hand"], "human.hand"),
        face=_pose_from(h["face"], "human.face"),
        mobility=Mobility(h["mobility"]),
        task=h["task"],
        torso=None if "torso" not in h else np.asarray(h["torso"], dtype=float),
    )
    obj = build_object(data["object"])
    robot_base = _pose_from(data["robot_base"], "robot_base")

    if not vmap.contains(human.hand.position):
        raise ValidationError("human.hand must lie inside the voxel map volume")
    if point_distance(human.hand, human.face) == 0.0:
        raise ValidationError("human.hand and human.face must be distinct points")
    return Scene(map=vmap, human=human, object=obj, robot_base=robot_base)


def load_scene(path) -> Scene:
    """Load and validate a scene JSON file."""
    try:
        with open(path, "r", encoding="utf-8") as fh:
            data = json.load(fh)
    except OSError as exc:
        raise ParseError(f"cannot read scene file {path}: {exc}") from None
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid JSON in {path}: {exc}") from None
    return scene_from_dict(data)


def save_scene(scene: Scene, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(scene.to_dict(), fh, indent=2, sort_keys=True)
        fh.write("\n")
