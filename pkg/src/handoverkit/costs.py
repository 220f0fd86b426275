"""Cost terms scored during transfer-point search.

Three terms, all in meters:

- appropriateness: how far a robot grasp stays from the human affordance
  region (bigger is better for the receiver's later use of the object),
- safety: clearance sum between object/end-effector and hand/face, zeroed
  when anything comes closer than the clearance floor,
- reachability: hand distance to the grasp the human is advised to take,
  infinite beyond the comfortable reach limit.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose, point_distance, transform_pose
from .scene import GraspCandidate, ObjectModel

# Minimum clearance (m) between object/end-effector and human hand/face.
SAFETY_CLEARANCE_M = 0.05
# Comfortable human reach (m) from hand to the advised grasp.
REACH_LIMIT_M = 0.75


class NoHumanGrasp(Exception):
    """Object has no affordance-region grasp to score against."""


@dataclass(frozen=True)
class CostBreakdown:
    """Every term behind an accepted transfer-point decision."""

    appropriateness: float
    safety: float
    reachability: float
    component_distances: dict = field(default_factory=dict)


def appropriateness(robot_grasp: GraspCandidate, obj: ObjectModel) -> float:
    """Distance (object frame) from a robot grasp to the nearest human grasp.

    Maximizing this keeps the robot's grasp clear of the region the receiver
    needs for the object's task.
    """
    humans = obj.human_grasps()
    if not humans:
        raise NoHumanGrasp(f"object {obj.id!r} has no affordance-region grasp")
    return min(point_distance(robot_grasp.pose, g.pose) for g in humans)


def safety(obj_pose: Pose, ee_pose: Pose, hand: Pose, face: Pose) -> tuple[float, dict]:
    """Clearance score for a candidate transfer pose.

    Returns (score, distances). The score is the sum of object-to-hand,
    object-to-face and end-effector-to-hand distances when all three clear
    SAFETY_CLEARANCE_M; any strictly closer approach zeroes the score. The
    clearance boundary itself is not penalized.
    """
    d_obj_hand = point_distance(obj_pose, hand)
    d_obj_face = point_distance(obj_pose, face)
    d_ee_hand = point_distance(ee_pose, hand)
    distances = {
        "object_to_hand": d_obj_hand,
        "object_to_face": d_obj_face,
        "ee_to_hand": d_ee_hand,
    }
    if min(d_obj_hand, d_obj_face, d_ee_hand) < SAFETY_CLEARANCE_M:
        return 0.0, distances
    return d_obj_hand + d_obj_face + d_ee_hand, distances


def advised_human_grasp(obj: ObjectModel, obj_pose: Pose, hand: Pose) -> tuple[GraspCandidate, Pose]:
    """The affordance-region grasp the receiver would take at this pose.

    Nearest world-frame grasp to the hand; equal distances break by
    lexicographic grasp id. Returns the grasp and its world pose.
    """
    humans = obj.human_grasps()
    if not humans:
        raise NoHumanGrasp(f"object {obj.id!r} has no affordance-region grasp")
    best = None
    for g in sorted(humans, key=lambda g: g.id):
        world = transform_pose(obj_pose, g.pose)
        d = point_distance(world, hand)
        if best is None or d < best[0]:
            best = (d, g, world)
    return best[1], best[2]


def reachability(obj: ObjectModel, obj_pose: Pose, hand: Pose) -> tuple[float, GraspCandidate]:
    """Hand distance to the advised grasp, or inf beyond REACH_LIMIT_M.

    The limit is inclusive: exactly REACH_LIMIT_M still counts as reachable.
    Returns (distance, advised grasp).
    """
    grasp, world = advised_human_grasp(obj, obj_pose, hand)
    d = point_distance(world, hand)
    if d > REACH_LIMIT_M:
        return math.inf, grasp
    return d, grasp
