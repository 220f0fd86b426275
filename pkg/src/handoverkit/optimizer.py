"""Hierarchical transfer-point search over the voxelized workspace.

Search order fixes the hierarchy: the robot grasp is chosen first (most
appropriate for the receiver's task), then voxels are scanned nearest the
receiver's hand first, and inside each voxel the safest reach-feasible
sampled pose wins. The first voxel holding a valid candidate decides.
"""
from __future__ import annotations

import math
import os
import struct
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from . import costs as costs_mod
from .costs import CostBreakdown, NoHumanGrasp, advised_human_grasp, appropriateness, safety
from .geometry import (
    Pose,
    point_distance,
    quat_from_axis_angle,
    transform_pose,
    voxel_center,
    voxels_by_hand_proximity,
)
from .scene import GraspCandidate, ObjectModel, Scene

THREADS_ENV = "HANDOVER_OPT_THREADS"
_CHUNK = 16  # voxels per parallel batch


class NoRobotGrasp(Exception):
    """Object offers no grasp outside the affordance region."""


class NoFeasibleHandover(Exception):
    """No sampled pose in any voxel passed safety and reachability."""


class ReachModel:
    """Feasibility oracle for the robot arm reaching a grasp pose."""

    def solve(self, grasp_world: Pose, robot_base: Pose) -> Pose | None:
        raise NotImplementedError


@dataclass(frozen=True)
class RadialBandReach(ReachModel):
    """Reach is feasible in a radial band around the robot base.

    The end effector lands exactly on the grasp pose (zero tool offset), so
    solve returns the grasp pose itself when the base-to-grasp distance lies
    inside [min_reach, max_reach], inclusive on both ends.
    """

    min_reach: float = 0.35
    max_reach: float = 1.10

    def solve(self, grasp_world: Pose, robot_base: Pose) -> Pose | None:
        d = point_distance(grasp_world, robot_base)
        if self.min_reach <= d <= self.max_reach:
            return grasp_world
        return None


def default_orientation_set() -> list[np.ndarray]:
    """Identity plus the six quarter-turns about the world axes."""
    quats = [np.array([1.0, 0.0, 0.0, 0.0])]
    for axis in ((1.0, 0.0, 0.0), (0.0, 1.0, 0.0), (0.0, 0.0, 1.0)):
        for sign in (1.0, -1.0):
            quats.append(quat_from_axis_angle(axis, sign * math.pi / 2.0))
    return quats


@dataclass
class SamplerConfig:
    poses_per_voxel: int = 8
    orientation_set: list = field(default_factory=default_orientation_set)
    seed: int = 42

    def __post_init__(self):
        if self.poses_per_voxel < 1:
            raise ValueError("poses_per_voxel must be >= 1")
        if not self.orientation_set:
            raise ValueError("orientation_set must be nonempty")


def _center_entropy(center: np.ndarray) -> list[int]:
    # float64 bit patterns keep the derivation exact across platforms
    return [struct.unpack("<Q", struct.pack("<d", float(c)))[0] for c in center]


def sample_object_poses(voxel_center_point, voxel_size: float, cfg: SamplerConfig) -> list[Pose]:
    """Deterministic candidate poses inside one voxel.

    cfg.poses_per_voxel positions drawn uniformly in the voxel cube, each
    paired with every orientation in cfg.orientation_set, position-major.
    The RNG is derived from (cfg.seed, voxel center bits) so the same voxel
    yields the same poses no matter which order voxels are visited in.
    """
    center = np.asarray(voxel_center_point, dtype=float)
    seq = np.random.SeedSequence([int(cfg.seed)] + _center_entropy(center))
    rng = np.random.default_rng(seq)
    offsets = (rng.random((cfg.poses_per_voxel, 3)) - 0.5) * float(voxel_size)
    poses = []
    for off in offsets:
        position = center + off
        for quat in cfg.orientation_set:
            poses.append(Pose(position.copy(), np.asarray(quat, dtype=float)))
    return poses


def select_robot_grasp(obj: ObjectModel) -> GraspCandidate:
    """Robot grasp maximizing appropriateness; ties break by smaller id."""
    candidates = obj.robot_candidates()
    if not candidates:
        raise NoRobotGrasp(f"object {obj.id!r} has no robot grasp candidate")
    if not obj.human_grasps():
        raise NoHumanGrasp(f"object {obj.id!r} has no affordance-region grasp")
    return max(candidates, key=lambda g: (appropriateness(g, obj), _NegStr(g.id)))


class _NegStr:
    """Orders strings descending inside a max(); smaller id wins ties."""

    __slots__ = ("s",)

    def __init__(self, s: str):
        self.s = s

    def __lt__(self, other):
        return self.s > other.s

    def __eq__(self, other):
        return self.s == other.s


@dataclass(frozen=True)
class HandoverSolution:
    robot_grasp_id: str
    object_pose: Pose
    ee_pose: Pose
    advised_grasp_id: str
    costs: CostBreakdown
    voxel: tuple[int, int, int]
    sample_index: int

    def to_dict(self) -> dict:
        return {
            "robot_grasp": self.robot_grasp_id,
            "object_pose": self.object_pose.to_dict(),
            "ee_pose": self.ee_pose.to_dict(),
            "advised_human_grasp": self.advised_grasp_id,
            "voxel": list(self.voxel),
            "sample_index": self.sample_index,
            "costs": {
                "appropriateness": self.costs.appropriateness,
                "safety": self.costs.safety,
                "reachability": self.costs.reachability,
                "component_distances": dict(self.costs.component_distances),
            },
        }


def _evaluate_voxel(scene: Scene, grasp: GraspCandidate, vidx, reach: ReachModel,
                    cfg: SamplerConfig):
    """Best candidate in one voxel, or None when the voxel is invalid.

    Among reach-feasible samples the highest safety wins, earlier sample
    index on ties. The voxel is valid only when that best safety is
    strictly positive and the advised grasp stays within receiver reach.
    """
    center = voxel_center(scene.map, vidx)
    poses = sample_object_poses(center, scene.map.resolution, cfg)
    hand, face = scene.human.hand, scene.human.face
    best = None  # (safety, index, pose, ee_pose, distances)
    for i, pose in enumerate(poses):
        grasp_world = transform_pose(pose, grasp.pose)
        ee = reach.solve(grasp_world, scene.robot_base)
        if ee is None:
            continue
        score, dists = safety(pose, ee, hand, face)
        if best is None or score > best[0]:
            best = (score, i, pose, ee, dists)
    if best is None or best[0] <= 0.0:
        return None
    reach_cost, advised = costs_mod.reachability(scene.object, best[2], hand)
    if not math.isfinite(reach_cost):
        return None
    distances = dict(best[4])
    distances["hand_to_advised_grasp"] = reach_cost
    breakdown = CostBreakdown(
        appropriateness=appropriateness(grasp, scene.object),
        safety=best[0],
        reachability=reach_cost,
        component_distances=distances,
    )
    return HandoverSolution(
        robot_grasp_id=grasp.id,
        object_pose=best[2],
        ee_pose=best[3],
        advised_grasp_id=advised.id,
        costs=breakdown,
        voxel=tuple(int(i) for i in vidx),
        sample_index=best[1],
    )


def _thread_count(n_voxels: int) -> int:
    raw = os.environ.get(THREADS_ENV, "0")
    try:
        value = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if value < 0:
        raise ValueError(f"{THREADS_ENV} must be >= 0, got {value}")
    if value == 0:  # auto: threads only pay off on larger maps
        return 1 if n_voxels < 4 * _CHUNK else min(os.cpu_count() or 1, 8)
    return value


def optimize_handover(scene: Scene, reach: ReachModel | None = None,
                      cfg: SamplerConfig | None = None) -> HandoverSolution:
    """Pick the transfer pose: nearest valid voxel, safest pose within it.

    Raises NoFeasibleHandover when every voxel fails. Voxel evaluations may
    run on a thread pool (HANDOVER_OPT_THREADS), but candidates merge in the
    deterministic proximity order so the result never depends on threading.
    """
    reach = reach if reach is not None else RadialBandReach()
    cfg = cfg if cfg is not None else SamplerConfig()
    grasp = select_robot_grasp(scene.object)
    order = voxels_by_hand_proximity(scene.map, scene.human.hand)
    threads = _thread_count(len(order))

    if threads <= 1:
        for vidx in order:
            found = _evaluate_voxel(scene, grasp, vidx, reach, cfg)
            if found is not None:
                return found
        raise NoFeasibleHandover(f"no valid transfer pose for object {scene.object.id!r}")

    with ThreadPoolExecutor(max_workers=threads) as pool:
        for start in range(0, len(order), _CHUNK):
            chunk = order[start:start + _CHUNK]
            results = list(pool.map(
                lambda vidx: _evaluate_voxel(scene, grasp, vidx, reach, cfg), chunk))
            for found in results:
                if found is not None:
                    return found
    raise NoFeasibleHandover(f"no valid transfer pose for object {scene.object.id!r}")


def brute_force_handover(scene: Scene, reach: ReachModel | None = None,
                         cfg: SamplerConfig | None = None) -> HandoverSolution:
    """Exhaustive reference search over the same sampled candidate set.

    Enumerates every candidate in every voxel, scores them all, then applies
    the selection rules by explicit sorting instead of the early-exit scan.
    Exists to cross-check optimize_handover; keep the search logic disjoint.
    """
    reach = reach if reach is not None else RadialBandReach()
    cfg = cfg if cfg is not None else SamplerConfig()

    robots = scene.object.robot_candidates()
    if not robots:
        raise NoRobotGrasp(f"object {scene.object.id!r} has no robot grasp candidate")
    humans = scene.object.human_grasps()
    if not humans:
        raise NoHumanGrasp(f"object {scene.object.id!r} has no affordance-region grasp")

    # grasp choice by explicit scoring table, max score then min id
    table = []
    for cand in robots:
        nearest = min(point_distance(cand.pose, h.pose) for h in humans)
        table.append((-nearest, cand.id, cand))
    table.sort(key=lambda row: (row[0], row[1]))
    grasp = table[0][2]

    # independent voxel ordering: (distance, lexicographic index)
    hand = scene.human.hand
    face = scene.human.face
    keyed = []
    for ix in range(scene.map.dims[0]):
        for iy in range(scene.map.dims[1]):
            for iz in range(scene.map.dims[2]):
                c = voxel_center(scene.map, (ix, iy, iz))
                keyed.append((float(np.linalg.norm(c - hand.position)), (ix, iy, iz)))
    keyed.sort(key=lambda row: (row[0], row[1]))

    for rank, (_, vidx) in enumerate(keyed):
        center = voxel_center(scene.map, vidx)
        scored = []
        for i, pose in enumerate(sample_object_poses(center, scene.map.resolution, cfg)):
            grasp_world = transform_pose(pose, grasp.pose)
            ee = reach.solve(grasp_world, scene.robot_base)
            if ee is None:
                continue
            score, dists = safety(pose, ee, hand, face)
            scored.append((-score, i, pose, ee, dists))
        if not scored:
            continue
        scored.sort(key=lambda row: (row[0], row[1]))
        neg_score, idx, pose, ee, dists = scored[0]
        if -neg_score <= 0.0:
            continue
        advised, advised_world = advised_human_grasp(scene.object, pose, hand)
        reach_d = point_distance(advised_world, hand)
        if reach_d > costs_mod.REACH_LIMIT_M:
            continue
        distances = dict(dists)
        distances["hand_to_advised_grasp"] = reach_d
        breakdown = CostBreakdown(
            appropriateness=appropriateness(grasp, scene.object),
            safety=-neg_score,
            reachability=reach_d,
            component_distances=distances,
        )
        return HandoverSolution(
            robot_grasp_id=grasp.id,
            object_pose=pose,
            ee_pose=ee,
            advised_grasp_id=advised.id,
            costs=breakdown,
            voxel=vidx,
            sample_index=idx,
        )
    raise NoFeasibleHandover(f"no valid transfer pose for object {scene.object.id!r}")
