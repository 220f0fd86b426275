"""Receiver arm-strain model and transfer-point strategy comparison.

The receiver's arm is a planar three-link chain under gravity, solved in the
vertical plane through the shoulder and the reach target (+y is up). Effort
for a reach is the mean static gravity torque magnitude along a joint-space
interpolated path from the resting hand to the transfer point.
"""
from __future__ import annotations

import enum
import math
from dataclasses import dataclass, field

import numpy as np

from .geometry import Pose, transform_pose
from .optimizer import ReachModel, SamplerConfig, optimize_handover
from .scene import Scene

# Fixed-point strategies place the object on the torso-to-robot ray.
METHOD_A_DISTANCE_M = 0.75
METHOD_B_DISTANCE_M = 0.50
# Default torso estimate: this far behind the hand, along hand-to-robot.
TORSO_BEHIND_HAND_M = 0.25

_REACH_EPS = 1e-9  # equality at the reach boundary still counts


class Unreachable(Exception):
    """Target lies outside the arm's geometric workspace."""


class LimitViolation(Exception):
    """Geometric solutions exist but all violate joint limits."""


class MethodId(str, enum.Enum):
    METHOD_A = "method_a"   # fixed far placement on the torso-robot ray
    METHOD_B = "method_b"   # fixed mid placement on the torso-robot ray
    ADAPTIVE = "adaptive"   # transfer pose from the workspace optimizer


@dataclass(frozen=True)
class ArmModel:
    """Planar shoulder-elbow-wrist chain with uniform-density links."""

    link_lengths: tuple[float, float, float] = (0.30, 0.27, 0.18)
    link_masses: tuple[float, float, float] = (2.1, 1.2, 0.5)
    gravity: float = 9.81
    joint_limits: tuple = (
        (-math.radians(170.0), math.radians(170.0)),
        (-math.radians(170.0), math.radians(170.0)),
        (-math.radians(170.0), math.radians(170.0)),
    )

    def __post_init__(self):
        if len(self.link_lengths) != 3 or any(l <= 0 for l in self.link_lengths):
            raise ValueError("link_lengths must be three positive values")
        if len(self.link_masses) != 3 or any(m <= 0 for m in self.link_masses):
            raise ValueError("link_masses must be three positive values")
        for lo, hi in self.joint_limits:
            if not lo < hi:
                raise ValueError("joint limits must be non-degenerate ranges")

    @property
    def total_length(self) -> float:
        return float(sum(self.link_lengths))


def _plane_coords(shoulder: np.ndarray, target: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Sagittal-plane frame: unit horizontal axis e_u, and (u, v) of target."""
    delta = np.asarray(target, dtype=float) - np.asarray(shoulder, dtype=float)
    horiz = np.array([delta[0], 0.0, delta[2]])
    u = float(np.linalg.norm(horiz))
    e_u = horiz / u if u > 1e-12 else np.array([1.0, 0.0, 0.0])
    return e_u, u, float(delta[1])


def _wrap_angle(a: float) -> float:
    return math.atan2(math.sin(a), math.cos(a))


def _in_limits(arm: ArmModel, angles) -> bool:
    return all(lo - 1e-12 <= a <= hi + 1e-12 for a, (lo, hi) in zip(angles, arm.joint_limits))


def solve_arm(arm: ArmModel, shoulder_origin, target) -> np.ndarray:
    """Joint angles reaching the target point, elbow-down.

    Angles are measured in the vertical plane through shoulder and target:
    theta1 from the horizontal axis toward the target, theta2/theta3 relative
    to the previous link, positive counterclockwise (up). The last link's
    approach angle tracks the shoulder-to-target direction, with a
    deterministic sweep fallback when that leaves the wrist out of the
    two-link annulus.
    """
    l1, l2, l3 = arm.link_lengths
    _, u, v = _plane_coords(shoulder_origin, target)
    dist = math.hypot(u, v)
    if dist > arm.total_length + _REACH_EPS:
        raise Unreachable(
            f"target {dist:.4f} m from shoulder exceeds arm length {arm.total_length:.4f} m"
        )

    base_phi = math.atan2(v, u)
    saw_geometric = False
    # sweep the approach angle away from the direct one in 1-degree steps
    for k in range(0, 181):
        for sign in ((1,) if k == 0 else (1, -1)):
            phi = base_phi + sign * math.radians(k)
            wu = u - l3 * math.cos(phi)
            wv = v - l3 * math.sin(phi)
            d = math.hypot(wu, wv)
            if d > l1 + l2 + _REACH_EPS or d < abs(l1 - l2) - _REACH_EPS:
                continue
            c2 = (d * d - l1 * l1 - l2 * l2) / (2.0 * l1 * l2)
            c2 = max(-1.0, min(1.0, c2))
            theta2 = math.acos(c2)  # elbow-down branch
            gamma = math.atan2(wv, wu)
            beta = math.atan2(l2 * math.sin(theta2), l1 + l2 * math.cos(theta2))
            theta1 = gamma - beta
            theta3 = _wrap_angle(phi - theta1 - theta2)
            angles = np.array([theta1, theta2, theta3])
            saw_geometric = True
            if _in_limits(arm, angles):
                return angles
    if saw_geometric:
        raise LimitViolation("every geometric solution violates a joint limit")
    raise Unreachable("no approach angle places the wrist inside the two-link annulus")


def fk_planar(arm: ArmModel, angles) -> tuple[float, float]:
    """Fingertip (u, v) in the arm plane for the given joint angles."""
    l1, l2, l3 = arm.link_lengths
    t1, t2, t3 = angles
    u = l1 * math.cos(t1) + l2 * math.cos(t1 + t2) + l3 * math.cos(t1 + t2 + t3)
    v = l1 * math.sin(t1) + l2 * math.sin(t1 + t2) + l3 * math.sin(t1 + t2 + t3)
    return u, v


def fk_world(arm: ArmModel, shoulder_origin, target_for_plane, angles) -> np.ndarray:
    """Fingertip world point, using the plane defined by shoulder and target."""
    e_u, _, _ = _plane_coords(shoulder_origin, target_for_plane)
    u, v = fk_planar(arm, angles)
    s = np.asarray(shoulder_origin, dtype=float)
    return s + u * e_u + v * np.array([0.0, 1.0, 0.0])


def gravity_torques(arm: ArmModel, angles) -> np.ndarray:
    """Static gravity torque at each joint for a frozen configuration.

    Each joint carries the moment of every outboard link's weight about its
    own horizontal offset; a straight-down arm therefore loads nothing.
    """
    l1, l2, l3 = arm.link_lengths
    m1, m2, m3 = arm.link_masses
    t1, t2, t3 = angles
    a1, a12, a123 = t1, t1 + t2, t1 + t2 + t3
    u_j1 = 0.0
    u_j2 = l1 * math.cos(a1)
    u_j3 = u_j2 + l2 * math.cos(a12)
    u_c1 = 0.5 * l1 * math.cos(a1)
    u_c2 = u_j2 + 0.5 * l2 * math.cos(a12)
    u_c3 = u_j3 + 0.5 * l3 * math.cos(a123)
    g = arm.gravity
    tau1 = g * (m1 * (u_c1 - u_j1) + m2 * (u_c2 - u_j1) + m3 * (u_c3 - u_j1))
    tau2 = g * (m2 * (u_c2 - u_j2) + m3 * (u_c3 - u_j2))
    tau3 = g * (m3 * (u_c3 - u_j3))
    return np.array([tau1, tau2, tau3])


def static_torque_load(arm: ArmModel, angles) -> float:
    return float(np.sum(np.abs(gravity_torques(arm, angles))))


def joint_effort(arm: ArmModel, shoulder_origin, start_target, end_target,
                 steps: int = 25) -> float:
    """Mean total torque magnitude along a joint-space path between targets.

    The path interpolates linearly in joint space over `steps` sampled
    configurations (endpoints included). Identical endpoints reduce to the
    static hold torque.
    """
    if steps < 1:
        raise ValueError("steps must be >= 1")
    start = solve_arm(arm, shoulder_origin, start_target)
    end = solve_arm(arm, shoulder_origin, end_target)
    if steps == 1:
        ts = [0.0]
    else:
        ts = [k / (steps - 1) for k in range(steps)]
    loads = [static_torque_load(arm, start + t * (end - start)) for t in ts]
    return float(np.mean(loads))


def torso_point(scene: Scene) -> np.ndarray:
    """Scene torso if present, else a point behind the hand toward the body.

    The fallback walks TORSO_BEHIND_HAND_M from the hand along the
    robot-to-hand direction (away from the robot).
    """
    if scene.human.torso is not None:
        return np.asarray(scene.human.torso, dtype=float)
    hand = scene.human.hand.position
    toward_robot = scene.robot_base.position - hand
    n = np.linalg.norm(toward_robot)
    if n < 1e-12:
        raise ValueError("robot base coincides with the hand, torso underdefined")
    return hand - TORSO_BEHIND_HAND_M * toward_robot / n


def method_transfer_point(method: MethodId, scene: Scene,
                          reach: ReachModel | None = None,
                          cfg: SamplerConfig | None = None) -> np.ndarray:
    """Where each strategy asks the receiver to take the object.

    Fixed strategies project from the torso toward the robot base at their
    characteristic distance. The adaptive strategy runs the workspace
    optimizer and returns the advised human grasp's world position.
    """
    method = MethodId(method)
    if method in (MethodId.METHOD_A, MethodId.METHOD_B):
        torso = torso_point(scene)
        ray = scene.robot_base.position - torso
        n = np.linalg.norm(ray)
        if n < 1e-12:
            raise ValueError("robot base coincides with the torso, ray underdefined")
        dist = METHOD_A_DISTANCE_M if method is MethodId.METHOD_A else METHOD_B_DISTANCE_M
        return torso + dist * ray / n
    solution = optimize_handover(scene, reach, cfg)
    advised = scene.object.grasp_by_id(solution.advised_grasp_id)
    return transform_pose(solution.object_pose, advised.pose).position


@dataclass
class EffortTable:
    """Per-trial efforts and per-method means for one scene."""

    rows: list  # dicts: method, trial, effort_nm
    means: dict  # method value -> mean effort


def compare_methods(scene: Scene, trials: int = 5, seed: int = 42,
                    arm: ArmModel | None = None,
                    reach: ReachModel | None = None,
                    cfg: SamplerConfig | None = None,
                    steps: int = 25) -> EffortTable:
    """Effort of reaching each strategy's transfer point from a resting hand.

    Each trial perturbs the resting hand position (2 cm normal noise, seeded
    per trial) and reuses it across methods, so rows are paired. Perturbed
    starts that fall outside the workspace are redrawn deterministically.
    """
    if trials < 1:
        raise ValueError("trials must be >= 1")
    arm = arm if arm is not None else ArmModel()
    shoulder = torso_point(scene)
    endpoints = {m: method_transfer_point(m, scene, reach, cfg) for m in MethodId}

    rows = []
    sums = {m: 0.0 for m in MethodId}
    for trial in range(trials):
        start = None
        for attempt in range(10):
            rng = np.random.default_rng(np.random.SeedSequence([seed, trial, attempt]))
            candidate = scene.human.hand.position + rng.normal(0.0, 0.02, size=3)
            try:
                solve_arm(arm, shoulder, candidate)
            except (Unreachable, LimitViolation):
                continue
            start = candidate
            break
        if start is None:
            raise Unreachable(f"trial {trial}: no reachable perturbed start after 10 draws")
        for method in MethodId:
            effort = joint_effort(arm, shoulder, start, endpoints[method], steps=steps)
            rows.append({"method": method.value, "trial": trial, "effort_nm": effort})
            sums[method] += effort
    means = {m.value: sums[m] / trials for m in MethodId}
    return EffortTable(rows=rows, means=means)
