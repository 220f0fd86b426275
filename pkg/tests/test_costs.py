"""Cost terms: grasp appropriateness, clearance score, reach feasibility."""
import math

import numpy as np
import pytest

import oracles
from handoverkit.costs import (
    REACH_LIMIT_M,
    SAFETY_CLEARANCE_M,
    NoHumanGrasp,
    advised_human_grasp,
    appropriateness,
    reachability,
    safety,
)
from handoverkit.geometry import Pose, pose_from_xyz, transform_point
from handoverkit.optimizer import select_robot_grasp
from handoverkit.scene import GraspCandidate, ObjectModel, Shape


def dyadic(rng, lo, hi, size=3) -> np.ndarray:
    """Uniform draws on a 2^-20 grid: sums/differences stay exact in float64,
    so translation invariance can be asserted bitwise."""
    scale = 2**20
    return rng.integers(int(lo * scale), int(hi * scale), size=size) / scale


def random_object(rng, n_min=3, n_max=8) -> ObjectModel:
    n = int(rng.integers(n_min, n_max + 1))
    flags = [bool(rng.random() < 0.5) for _ in range(n)]
    if not any(flags):
        flags[0] = True
    if all(flags):
        flags[-1] = False
    grasps = tuple(
        GraspCandidate(
            f"g{i:02d}",
            Pose(rng.uniform(-0.15, 0.15, 3)),
            flags[i],
        )
        for i in range(n)
    )
    return ObjectModel(
        id="rand",
        shape=Shape.IRREGULAR,
        task="inspect",
        bounding_radius=0.3,
        grasps=grasps,
    )


def two_grasp_object(robot_positions, human_position=(0.0, 0.0, 0.0)) -> ObjectModel:
    grasps = [GraspCandidate("human", Pose(np.array(human_position)), True)]
    for i, p in enumerate(robot_positions):
        grasps.append(GraspCandidate(f"r{i}", Pose(np.array(p)), False))
    return ObjectModel(
        id="fixture",
        shape=Shape.CYLINDRICAL,
        task="drink",
        bounding_radius=1.0,
        grasps=tuple(grasps),
    )


class TestAppropriateness:
    def test_single_pair_distance(self):
        obj = two_grasp_object([(0.3, 0.0, 0.0)])
        assert appropriateness(obj.grasp_by_id("r0"), obj) == pytest.approx(0.3)

    def test_minimum_over_human_grasps(self):
        grasps = (
            GraspCandidate("h0", Pose(np.array([0.0, 0.0, 0.0])), True),
            GraspCandidate("h1", Pose(np.array([0.1, 0.0, 0.0])), True),
            GraspCandidate("r0", Pose(np.array([0.2, 0.0, 0.0])), False),
        )
        obj = ObjectModel("m", Shape.CUBIC, "inspect", 0.5, grasps)
        assert appropriateness(obj.grasp_by_id("r0"), obj) == pytest.approx(0.1)

    def test_no_human_grasp_raises(self):
        grasps = (GraspCandidate("r0", Pose(np.zeros(3)), False),)
        obj = ObjectModel("m", Shape.CUBIC, "inspect", 0.5, grasps)
        with pytest.raises(NoHumanGrasp):
            appropriateness(obj.grasps[0], obj)

    def test_argmax_matches_exhaustive_double_loop_on_50_objects(self):
        rng = np.random.default_rng(23)
        for _ in range(50):
            obj = random_object(rng)
            assert select_robot_grasp(obj).id == oracles.best_robot_grasp(obj)


class TestSelectRobotGrasp:
    def test_prefers_the_farther_candidate(self):
        obj = two_grasp_object([(0.1, 0.0, 0.0), (0.3, 0.0, 0.0)])
        assert select_robot_grasp(obj).id == "r1"

    def test_equal_scores_break_to_smaller_id(self):
        obj = two_grasp_object([(0.2, 0.0, 0.0), (-0.2, 0.0, 0.0)])
        assert select_robot_grasp(obj).id == "r0"


class TestSafety:
    @staticmethod
    def poses(d_obj_hand, d_obj_face, d_ee_hand):
        hand = pose_from_xyz(0.0, 0.0, 0.0)
        obj = pose_from_xyz(d_obj_hand, 0.0, 0.0)
        face = pose_from_xyz(d_obj_hand + d_obj_face, 0.0, 0.0)
        ee = pose_from_xyz(0.0, d_ee_hand, 0.0)
        return obj, ee, hand, face

    def test_closer_than_clearance_zeroes_the_score(self):
        obj, ee, hand, face = self.poses(0.03, 0.5, 0.5)
        score, dists = safety(obj, ee, hand, face)
        assert score == 0.0
        assert dists["object_to_hand"] == pytest.approx(0.03)

    def test_boundary_clearance_is_not_penalized(self):
        obj, ee, hand, face = self.poses(
            SAFETY_CLEARANCE_M, SAFETY_CLEARANCE_M, SAFETY_CLEARANCE_M
        )
        score, _ = safety(obj, ee, hand, face)
        assert score == pytest.approx(3 * SAFETY_CLEARANCE_M)

    def test_sum_of_three_distances_when_clear(self):
        obj, ee, hand, face = self.poses(0.2, 0.3, 0.4)
        score, dists = safety(obj, ee, hand, face)
        assert score == pytest.approx(0.9)
        assert dists == pytest.approx(
            {"object_to_hand": 0.2, "object_to_face": 0.3, "ee_to_hand": 0.4}
        )

    def test_zero_strictly_below_clearance_everywhere(self):
        rng = np.random.default_rng(31)
        for _ in range(200):
            d1, d2, d3 = rng.uniform(0.0, 0.6, 3)
            obj, ee, hand, face = self.poses(d1, d2, d3)
            score, _ = safety(obj, ee, hand, face)
            if min(d1, d2, d3) < SAFETY_CLEARANCE_M - 1e-12:
                assert score == 0.0
            elif min(d1, d2, d3) > SAFETY_CLEARANCE_M + 1e-12:
                assert score > 0.0

    def test_translation_invariance_is_exact(self):
        rng = np.random.default_rng(37)
        for _ in range(50):
            base = [Pose(dyadic(rng, -1, 1)) for _ in range(4)]
            offset = dyadic(rng, -3, 3)
            moved = [p.translated(offset) for p in base]
            s0, _ = safety(*base)
            s1, _ = safety(*moved)
            assert s0 == s1


class TestReachability:
    def test_distance_within_limit_is_returned(self):
        obj = two_grasp_object([(0.5, 0.0, 0.0)])
        value, grasp = reachability(obj, pose_from_xyz(0, 0, 0), pose_from_xyz(0.30, 0, 0))
        assert value == pytest.approx(0.30)
        assert grasp.id == "human"

    def test_distance_beyond_limit_is_infinite(self):
        obj = two_grasp_object([(0.5, 0.0, 0.0)])
        value, _ = reachability(obj, pose_from_xyz(0, 0, 0), pose_from_xyz(0.80, 0, 0))
        assert math.isinf(value)

    def test_limit_itself_is_reachable(self):
        obj = two_grasp_object([(0.5, 0.0, 0.0)])
        value, _ = reachability(
            obj, pose_from_xyz(0, 0, 0), pose_from_xyz(REACH_LIMIT_M, 0, 0)
        )
        assert value == pytest.approx(REACH_LIMIT_M)

    def test_infinite_strictly_above_limit_everywhere(self):
        obj = two_grasp_object([(0.5, 0.0, 0.0)])
        rng = np.random.default_rng(41)
        for _ in range(200):
            d = float(rng.uniform(0.0, 1.5))
            value, _ = reachability(obj, pose_from_xyz(0, 0, 0), pose_from_xyz(d, 0, 0))
            if d > REACH_LIMIT_M + 1e-12:
                assert math.isinf(value)
            elif d < REACH_LIMIT_M - 1e-12:
                assert value == pytest.approx(d)

    def test_translation_invariance_is_exact(self):
        obj = two_grasp_object([(0.5, 0.0, 0.0)], human_position=(0.125, -0.0625, 0.25))
        rng = np.random.default_rng(43)
        for _ in range(50):
            obj_pose = Pose(dyadic(rng, -1, 1))
            hand = Pose(dyadic(rng, -1, 1))
            offset = dyadic(rng, -4, 4)
            v0, _ = reachability(obj, obj_pose, hand)
            v1, _ = reachability(obj, obj_pose.translated(offset), hand.translated(offset))
            assert v0 == v1


class TestAdvisedHumanGrasp:
    def test_nearest_world_grasp_wins(self):
        grasps = (
            GraspCandidate("far", Pose(np.array([0.3, 0.0, 0.0])), True),
            GraspCandidate("near", Pose(np.array([-0.1, 0.0, 0.0])), True),
            GraspCandidate("r0", Pose(np.array([0.0, 0.2, 0.0])), False),
        )
        obj = ObjectModel("m", Shape.CUBIC, "inspect", 0.5, grasps)
        hand = pose_from_xyz(-0.5, 0.0, 0.0)
        grasp, world = advised_human_grasp(obj, pose_from_xyz(0, 0, 0), hand)
        assert grasp.id == "near"
        assert np.allclose(world.position, [-0.1, 0.0, 0.0])

    def test_ties_break_to_smaller_id(self):
        grasps = (
            GraspCandidate("b", Pose(np.array([0.1, 0.0, 0.0])), True),
            GraspCandidate("a", Pose(np.array([-0.1, 0.0, 0.0])), True),
            GraspCandidate("r0", Pose(np.array([0.0, 0.2, 0.0])), False),
        )
        obj = ObjectModel("m", Shape.CUBIC, "inspect", 0.5, grasps)
        grasp, _ = advised_human_grasp(obj, pose_from_xyz(0, 0, 0), pose_from_xyz(0, 0, 0))
        assert grasp.id == "a"

    def test_matches_exhaustive_oracle_on_50_objects(self):
        rng = np.random.default_rng(47)
        for _ in range(50):
            obj = random_object(rng)
            obj_pose = Pose(rng.uniform(-0.5, 0.5, 3))
            hand = Pose(rng.uniform(-0.5, 0.5, 3))
            grasp, _ = advised_human_grasp(obj, obj_pose, hand)
            expected = oracles.advised_grasp_id(
                obj,
                lambda g: transform_point(obj_pose, g.pose.position),
                hand.position,
            )
            assert grasp.id == expected
