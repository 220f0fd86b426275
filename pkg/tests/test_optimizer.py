"""Transfer-point search: pose sampling, voxel search, brute-force parity."""
import json
import math

import numpy as np
import pytest

from handoverkit.costs import REACH_LIMIT_M
from handoverkit.geometry import Pose, VoxelMap, point_distance, pose_from_xyz
from handoverkit.library import canonical_scene, load_library
from handoverkit.optimizer import (
    NoFeasibleHandover,
    RadialBandReach,
    SamplerConfig,
    brute_force_handover,
    default_orientation_set,
    optimize_handover,
    sample_object_poses,
)
from handoverkit.scene import HumanState, Mobility, Scene


def solutions_equal(a, b) -> bool:
    """Exact equality through the serialized form (floats via json repr)."""
    return json.dumps(a.to_dict(), sort_keys=True) == json.dumps(
        b.to_dict(), sort_keys=True
    )


class TestSampler:
    def test_single_identity_sample_lands_in_voxel(self):
        cfg = SamplerConfig(poses_per_voxel=1, orientation_set=[np.array([1.0, 0, 0, 0])])
        center = np.array([0.4, 0.9, 0.3])
        poses = sample_object_poses(center, 0.1, cfg)
        assert len(poses) == 1
        assert np.all(np.abs(poses[0].position - center) <= 0.05 + 1e-12)
        assert np.allclose(poses[0].orientation, [1.0, 0.0, 0.0, 0.0])

    def test_1000_samples_stay_inside_the_voxel_cube(self):
        cfg = SamplerConfig(poses_per_voxel=1000)
        center = np.array([-0.2, 0.7, 1.1])
        size = 0.12
        for pose in sample_object_poses(center, size, cfg):
            assert np.all(np.abs(pose.position - center) <= size / 2 + 1e-12)

    def test_same_inputs_same_samples(self):
        cfg = SamplerConfig(poses_per_voxel=16, seed=7)
        center = np.array([0.1, 0.8, 0.4])
        a = sample_object_poses(center, 0.1, cfg)
        b = sample_object_poses(center, 0.1, cfg)
        assert len(a) == len(b)
        for pa, pb in zip(a, b):
            assert np.array_equal(pa.position, pb.position)
            assert np.array_equal(pa.orientation, pb.orientation)

    def test_different_centers_give_different_streams(self):
        cfg = SamplerConfig(poses_per_voxel=8, seed=7)
        a = sample_object_poses(np.array([0.1, 0.8, 0.4]), 0.1, cfg)
        b = sample_object_poses(np.array([0.2, 0.8, 0.4]), 0.1, cfg)
        assert not all(
            np.array_equal(pa.position - np.array([0.1, 0.8, 0.4]),
                           pb.position - np.array([0.2, 0.8, 0.4]))
            for pa, pb in zip(a, b)
        )

    def test_orientations_come_from_the_configured_set(self):
        cfg = SamplerConfig(poses_per_voxel=64)
        allowed = default_orientation_set()
        for pose in sample_object_poses(np.array([0.0, 0.7, 0.0]), 0.1, cfg):
            assert any(
                np.allclose(pose.orientation, q) or np.allclose(pose.orientation, -q)
                for q in allowed
            )

    def test_rejects_bad_config(self):
        with pytest.raises(ValueError):
            SamplerConfig(poses_per_voxel=0)
        with pytest.raises(ValueError):
            SamplerConfig(orientation_set=[])


class TestRadialBandReach:
    def test_band_is_inclusive(self):
        reach = RadialBandReach(0.35, 1.10)
        base = pose_from_xyz(0, 0, 0)
        assert reach.solve(pose_from_xyz(0.35, 0, 0), base) is not None
        assert reach.solve(pose_from_xyz(1.10, 0, 0), base) is not None
        assert reach.solve(pose_from_xyz(0.34, 0, 0), base) is None
        assert reach.solve(pose_from_xyz(1.11, 0, 0), base) is None

    def test_solution_is_the_grasp_pose(self):
        reach = RadialBandReach()
        grasp = pose_from_xyz(0.2, 0.7, 0.1)
        solved = reach.solve(grasp, pose_from_xyz(0, 0, 0))
        assert solved == grasp


class TestOptimizeHandover:
    def test_single_voxel_scene_equals_brute_force(self, library):
        obj = library.get("glass")
        hand = np.array([0.25, 0.75, 0.25])
        scene = Scene(
            map=VoxelMap(np.array([0.0, 0.6, 0.0]), 0.5, (1, 1, 1)),
            human=HumanState(
                hand=Pose(hand),
                face=Pose(hand + np.array([0.0, 0.35, -0.05])),
                mobility=Mobility.HEALTHY,
                task=obj.task,
            ),
            object=obj,
            robot_base=Pose(np.array([0.25, 0.2, 0.0])),
        )
        assert solutions_equal(optimize_handover(scene), brute_force_handover(scene))

    def test_unsolvable_scene_raises_on_both_paths(self, library):
        obj = library.get("apple")
        hand = np.array([0.02, 0.02, 0.02])
        scene = Scene(
            map=VoxelMap(np.zeros(3), 0.04, (1, 1, 1)),
            human=HumanState(
                hand=Pose(hand),
                face=Pose(hand + np.array([0.0, 0.3, 0.0])),
                mobility=Mobility.LOW,
                task=obj.task,
            ),
            object=obj,
            robot_base=Pose(np.array([0.0, -0.4, 0.0])),
        )
        with pytest.raises(NoFeasibleHandover):
            optimize_handover(scene)
        with pytest.raises(NoFeasibleHandover):
            brute_force_handover(scene)

    def test_matches_brute_force_on_random_small_scenes(self, small_scene_factory):
        solved = 0
        for seed in range(8):
            scene = small_scene_factory(seed)
            cfg = SamplerConfig(poses_per_voxel=6, seed=seed)
            try:
                fast = optimize_handover(scene, cfg=cfg)
            except NoFeasibleHandover:
                with pytest.raises(NoFeasibleHandover):
                    brute_force_handover(scene, cfg=cfg)
                continue
            slow = brute_force_handover(scene, cfg=cfg)
            assert solutions_equal(fast, slow)
            solved += 1
        assert solved >= 4  # the factory geometry keeps most scenes solvable

    def test_solution_respects_search_invariants(self, library):
        scene = canonical_scene(library.get("glass"), Mobility.HEALTHY)
        sol = optimize_handover(scene)
        # the advised grasp is within the receiver's reach limit
        assert sol.costs.reachability <= REACH_LIMIT_M
        assert math.isfinite(sol.costs.reachability)
        # clearance gates hold at the accepted pose
        assert sol.costs.safety > 0.0
        for d in sol.costs.component_distances.values():
            assert d >= 0.05
        # the grasp the robot uses is the appropriateness winner
        from handoverkit.optimizer import select_robot_grasp

        assert sol.robot_grasp_id == select_robot_grasp(scene.object).id

    def test_deterministic_across_repeat_runs(self, library):
        scene = canonical_scene(library.get("book"), Mobility.LOW_MOBILITY)
        a = optimize_handover(scene)
        b = optimize_handover(scene)
        assert solutions_equal(a, b)

    def test_thread_pool_agrees_with_serial(self, library, monkeypatch):
        scene = canonical_scene(library.get("glass"), Mobility.HEALTHY)
        monkeypatch.setenv("HANDOVER_OPT_THREADS", "1")
        serial = optimize_handover(scene)
        monkeypatch.setenv("HANDOVER_OPT_THREADS", "4")
        threaded = optimize_handover(scene)
        assert solutions_equal(serial, threaded)

    def test_nearer_hand_voxels_win_when_valid(self, library):
        scene = canonical_scene(library.get("glass"), Mobility.HEALTHY)
        sol = optimize_handover(scene)
        hand = scene.human.hand
        # no voxel strictly nearer to the hand than the chosen one is valid;
        # brute force provides that guarantee, so spot-check the distance of
        # the chosen voxel equals the brute-force choice
        assert brute_force_handover(scene).voxel == sol.voxel
        assert point_distance(Pose(sol.object_pose.position), hand) < 1.0
