"""Relational pipeline: prototypes, world encoding, training, inference,
evaluation, safety gates, and the grasp-mode report."""
import numpy as np
import pytest

from handoverkit.dataset import HandoverInstance, make_corpus, split, synthesize
from handoverkit.effort import MethodId
from handoverkit.geometry import Pose, point_distance, pose_from_xyz
from handoverkit.library import canonical_scene, load_library
from handoverkit.mln import World
from handoverkit.optimizer import select_robot_grasp
from handoverkit.pipeline import (
    NoWinningAtom,
    SafetyGateFailed,
    TrainedModel,
    UncoveredKey,
    UnknownDomainValue,
    _manipulation_grasp,
    build_prototypes,
    build_relational_model,
    classify_method,
    config_class,
    config_class_parts,
    corpus_to_worlds,
    evaluate,
    grasp_distance_report,
    infer_handover,
    plan_and_verify,
    run_end_to_end,
    safety_gate_trace,
    train,
)
from handoverkit.scene import GraspCandidate, Mobility, ObjectModel, Shape


def cluster_instances(center, n=50, sigma=0.002, seed=5):
    rng = np.random.default_rng(seed)
    out = []
    for i in range(n):
        pos = np.asarray(center) + rng.normal(0.0, sigma, 3)
        out.append(
            HandoverInstance(
                instance_id=f"cl-{i:03d}",
                source="synthetic",
                object_id="glass",
                shape=Shape.CYLINDRICAL,
                task="drink",
                mobility=Mobility.LOW,
                method=MethodId.ADAPTIVE,
                target_pose=Pose(pos),
                target_robot_grasp="cyl_base_bottom",
            )
        )
    return out


class TestConfigClasses:
    def test_name_encodes_shape_and_method(self):
        name = config_class(Shape.CUBIC, MethodId.ADAPTIVE)
        assert config_class_parts(name) == (Shape.CUBIC, MethodId.ADAPTIVE)

    def test_all_twelve_classes_round_trip(self):
        seen = set()
        for shape in Shape:
            for method in MethodId:
                name = config_class(shape, method)
                assert config_class_parts(name) == (shape, method)
                seen.add(name)
        assert len(seen) == 12

    def test_unknown_name_rejected(self):
        with pytest.raises(ValueError):
            config_class_parts("cfg_bogus_method")


class TestPrototypes:
    def test_cluster_prototype_lands_on_the_true_center(self):
        center = [0.32, 0.95, 0.28]
        instances = cluster_instances(center, n=50, sigma=0.002)
        table = build_prototypes(instances)
        proto = table.get(Shape.CYLINDRICAL, Mobility.LOW, MethodId.ADAPTIVE)
        assert np.linalg.norm(proto.pose.position - np.asarray(center)) < 0.001
        assert proto.count == 50
        assert proto.grasp_id == "cyl_base_bottom"

    def test_missing_context_raises(self):
        table = build_prototypes(cluster_instances([0.3, 0.9, 0.3]))
        with pytest.raises(UncoveredKey):
            table.get(Shape.CUBIC, Mobility.LOW, MethodId.ADAPTIVE)

    def test_classify_method_recovers_the_label(self):
        instances = cluster_instances([0.3, 0.9, 0.3])
        table = build_prototypes(instances)
        for inst in instances[:10]:
            assert classify_method(inst, table) == MethodId.ADAPTIVE


@pytest.fixture(scope="module")
def small():
    full = synthesize(seed=42)
    return full[:10], build_prototypes(full), build_relational_model(full)


@pytest.fixture(scope="module")
def report():
    return grasp_distance_report()


class TestWorldEncoding:
    def test_single_instance_world_has_five_true_atoms(self, small):
        instances, prototypes, model = small
        worlds = corpus_to_worlds(instances[:1], prototypes, model)
        assert len(worlds) == 1
        assert int(worlds[0].assignment.sum()) == 5

    def test_ten_instances_give_ten_total_assignments(self, small):
        instances, prototypes, model = small
        worlds = corpus_to_worlds(instances, prototypes, model)
        assert len(worlds) == 10
        n_atoms = len(model.atoms())
        for world in worlds:
            assert isinstance(world, World)
            assert world.assignment.shape == (n_atoms,)

    def test_decoding_query_atoms_recovers_the_method_label(self, small):
        instances, prototypes, model = small
        worlds = corpus_to_worlds(instances, prototypes, model)
        for inst, world in zip(instances, worlds):
            config_atoms = [
                atom
                for atom in world.true_atoms()
                if atom[0] == "objectConfiguration"
            ]
            assert len(config_atoms) == 1
            shape, method = config_class_parts(config_atoms[0][1][1])
            assert shape == inst.shape
            assert method == inst.method
            grasp_atoms = [
                atom for atom in world.true_atoms() if atom[0] == "graspRegion"
            ]
            assert len(grasp_atoms) == 1
            assert grasp_atoms[0][1][1] == inst.target_robot_grasp


class TestTraining:
    def test_twenty_instances_train_and_improve_pll(self):
        from handoverkit.mln import pseudo_log_likelihood

        instances = synthesize(seed=42)[:20]
        trained = train(instances)
        assert trained.meta["instances"] == 20
        worlds = corpus_to_worlds(
            instances, trained.prototypes, trained.model
        )
        final = pseudo_log_likelihood(trained.model, worlds)
        trained.model.set_weights(np.zeros(len(trained.model.formulas)))
        initial = pseudo_log_likelihood(trained.model, worlds)
        assert final > initial

    def test_empty_train_split_is_an_error(self):
        with pytest.raises(ValueError):
            train([])

    def test_save_load_round_trip_preserves_inference(self, trained42, tmp_path):
        trained, _ = trained42
        path = tmp_path / "model.json"
        trained.save(path)
        back = TrainedModel.load(path)
        a = infer_handover(trained, Shape.CUBIC, "read", Mobility.LOW)
        b = infer_handover(back, Shape.CUBIC, "read", Mobility.LOW)
        assert a.method == b.method
        assert a.grasp_id == b.grasp_id
        assert np.allclose(a.pose.position, b.pose.position)


class TestInference:
    def test_unseen_object_of_a_trained_shape_gets_the_shape_prototype(
        self, trained42
    ):
        trained, test_split = trained42
        inst = next(i for i in test_split if i.shape == Shape.CUBIC)
        result = infer_handover(trained, inst.shape, inst.task, inst.mobility)
        proto = trained.prototypes.get(inst.shape, inst.mobility, result.method)
        assert result.pose == proto.pose
        assert result.grasp_id == proto.grasp_id

    def test_out_of_domain_shape_is_rejected(self, trained42):
        trained, _ = trained42
        with pytest.raises(UnknownDomainValue):
            infer_handover(trained, "conical", "drink", Mobility.LOW)

    def test_out_of_domain_task_is_rejected(self, trained42):
        trained, _ = trained42
        with pytest.raises(UnknownDomainValue):
            infer_handover(trained, Shape.CUBIC, "juggle", Mobility.LOW)

    def test_inferred_method_tracks_mobility(self, trained42):
        trained, _ = trained42
        healthy = infer_handover(trained, Shape.CYLINDRICAL, "drink", Mobility.HEALTHY)
        low = infer_handover(trained, Shape.CYLINDRICAL, "drink", Mobility.LOW)
        assert healthy.method == MethodId.METHOD_B
        assert low.method == MethodId.ADAPTIVE

    def test_config_and_grasp_choices_are_consistent(self, trained42):
        trained, _ = trained42
        lib = load_library()
        for shape in Shape:
            obj = next(lib.get(o) for o in lib.ids() if lib.get(o).shape == shape)
            result = infer_handover(trained, shape, obj.task, Mobility.LOW)
            cfg_shape, cfg_method = config_class_parts(result.config)
            assert cfg_shape == shape
            assert cfg_method == result.method


class TestEvaluation:
    def test_per_shape_rows_cover_exactly_the_test_shapes(self, trained42):
        trained, test_split = trained42
        subset = [i for i in test_split if i.shape != Shape.SPHERICAL][:200]
        report = evaluate(trained, subset)
        assert {row.shape for row in report.rows} == {i.shape for i in subset}

    def test_zero_jitter_corpus_scores_perfectly(self):
        corpus = make_corpus(seed=42, jitter_pos=0.0, jitter_ang_deg=0.0)
        train_split, test_split = split(corpus)
        trained = train(train_split)
        report = evaluate(trained, test_split)
        assert report.overall.average == pytest.approx(1.0)
        assert report.overall.pose_accuracy == pytest.approx(1.0)
        assert report.overall.grasp_accuracy == pytest.approx(1.0)

    def test_empty_test_split_is_an_error(self, trained42):
        trained, _ = trained42
        with pytest.raises(ValueError):
            evaluate(trained, [])


class TestSafetyGates:
    def test_planner_output_passes_every_gate(self, library):
        scene = canonical_scene(library.get("glass"), Mobility.LOW)
        report = plan_and_verify(scene)
        assert all(gate.passed for gate in report.gates)
        names = [gate.name for gate in report.gates]
        assert names == [
            "object_to_hand",
            "object_to_face",
            "robot_reach",
            "ee_to_hand",
            "hand_to_advised_grasp",
        ]

    def test_executed_handover_passes_every_gate(self, library, trained42):
        trained, _ = trained42
        scene = canonical_scene(library.get("glass"), Mobility.LOW)
        report = run_end_to_end(scene, trained)
        assert all(gate.passed for gate in report.gates)
        assert report.solution.method == MethodId.ADAPTIVE
        assert report.solution.robot_grasp_id in {
            g.id for g in scene.object.robot_candidates()
        }

    def test_low_mobility_pose_stays_within_receiver_reach(
        self, library, trained42
    ):
        trained, _ = trained42
        scene = canonical_scene(library.get("apple"), Mobility.LOW)
        report = run_end_to_end(scene, trained)
        reach_gate = report.gates[-1]
        assert reach_gate.name == "hand_to_advised_grasp"
        assert reach_gate.distance <= 0.75

    def test_face_at_the_transfer_point_fails_the_face_gate(
        self, library, trained42
    ):
        trained, _ = trained42
        scene = canonical_scene(library.get("glass"), Mobility.LOW)
        inferred = run_end_to_end(scene, trained).solution.object_pose
        rigged = scene.to_dict()
        rigged["human"]["face"]["position"] = [float(v) for v in inferred.position]
        from handoverkit.scene import scene_from_dict

        with pytest.raises(SafetyGateFailed) as excinfo:
            run_end_to_end(scene_from_dict(rigged), trained)
        assert excinfo.value.gate == "object_to_face"
        assert excinfo.value.distance == 0.0

    def test_distant_hand_fails_the_receiver_reach_gate(self, library, trained42):
        trained, _ = trained42
        scene = canonical_scene(library.get("glass"), Mobility.LOW)
        rigged = scene.to_dict()
        rigged["human"]["hand"]["position"] = [5.0, 5.0, 5.0]
        rigged["map"]["dims"] = [60, 60, 60]  # keep the hand inside the map
        from handoverkit.scene import scene_from_dict

        with pytest.raises(SafetyGateFailed) as excinfo:
            run_end_to_end(scene_from_dict(rigged), trained)
        assert excinfo.value.gate == "hand_to_advised_grasp"
        assert excinfo.value.distance > 0.75

    def test_forced_violation_names_the_failing_gate(self, library):
        scene = canonical_scene(library.get("glass"), Mobility.HEALTHY)
        # a pose on top of the hand violates the first clearance gate
        hand = scene.human.hand
        gates = safety_gate_trace(scene, Pose(hand.position), pose_from_xyz(2, 2, 2))
        assert gates[0].name == "object_to_hand"
        assert not gates[0].passed
        assert gates[0].distance == 0.0


class TestGraspModeReport:
    def test_rows_cover_the_whole_library(self, report):
        lib = load_library()
        assert {r["object_id"] for r in report["rows"]} == set(lib.ids())

    def test_handover_mode_moves_away_from_affordances(self, report):
        by_shape = {row["shape"]: row for row in report["by_shape"]}
        for shape in ["cubic", "irregular", "cylindrical"]:
            row = by_shape[shape]
            assert row["handover_mean_cm"] > row["manipulation_mean_cm"]
            assert row["p_value"] < 0.05

    def test_spherical_modes_are_equidistant(self, report):
        row = next(r for r in report["by_shape"] if r["shape"] == "spherical")
        assert row["handover_mean_cm"] == pytest.approx(row["manipulation_mean_cm"])
        assert row["p_value"] > 0.05

    def test_elongated_cylinder_prefers_the_far_end_for_handover(self):
        grasps = (
            GraspCandidate("center", Pose(np.zeros(3)), True),
            GraspCandidate("mid", Pose(np.array([0.0, 0.05, 0.0])), False),
            GraspCandidate("end_a", Pose(np.array([0.0, 0.20, 0.0])), False),
            GraspCandidate("end_b", Pose(np.array([0.0, -0.20, 0.0])), False),
        )
        obj = ObjectModel("rod", Shape.CYLINDRICAL, "pour", 0.25, grasps)
        manipulation = _manipulation_grasp(obj)
        handover = select_robot_grasp(obj)
        d_manip = np.linalg.norm(manipulation.pose.position)
        d_hand = np.linalg.norm(handover.pose.position)
        assert d_hand > d_manip
        assert handover.id in ("end_a", "end_b")
