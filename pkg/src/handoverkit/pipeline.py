"""Relational handover pipeline.

Connects the corpus to the relational learner and the workspace optimizer:

* prototypes summarize the continuous transfer poses per (shape, mobility,
  method) so poses can be discretized into configuration classes;
* a clausal model relates object context (shape, task, receiver mobility) to
  the preferred configuration class and grasp region;
* training learns clause weights from corpus-derived worlds, inference
  decodes the winning classes back into a concrete pose and grasp;
* the end-to-end planner wraps the workspace optimizer with explicit safety
  gates and a per-gate trace.
"""
from __future__ import annotations

import json
from collections import Counter, OrderedDict
from dataclasses import dataclass, field

import numpy as np

from . import mln
from .costs import REACH_LIMIT_M, SAFETY_CLEARANCE_M, advised_human_grasp
from .effort import MethodId
from .geometry import Pose, angular_distance, point_distance, transform_pose
from .library import load_library
from .mln import Formula, Literal, MlnModel, Predicate, World
from .optimizer import (
    RadialBandReach,
    ReachModel,
    SamplerConfig,
    optimize_handover,
    select_robot_grasp,
)
from .scene import MOBILITY_ORDER, Mobility, ObjectModel, Scene, Shape
from .stats import RankSumResult, rank_sum

__all__ = [
    "UncoveredKey",
    "UnknownDomainValue",
    "NoWinningAtom",
    "SafetyGateFailed",
    "POSE_TOLERANCE_M",
    "ANGLE_TOLERANCE_DEG",
    "PROTOTYPE_MATCH_TOL_M",
    "config_class",
    "config_class_parts",
    "Prototype",
    "PrototypeTable",
    "build_prototypes",
    "build_relational_model",
    "corpus_to_worlds",
    "TrainedModel",
    "train",
    "InferenceResult",
    "infer_handover",
    "EvalRow",
    "EvalReport",
    "evaluate",
    "GateCheck",
    "PlanReport",
    "ExecutedHandover",
    "safety_gate_trace",
    "plan_and_verify",
    "run_end_to_end",
    "grasp_distance_report",
]


class UncoveredKey(KeyError):
    """No prototype covers the requested (shape, mobility) context."""


class UnknownDomainValue(ValueError):
    """A query value is outside the trained model's domains."""


class NoWinningAtom(Exception):
    """Inference produced no true atom for a queried predicate."""


class SafetyGateFailed(Exception):
    """A planned handover violates one of the safety gates."""

    def __init__(self, gate: str, distance: float, message: str):
        super().__init__(message)
        self.gate = gate
        self.distance = distance


POSE_TOLERANCE_M = 0.005
ANGLE_TOLERANCE_DEG = 2.0
PROTOTYPE_MATCH_TOL_M = 0.05

_METHODS = (MethodId.METHOD_A, MethodId.METHOD_B, MethodId.ADAPTIVE)

OBJ_CONST = "o1"
QUERY_CONST = "q1"

P_SHAPE = "hasShape"
P_TASK = "hasTask"
P_MOBILITY = "hasMobility"
P_CONFIG = "objectConfiguration"
P_GRASP = "graspRegion"


def config_class(shape: Shape | str, method: MethodId | str) -> str:
    """Name of the configuration class for a shape/method pair."""
    return f"cfg_{Shape(shape).value}_{MethodId(method).value}"


def config_class_parts(name: str) -> tuple[Shape, MethodId]:
    """Inverse of config_class (values are enumerable, so use a table)."""
    for shape in Shape:
        for method in _METHODS:
            if config_class(shape, method) == name:
                return shape, method
    raise ValueError(f"not a configuration class name: {name!r}")


# ---------------------------------------------------------------------------
# Prototypes
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class Prototype:
    """Mean transfer outcome for one (shape, mobility, method) cell."""

    shape: Shape
    mobility: Mobility
    method: MethodId
    pose: Pose
    grasp_id: str
    count: int

    def to_dict(self) -> dict:
        return {
            "shape": self.shape.value,
            "mobility": self.mobility.value,
            "method": self.method.value,
            "pose": self.pose.to_dict(),
            "grasp_id": self.grasp_id,
            "count": self.count,
        }

    @classmethod
    def from_dict(cls, data: dict) -> "Prototype":
        return cls(
            shape=Shape(data["shape"]),
            mobility=Mobility(data["mobility"]),
            method=MethodId(data["method"]),
            pose=Pose.from_dict(data["pose"]),
            grasp_id=data["grasp_id"],
            count=int(data["count"]),
        )


class PrototypeTable:
    """Lookup of prototypes keyed by (shape, mobility, method)."""

    def __init__(self, prototypes):
        self._table: "OrderedDict[tuple, Prototype]" = OrderedDict()
        for proto in prototypes:
            key = (proto.shape, proto.mobility, proto.method)
            if key in self._table:
                raise ValueError(f"duplicate prototype for {key}")
            self._table[key] = proto

    def __len__(self) -> int:
        return len(self._table)

    def __iter__(self):
        return iter(self._table.values())

    def get(self, shape: Shape, mobility: Mobility, method: MethodId) -> Prototype:
        key = (Shape(shape), Mobility(mobility), MethodId(method))
        if key not in self._table:
            raise UncoveredKey(
                f"no prototype for shape={key[0].value} mobility={key[1].value} "
                f"method={key[2].value}"
            )
        return self._table[key]

    def candidates(self, shape: Shape, mobility: Mobility) -> list:
        shape, mobility = Shape(shape), Mobility(mobility)
        return [
            p for (s, m, _), p in self._table.items() if s is shape and m is mobility
        ]

    def to_list(self) -> list:
        return [p.to_dict() for p in self._table.values()]

    @classmethod
    def from_list(cls, data: list) -> "PrototypeTable":
        return cls(Prototype.from_dict(d) for d in data)


def mean_quaternion(quats) -> np.ndarray:
    """Hemisphere-aligned normalized mean of unit quaternions.

    Every quaternion is flipped onto the hemisphere of the first one before
    averaging; q and -q encode the same rotation so the flip is free.
    """
    quats = [np.asarray(q, dtype=float) for q in quats]
    if not quats:
        raise ValueError("mean_quaternion needs at least one quaternion")
    ref = quats[0]
    acc = np.zeros(4)
    for q in quats:
        acc += q if float(np.dot(q, ref)) >= 0.0 else -q
    norm = float(np.linalg.norm(acc))
    if norm < 1e-12:
        raise ValueError("quaternion mean is degenerate (antipodal inputs)")
    return acc / norm


def build_prototypes(instances) -> PrototypeTable:
    """Average the corpus outcomes per (shape, mobility, method) cell.

    Positions average componentwise, orientations with the hemisphere-aligned
    quaternion mean, and the grasp is the modal grasp id (ties to the
    lexicographically smallest).
    """
    groups: "OrderedDict[tuple, list]" = OrderedDict()
    for inst in instances:
        key = (inst.shape, inst.mobility, inst.method)
        groups.setdefault(key, []).append(inst)

    prototypes = []
    for (shape, mobility, method), members in groups.items():
        positions = np.array(
            [np.asarray(m.target_pose.position, dtype=float) for m in members]
        )
        quats = [np.asarray(m.target_pose.orientation, dtype=float) for m in members]
        grasp_counts = Counter(m.target_robot_grasp for m in members)
        grasp_id = min(grasp_counts, key=lambda g: (-grasp_counts[g], g))
        prototypes.append(
            Prototype(
                shape=shape,
                mobility=mobility,
                method=method,
                pose=Pose(
                    position=positions.mean(axis=0),
                    orientation=mean_quaternion(quats),
                ),
                grasp_id=grasp_id,
                count=len(members),
            )
        )
    return PrototypeTable(prototypes)


def classify_method(
    instance, prototypes: PrototypeTable, tol: float = PROTOTYPE_MATCH_TOL_M
) -> MethodId:
    """Discretize an instance's pose to the nearest same-context prototype."""
    candidates = prototypes.candidates(instance.shape, instance.mobility)
    if not candidates:
        raise UncoveredKey(
            f"no prototypes for shape={instance.shape.value} "
            f"mobility={instance.mobility.value}"
        )
    best = min(
        candidates,
        key=lambda p: (
            point_distance(p.pose, instance.target_pose),
            p.method.value,
        ),
    )
    distance = point_distance(best.pose, instance.target_pose)
    if distance > tol:
        raise UncoveredKey(
            f"instance {instance.instance_id} pose is {distance:.3f} m from the "
            f"nearest prototype (> {tol} m) for shape={instance.shape.value} "
            f"mobility={instance.mobility.value}"
        )
    return best.method


# ---------------------------------------------------------------------------
# Relational model construction
# ---------------------------------------------------------------------------


def _grasp_domain(library) -> list:
    ids = set()
    for obj in library.objects():
        for grasp in obj.robot_candidates():
            ids.add(grasp.id)
    return sorted(ids)


def _shape_grasp_ids(library, shape: Shape) -> list:
    for obj in library.objects():
        if obj.shape is shape:
            return sorted(g.id for g in obj.robot_candidates())
    return []


def build_relational_model(instances, tasks=None) -> MlnModel:
    """Clausal model tying (shape, task, mobility) context to outcomes.

    One implication clause is built per observed training context and
    shape-compatible outcome class, written as a disjunction:

        !hasShape(?o,S) | !hasTask(?o,T) | !hasMobility(?q,L) | outcome(?q,C)

    Weights start at zero and are learned. Query predicates are the two
    outcome predicates; everything else is evidence at inference time.
    """
    library = load_library()
    if tasks is None:
        tasks = library.tasks()
    shapes = sorted(s.value for s in Shape)
    mobilities = [m.value for m in MOBILITY_ORDER]
    configs = [
        config_class(shape, method) for shape in sorted(Shape, key=lambda s: s.value)
        for method in _METHODS
    ]
    grasps = _grasp_domain(library)

    domains = {
        "obj": [OBJ_CONST],
        "query": [QUERY_CONST],
        "shape": shapes,
        "task": list(tasks),
        "mobility": mobilities,
        "config": configs,
        "grasp": grasps,
    }
    predicates = [
        Predicate(P_SHAPE, ("obj", "shape")),
        Predicate(P_TASK, ("obj", "task")),
        Predicate(P_MOBILITY, ("query", "mobility")),
        Predicate(P_CONFIG, ("query", "config")),
        Predicate(P_GRASP, ("query", "grasp")),
    ]

    contexts = sorted(
        {(inst.shape, inst.task, inst.mobility) for inst in instances},
        key=lambda c: (c[0].value, c[1], c[2].value),
    )
    if not contexts:
        raise ValueError("cannot build a relational model from zero instances")

    formulas = []
    for shape, task, mobility in contexts:
        context_literals = (
            Literal(P_SHAPE, ("?o", shape.value), negated=True),
            Literal(P_TASK, ("?o", task), negated=True),
            Literal(P_MOBILITY, ("?q", mobility.value), negated=True),
        )
        for method in _METHODS:
            head = Literal(P_CONFIG, ("?q", config_class(shape, method)))
            formulas.append(Formula(context_literals + (head,), 0.0))
        for grasp_id in _shape_grasp_ids(library, shape):
            head = Literal(P_GRASP, ("?q", grasp_id))
            formulas.append(Formula(context_literals + (head,), 0.0))

    return MlnModel(
        domains=domains,
        predicates=predicates,
        formulas=formulas,
        query_predicates=(P_CONFIG, P_GRASP),
    )


def corpus_to_worlds(instances, prototypes: PrototypeTable, model: MlnModel) -> list:
    """One world per instance: context atoms plus its outcome class atoms.

    The configuration class comes from discretizing the instance's pose
    against the prototypes (not from any label on the instance), so worlds
    reflect exactly what the continuous data supports.
    """
    worlds = []
    for inst in instances:
        method = classify_method(inst, prototypes)
        true_atoms = [
            (P_SHAPE, (OBJ_CONST, inst.shape.value)),
            (P_TASK, (OBJ_CONST, inst.task)),
            (P_MOBILITY, (QUERY_CONST, inst.mobility.value)),
            (P_CONFIG, (QUERY_CONST, config_class(inst.shape, method))),
            (P_GRASP, (QUERY_CONST, inst.target_robot_grasp)),
        ]
        worlds.append(World.from_true_atoms(model, true_atoms))
    return worlds


# ---------------------------------------------------------------------------
# Training
# ---------------------------------------------------------------------------


@dataclass
class TrainedModel:
    model: MlnModel
    prototypes: PrototypeTable
    train_objects: list
    meta: dict = field(default_factory=dict)

    def to_dict(self) -> dict:
        return {
            "schema_version": 1,
            "mln": mln.model_to_dict(self.model),
            "prototypes": self.prototypes.to_list(),
            "train_objects": list(self.train_objects),
            "meta": dict(self.meta),
        }

    @classmethod
    def from_dict(cls, data: dict) -> "TrainedModel":
        return cls(
            model=mln.model_from_dict(data["mln"]),
            prototypes=PrototypeTable.from_list(data["prototypes"]),
            train_objects=list(data["train_objects"]),
            meta=dict(data.get("meta", {})),
        )

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8") as fh:
            json.dump(self.to_dict(), fh, indent=2, sort_keys=True)
            fh.write("\n")

    @classmethod
    def load(cls, path) -> "TrainedModel":
        with open(path, "r", encoding="utf-8") as fh:
            return cls.from_dict(json.load(fh))


def _query_atom_indices(model: MlnModel) -> list:
    return [
        i
        for i, atom in enumerate(model.atoms())
        if atom[0] in model.query_predicates
    ]


def train(train_instances, opts: mln.LearnOptions | None = None) -> TrainedModel:
    """Build prototypes and the relational model, then learn clause weights.

    Learning maximizes the conditional pseudo-log-likelihood of the outcome
    atoms given the context evidence.
    """
    train_instances = list(train_instances)
    if not train_instances:
        raise ValueError("training requires at least one instance")
    prototypes = build_prototypes(train_instances)
    model = build_relational_model(train_instances)
    worlds = corpus_to_worlds(train_instances, prototypes, model)
    result = mln.learn_weights(
        model, worlds, opts, flip_atoms=_query_atom_indices(model)
    )
    model.set_weights(result.weights)
    return TrainedModel(
        model=model,
        prototypes=prototypes,
        train_objects=sorted({inst.object_id for inst in train_instances}),
        meta={
            "instances": len(train_instances),
            "iterations": result.iterations,
            "converged": result.converged,
        },
    )


# ---------------------------------------------------------------------------
# Inference
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class InferenceResult:
    shape: Shape
    task: str
    mobility: Mobility
    method: MethodId
    config: str
    grasp_id: str
    pose: Pose

    def to_dict(self) -> dict:
        return {
            "shape": self.shape.value,
            "task": self.task,
            "mobility": self.mobility.value,
            "method": self.method.value,
            "config": self.config,
            "grasp_id": self.grasp_id,
            "pose": self.pose.to_dict(),
        }


def _winning_values(world: World, predicate: str, domain_values) -> list:
    return [
        value
        for value in domain_values
        if world[(predicate, (QUERY_CONST, value))]
    ]


def infer_handover(
    trained: TrainedModel,
    shape: Shape | str,
    task: str,
    mobility: Mobility | str,
) -> InferenceResult:
    """Most likely configuration class and grasp region for a context.

    The context is asserted as evidence, the outcome atoms are completed by
    MAP inference, and the winning configuration class is decoded back to a
    concrete pose via the prototype for (shape, queried mobility, method).
    """
    model = trained.model
    try:
        shape = Shape(shape)
        mobility = Mobility(mobility)
    except ValueError as exc:
        raise UnknownDomainValue(str(exc)) from None
    if shape.value not in model.domains.get("shape", []):
        raise UnknownDomainValue(f"shape {shape.value!r} not in the trained model")
    if task not in model.domains.get("task", []):
        raise UnknownDomainValue(f"task {task!r} not in the trained model")
    if mobility.value not in model.domains.get("mobility", []):
        raise UnknownDomainValue(
            f"mobility {mobility.value!r} not in the trained model"
        )

    evidence = {}
    for value in model.domains["shape"]:
        evidence[(P_SHAPE, (OBJ_CONST, value))] = value == shape.value
    for value in model.domains["task"]:
        evidence[(P_TASK, (OBJ_CONST, value))] = value == task
    for value in model.domains["mobility"]:
        evidence[(P_MOBILITY, (QUERY_CONST, value))] = value == mobility.value

    world = mln.map_infer(model, evidence)

    config_wins = _winning_values(world, P_CONFIG, model.domains["config"])
    grasp_wins = _winning_values(world, P_GRASP, model.domains["grasp"])
    if not config_wins:
        raise NoWinningAtom(
            f"no configuration class wins for shape={shape.value} task={task} "
            f"mobility={mobility.value}"
        )
    if not grasp_wins:
        raise NoWinningAtom(
            f"no grasp region wins for shape={shape.value} task={task} "
            f"mobility={mobility.value}"
        )
    config = sorted(config_wins)[0]
    grasp_id = sorted(grasp_wins)[0]

    config_shape, method = config_class_parts(config)
    if config_shape is not shape:
        raise NoWinningAtom(
            f"winning configuration {config} does not match queried shape "
            f"{shape.value}"
        )
    prototype = trained.prototypes.get(shape, mobility, method)
    return InferenceResult(
        shape=shape,
        task=task,
        mobility=mobility,
        method=method,
        config=config,
        grasp_id=grasp_id,
        pose=prototype.pose,
    )


# ---------------------------------------------------------------------------
# Evaluation
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class EvalRow:
    shape: str  # shape value or "overall"
    instances: int
    pose_accuracy: float
    grasp_accuracy: float
    average: float

    def to_dict(self) -> dict:
        return {
            "shape": self.shape,
            "instances": self.instances,
            "pose_accuracy": self.pose_accuracy,
            "grasp_accuracy": self.grasp_accuracy,
            "average": self.average,
        }


@dataclass
class EvalReport:
    rows: list
    overall: EvalRow

    def to_dict(self) -> dict:
        return {
            "rows": [r.to_dict() for r in self.rows],
            "overall": self.overall.to_dict(),
        }


def evaluate(
    trained: TrainedModel,
    test_instances,
    pose_tol_m: float = POSE_TOLERANCE_M,
    angle_tol_deg: float = ANGLE_TOLERANCE_DEG,
) -> EvalReport:
    """Score inference against held-out instances.

    A pose is correct when within ``pose_tol_m`` and ``angle_tol_deg`` of the
    instance's target; a grasp is correct on exact id match. Inference
    failures count as incorrect on both measures. Rows are per shape plus an
    instance-weighted overall row; ``average`` is the mean of the two
    accuracies.
    """
    cache: dict = {}
    per_shape: "OrderedDict[Shape, list]" = OrderedDict()
    for inst in test_instances:
        key = (inst.shape, inst.task, inst.mobility)
        if key not in cache:
            try:
                cache[key] = infer_handover(trained, *key)
            except (UncoveredKey, UnknownDomainValue, NoWinningAtom):
                cache[key] = None
        result = cache[key]
        pose_ok = grasp_ok = False
        if result is not None:
            pose_ok = (
                point_distance(result.pose, inst.target_pose) <= pose_tol_m
                and angular_distance(result.pose, inst.target_pose) <= angle_tol_deg
            )
            grasp_ok = result.grasp_id == inst.target_robot_grasp
        per_shape.setdefault(inst.shape, []).append((pose_ok, grasp_ok))

    if not per_shape:
        raise ValueError("evaluation requires at least one instance")

    rows = []
    total = pose_hits = grasp_hits = 0
    for shape in sorted(per_shape, key=lambda s: s.value):
        outcomes = per_shape[shape]
        n = len(outcomes)
        p = sum(1 for ok, _ in outcomes if ok)
        g = sum(1 for _, ok in outcomes if ok)
        total += n
        pose_hits += p
        grasp_hits += g
        rows.append(
            EvalRow(
                shape=shape.value,
                instances=n,
                pose_accuracy=p / n,
                grasp_accuracy=g / n,
                average=(p / n + g / n) / 2.0,
            )
        )
    overall = EvalRow(
        shape="overall",
        instances=total,
        pose_accuracy=pose_hits / total,
        grasp_accuracy=grasp_hits / total,
        average=(pose_hits / total + grasp_hits / total) / 2.0,
    )
    return EvalReport(rows=rows, overall=overall)


# ---------------------------------------------------------------------------
# End-to-end planning with safety gates
# ---------------------------------------------------------------------------


@dataclass(frozen=True)
class GateCheck:
    name: str
    distance: float
    lower: float | None
    upper: float | None
    passed: bool

    def to_dict(self) -> dict:
        return {
            "name": self.name,
            "distance": self.distance,
            "lower": self.lower,
            "upper": self.upper,
            "passed": self.passed,
        }


@dataclass
class PlanReport:
    solution: object
    gates: list

    def to_dict(self) -> dict:
        return {
            "solution": self.solution.to_dict(),
            "gates": [g.to_dict() for g in self.gates],
        }


def safety_gate_trace(
    scene: Scene,
    object_pose: Pose,
    ee_pose: Pose,
    reach_min: float = 0.35,
    reach_max: float = 1.10,
) -> list:
    """Evaluate every transfer safety gate for a proposed handover.

    Gates, in order: object clear of the hand, object clear of the face, the
    grasp within the robot's radial reach band, the end effector clear of the
    hand, and the advised human grasp within the receiver's reach.
    """
    hand = scene.human.hand
    face = scene.human.face
    checks = []

    d = point_distance(object_pose, hand)
    checks.append(GateCheck("object_to_hand", d, SAFETY_CLEARANCE_M, None,
                            d >= SAFETY_CLEARANCE_M))
    d = point_distance(object_pose, face)
    checks.append(GateCheck("object_to_face", d, SAFETY_CLEARANCE_M, None,
                            d >= SAFETY_CLEARANCE_M))
    d = point_distance(ee_pose, scene.robot_base)
    checks.append(GateCheck("robot_reach", d, reach_min, reach_max,
                            reach_min <= d <= reach_max))
    d = point_distance(ee_pose, hand)
    checks.append(GateCheck("ee_to_hand", d, SAFETY_CLEARANCE_M, None,
                            d >= SAFETY_CLEARANCE_M))
    _, advised_world = advised_human_grasp(scene.object, object_pose, hand)
    d = point_distance(advised_world, hand)
    checks.append(GateCheck("hand_to_advised_grasp", d, None, REACH_LIMIT_M,
                            d <= REACH_LIMIT_M))
    return checks


def _verify_gates(scene: Scene, object_pose: Pose, ee_pose: Pose,
                  reach: ReachModel) -> list:
    """Run the gate trace and raise on the first violated gate."""
    reach_min = getattr(reach, "min_reach", 0.0)
    reach_max = getattr(reach, "max_reach", float("inf"))
    gates = safety_gate_trace(scene, object_pose, ee_pose, reach_min, reach_max)
    for gate in gates:
        if not gate.passed:
            raise SafetyGateFailed(
                gate.name,
                gate.distance,
                f"safety gate {gate.name} failed: distance {gate.distance:.4f} m "
                f"outside [{gate.lower}, {gate.upper}]",
            )
    return gates


def plan_and_verify(
    scene: Scene,
    reach: ReachModel | None = None,
    cfg: SamplerConfig | None = None,
) -> PlanReport:
    """Plan a handover with the workspace optimizer and verify every safety
    gate on the result.

    Raises SafetyGateFailed naming the first violated gate; the report keeps
    the full ordered trace for inspection.
    """
    reach = reach if reach is not None else RadialBandReach()
    solution = optimize_handover(scene, reach, cfg)
    gates = _verify_gates(scene, solution.object_pose, solution.ee_pose, reach)
    return PlanReport(solution=solution, gates=gates)


@dataclass(frozen=True)
class ExecutedHandover:
    """The transfer configuration a model-driven execution delivered."""

    robot_grasp_id: str
    object_pose: Pose
    ee_pose: Pose
    advised_grasp_id: str
    method: MethodId
    config: str

    def to_dict(self) -> dict:
        return {
            "robot_grasp": self.robot_grasp_id,
            "object_pose": self.object_pose.to_dict(),
            "ee_pose": self.ee_pose.to_dict(),
            "advised_human_grasp": self.advised_grasp_id,
            "method": self.method.value,
            "config": self.config,
        }


def run_end_to_end(
    scene: Scene,
    model: TrainedModel,
    task: str | None = None,
    mobility: Mobility | str | None = None,
    reach: ReachModel | None = None,
) -> PlanReport:
    """Execute a learned handover on a scene and verify every safety gate.

    The transfer pose and grasp region come from relational inference over
    (object shape, task, receiver mobility) — the task and mobility default
    to the scene's own fields. The end-effector target is the predicted grasp
    expressed in the world frame. The delivery is accepted only when the full
    gate sequence passes: object clear of hand and face, grasp inside the
    robot's reach band, end effector clear of the hand, and the advised human
    grasp within the receiver's reach. Raises SafetyGateFailed naming the
    first violated gate and its measured distance; inference errors
    (UnknownDomainValue, NoWinningAtom, UncoveredKey) propagate.
    """
    reach = reach if reach is not None else RadialBandReach()
    task = task if task is not None else scene.object.task
    mobility = mobility if mobility is not None else scene.human.mobility
    decision = infer_handover(model, scene.object.shape, task, mobility)
    grasp = next(
        (g for g in scene.object.robot_candidates() if g.id == decision.grasp_id),
        None,
    )
    if grasp is None:
        raise UncoveredKey(
            f"object {scene.object.id!r} has no robot grasp candidate "
            f"{decision.grasp_id!r}"
        )
    object_pose = decision.pose
    ee_pose = transform_pose(object_pose, grasp.pose)
    advised, _ = advised_human_grasp(scene.object, object_pose, scene.human.hand)
    gates = _verify_gates(scene, object_pose, ee_pose, reach)
    executed = ExecutedHandover(
        robot_grasp_id=grasp.id,
        object_pose=object_pose,
        ee_pose=ee_pose,
        advised_grasp_id=advised.id,
        method=decision.method,
        config=decision.config,
    )
    return PlanReport(solution=executed, gates=gates)


# ---------------------------------------------------------------------------
# Grasp distance report
# ---------------------------------------------------------------------------


def _manipulation_grasp(obj: ObjectModel):
    """The affordance-region grasp a user takes for the object's task
    (nearest the object center; ties to the smaller id)."""
    return min(
        obj.human_grasps(),
        key=lambda g: (float(np.linalg.norm(np.asarray(g.pose.position))), g.id),
    )


def grasp_distance_report(object_ids=None) -> dict:
    """Compare manipulation vs handover grasp distances from object centers.

    For every object, measures how far (in cm) the task-use grasp and the
    handover grasp sit from the object center, then rank-sum tests the two
    samples per shape. Shapes whose two samples are identical (e.g. spheres,
    where every surface grasp is one radius out) are reported with p = 1.
    """
    library = load_library()
    if object_ids is None:
        object_ids = library.ids()
    rows = []
    by_shape: "OrderedDict[Shape, tuple[list, list]]" = OrderedDict()
    for oid in object_ids:
        obj = library.get(oid)
        manip = _manipulation_grasp(obj)
        hand = select_robot_grasp(obj)
        manip_cm = float(np.linalg.norm(np.asarray(manip.pose.position))) * 100.0
        hand_cm = float(np.linalg.norm(np.asarray(hand.pose.position))) * 100.0
        rows.append(
            {
                "object_id": oid,
                "shape": obj.shape.value,
                "manipulation_grasp": manip.id,
                "manipulation_cm": manip_cm,
                "handover_grasp": hand.id,
                "handover_cm": hand_cm,
            }
        )
        manips, hands = by_shape.setdefault(obj.shape, ([], []))
        manips.append(manip_cm)
        hands.append(hand_cm)

    stats = []
    for shape in sorted(by_shape, key=lambda s: s.value):
        manips, hands = by_shape[shape]
        result: RankSumResult = rank_sum(manips, hands)
        stats.append(
            {
                "shape": shape.value,
                "n": len(manips),
                "manipulation_mean_cm": float(np.mean(manips)),
                "handover_mean_cm": float(np.mean(hands)),
                "statistic": result.statistic,
                "p_value": result.p_value,
                "method": result.method,
            }
        )
    return {"rows": rows, "by_shape": stats}
