"""Preference-study records and synthetic handover corpus generation.

The generator reproduces a user-study method-preference distribution that is
strongly stratified by arm mobility: users with full mobility prefer a
mid-distance transfer (method_b), while users with restricted mobility prefer
the mobility-adaptive placement (adaptive). Study records carry per-method
ratings; the synthetic corpus extends the study objects with additional
household objects whose preferred method is allocated so that, within every
mobility level, the method frequencies match the study distribution to within
two percentage points.

Quotas are allocated deterministically (largest-remainder apportionment plus
a best-fit unit assignment) instead of being sampled, so the per-level method
frequencies of a generated corpus are reproducible and verifiable exactly.
"""
from __future__ import annotations

import math
from collections import Counter, OrderedDict
from dataclasses import dataclass, field

import numpy as np

from .effort import MethodId, method_transfer_point
from .geometry import Pose, quat_from_axis_angle, quat_multiply
from .library import ObjectLibrary, canonical_scene, load_library
from .optimizer import RadialBandReach, SamplerConfig, optimize_handover, select_robot_grasp
from .scene import MOBILITY_ORDER, Mobility, ObjectModel, Shape
from . import csvio

__all__ = [
    "CountMismatch",
    "OverlapError",
    "HandoverInstance",
    "PreferenceRecord",
    "METHOD_ORDER",
    "PARTICIPANTS_PER_LEVEL",
    "FREQUENCY_TOLERANCE",
    "table1_distribution",
    "largest_remainder",
    "generate_study_records",
    "synthesize",
    "make_corpus",
    "split",
    "write_corpus_csv",
    "read_corpus_csv",
    "write_study_csv",
    "read_study_csv",
]


class CountMismatch(ValueError):
    """A generated collection does not have the expected cardinality."""


class OverlapError(ValueError):
    """Train and test object sets share at least one object id."""


METHOD_ORDER: tuple[MethodId, ...] = (
    MethodId.METHOD_A,
    MethodId.METHOD_B,
    MethodId.ADAPTIVE,
)

# Fraction of participants at each mobility level who preferred each transfer
# method (columns follow METHOD_ORDER).
_METHOD_PREFERENCE: dict[Mobility, tuple[float, float, float]] = {
    Mobility.HEALTHY: (0.235, 0.737, 0.028),
    Mobility.HIGH_MOBILITY: (0.231, 0.654, 0.115),
    Mobility.LOW_MOBILITY: (0.071, 0.286, 0.643),
    Mobility.LOW: (0.032, 0.161, 0.807),
}

# Study cohort sizes per mobility level.
PARTICIPANTS_PER_LEVEL: dict[Mobility, int] = {
    Mobility.HEALTHY: 179,
    Mobility.HIGH_MOBILITY: 27,
    Mobility.LOW_MOBILITY: 18,
    Mobility.LOW: 35,
}

_LEVEL_ORDER = tuple(MOBILITY_ORDER)

# Objects whose study cells may be adjusted when pinning per-level method
# totals. These are the study objects without a same-shape-and-task test
# object, so adjusting them never disturbs a cell that anchors the majority
# vote of a test object's relational context.
_REPAIR_SAFE = ("book", "apple")

FREQUENCY_TOLERANCE = 0.02  # max |realized - target| per method fraction


def table1_distribution(level: Mobility | str) -> dict[MethodId, float]:
    """Target method-preference fractions for one mobility level."""
    level = Mobility(level)
    fractions = _METHOD_PREFERENCE[level]
    return dict(zip(METHOD_ORDER, fractions))


def largest_remainder(total: int, weights) -> list[int]:
    """Apportion ``total`` integer seats proportionally to ``weights``.

    Floors the exact shares, then hands remaining seats to the largest
    fractional remainders (ties broken by lower index). Zero/negative weight
    vectors are rejected.
    """
    weights = [float(w) for w in weights]
    if total < 0:
        raise ValueError("total must be non-negative")
    if not weights or any(w < 0 for w in weights) or sum(weights) <= 0:
        raise ValueError("weights must be non-negative and sum to a positive value")
    scale = total / sum(weights)
    shares = [w * scale for w in weights]
    counts = [int(math.floor(s)) for s in shares]
    remainders = sorted(
        range(len(weights)), key=lambda i: (-(shares[i] - counts[i]), i)
    )
    for i in remainders[: total - sum(counts)]:
        counts[i] += 1
    return counts


@dataclass(frozen=True)
class PreferenceRecord:
    """One study participant's method preference and ratings for one object."""

    participant_id: str
    mobility: Mobility
    object_id: str
    preferred_method: MethodId
    # ratings[method_value][measure] -> 1..5
    ratings: dict = field(compare=False)


@dataclass(frozen=True)
class HandoverInstance:
    """One labelled handover: an object, a context, and the chosen outcome."""

    instance_id: str
    source: str  # "study" or "synthetic"
    object_id: str
    shape: Shape
    task: str
    mobility: Mobility
    method: MethodId
    target_pose: Pose
    target_robot_grasp: str


# ---------------------------------------------------------------------------
# Study records
# ---------------------------------------------------------------------------


def _round_robin_counts(total: int, n_objects: int) -> list[int]:
    base = total // n_objects
    extra = total % n_objects
    return [base + (1 if i < extra else 0) for i in range(n_objects)]


def _modal_method(level: Mobility) -> MethodId:
    fractions = _METHOD_PREFERENCE[level]
    return METHOD_ORDER[max(range(3), key=lambda i: (fractions[i], -i))]


def _repair_cells(
    cells: "OrderedDict[str, list[int]]", level: Mobility, level_total: int
) -> None:
    """Adjust per-object method cells so level marginals hit the exact
    largest-remainder totals, touching only cells that can legally move.

    Repair-safe objects absorb adjustments freely; any other object's cell
    may only move if its modal-method count keeps a strict majority.
    """
    target = largest_remainder(level_total, _METHOD_PREFERENCE[level])
    modal_idx = METHOD_ORDER.index(_modal_method(level))
    priority = [o for o in _REPAIR_SAFE if o in cells]
    priority += [o for o in cells if o not in priority]

    def marginal() -> list[int]:
        return [sum(c[i] for c in cells.values()) for i in range(3)]

    for _ in range(64):
        delta = [t - m for t, m in zip(target, marginal())]
        if all(d == 0 for d in delta):
            return
        over = min(range(3), key=lambda i: (delta[i], i))
        under = max(range(3), key=lambda i: (delta[i], -i))
        moved = False
        for obj in priority:
            cell = cells[obj]
            if cell[over] <= 0:
                continue
            if obj not in _REPAIR_SAFE:
                trial = list(cell)
                trial[over] -= 1
                trial[under] += 1
                if 2 * trial[modal_idx] <= sum(trial):
                    continue
            cell[over] -= 1
            cell[under] += 1
            moved = True
            break
        if not moved:  # pragma: no cover - construction guarantees a move
            raise RuntimeError("could not pin study marginals to targets")
    raise RuntimeError("study marginal repair did not converge")  # pragma: no cover


def _rate(rng: np.random.Generator, preferred: bool) -> dict[str, int]:
    """Five-point ratings; the preferred method always scores 4-5, others 2-3."""
    if preferred:
        return {
            "safety": 4 + int(rng.random() < 0.7),
            "comfort": 4 + int(rng.random() < 0.7),
            "appropriateness": 4 + int(rng.random() < 0.7),
        }
    return {
        "safety": 2 + int(rng.integers(0, 2)),
        "comfort": 2 + int(rng.integers(0, 2)),
        "appropriateness": 2 + int(rng.integers(0, 2)),
    }


def generate_study_records(seed: int = 42) -> list[PreferenceRecord]:
    """Deterministic study cohort: 259 participants, one object each.

    Participants are blocked by mobility level, assigned study objects round
    robin, and given a preferred method so that each (object, level) cell
    follows the level's preference distribution and each level's marginal
    method counts equal the exact largest-remainder apportionment of the
    cohort. Ratings always score the preferred method strictly higher.
    """
    library = load_library()
    study_objects = library.study_ids()
    records: list[PreferenceRecord] = []
    participant_no = 0

    for level in _LEVEL_ORDER:
        n = PARTICIPANTS_PER_LEVEL[level]
        object_counts = _round_robin_counts(n, len(study_objects))
        cells: "OrderedDict[str, list[int]]" = OrderedDict(
            (obj, largest_remainder(count, _METHOD_PREFERENCE[level]))
            for obj, count in zip(study_objects, object_counts)
        )
        _repair_cells(cells, level, n)

        # Safety net: every non-repair-safe cell keeps a strict modal majority.
        modal_idx = METHOD_ORDER.index(_modal_method(level))
        for obj, cell in cells.items():
            if obj not in _REPAIR_SAFE and 2 * cell[modal_idx] <= sum(cell):
                raise RuntimeError(
                    f"study cell {obj}/{level.value} lost its modal majority"
                )

        for obj in study_objects:
            counts = cells[obj]
            methods = [
                method
                for method, count in zip(METHOD_ORDER, counts)
                for _ in range(count)
            ]
            for method in methods:
                participant_no += 1
                pid = f"p{participant_no:03d}"
                rng = np.random.default_rng(
                    np.random.SeedSequence([seed, 1000, participant_no])
                )
                ratings = {
                    m.value: _rate(rng, m is method) for m in METHOD_ORDER
                }
                records.append(
                    PreferenceRecord(
                        participant_id=pid,
                        mobility=level,
                        object_id=obj,
                        preferred_method=method,
                        ratings=ratings,
                    )
                )

    if len(records) != sum(PARTICIPANTS_PER_LEVEL.values()):  # pragma: no cover
        raise CountMismatch("study cohort size drifted from participant totals")
    return records


# ---------------------------------------------------------------------------
# Method allocation for the synthetic corpus
# ---------------------------------------------------------------------------


def _allocation_units(library: ObjectLibrary, object_ids: list[str]):
    """Group objects into indivisible allocation units.

    Objects sharing (shape, task) must take the same method within a level so
    the relational learner sees a consistent majority for that context. A
    group containing a test-split object whose (shape, task) also appears in
    the study set is *forced* to the level's modal method — its context is
    already anchored by study evidence.
    """
    study_contexts = {
        (library.get(oid).shape, library.get(oid).task)
        for oid in library.study_ids()
    }
    groups: "OrderedDict[tuple, list[str]]" = OrderedDict()
    for oid in object_ids:
        obj = library.get(oid)
        groups.setdefault((obj.shape, obj.task), []).append(oid)

    units = []  # (kind, [oids]) with kind in {"forced", "free"}
    for key, members in groups.items():
        has_test = any(library.role(oid) == "test" for oid in members)
        if has_test and key in study_contexts:
            units.append(("forced", members))
        elif has_test:
            units.append(("free", members))
        else:
            for oid in members:
                units.append(("free", [oid]))
    return units


def _allocate_methods(
    library: ObjectLibrary,
    object_ids: list[str],
    level_counts: dict[tuple[str, Mobility], int],
) -> dict[tuple[str, Mobility], MethodId]:
    """Assign one preferred method per (object, level).

    Per level, forced units take the modal method; the remaining units are
    assigned to the two minority methods by a best-fit greedy that only
    accepts a unit if it strictly shrinks the gap to the method's
    largest-remainder target. Everything left goes to the modal method. The
    realized frequencies are checked against FREQUENCY_TOLERANCE.
    """
    units = _allocation_units(library, object_ids)
    assignment: dict[tuple[str, Mobility], MethodId] = {}

    for level in _LEVEL_ORDER:
        total = sum(level_counts[(oid, level)] for oid in object_ids)
        if total == 0:
            continue
        targets = dict(
            zip(METHOD_ORDER, largest_remainder(total, _METHOD_PREFERENCE[level]))
        )
        modal = _modal_method(level)

        def unit_size(unit) -> int:
            return sum(level_counts[(oid, level)] for oid in unit[1])

        free = [u for u in units if u[0] == "free"]
        realized: Counter = Counter()
        for kind, members in units:
            if kind == "forced":
                for oid in members:
                    assignment[(oid, level)] = modal
                realized[modal] += sum(level_counts[(oid, level)] for oid in members)

        minority = sorted(
            (m for m in METHOD_ORDER if m is not modal),
            key=lambda m: (targets[m], m.value),
        )
        for method in minority:
            gap = targets[method]
            while free:
                best = min(
                    range(len(free)),
                    key=lambda i: (abs(gap - unit_size(free[i])), i),
                )
                size = unit_size(free[best])
                if abs(gap - size) >= abs(gap):
                    break  # no unit strictly improves the fit
                unit = free.pop(best)
                for oid in unit[1]:
                    assignment[(oid, level)] = method
                realized[method] += size
                gap -= size
        for kind, members in free:
            for oid in members:
                assignment[(oid, level)] = modal
            realized[modal] += sum(level_counts[(oid, level)] for oid in members)

        for method in METHOD_ORDER:
            target_frac = table1_distribution(level)[method]
            realized_frac = realized[method] / total
            if abs(realized_frac - target_frac) > FREQUENCY_TOLERANCE + 1e-9:
                raise RuntimeError(
                    "method allocation missed the target distribution: "
                    f"{level.value}/{method.value} realized {realized_frac:.4f} "
                    f"vs target {target_frac:.4f}"
                )
    return assignment


# ---------------------------------------------------------------------------
# Outcome construction (target pose + robot grasp per object and method)
# ---------------------------------------------------------------------------

_OUTCOME_CACHE: dict = {}


def _base_outcome(
    obj: ObjectModel, method: MethodId, setup: int, sampler_seed: int
) -> tuple[Pose, str]:
    """Unjittered transfer pose and robot grasp for (object shape, method).

    Fixed-point methods place the object at the method's transfer point with
    the canonical orientation; the adaptive method takes the workspace
    optimizer's solution. Results are cached per shape because canonical
    scenes for one setup share their geometry and per-shape grasp layout.
    """
    key = (obj.shape, method, setup, sampler_seed)
    if key in _OUTCOME_CACHE:
        return _OUTCOME_CACHE[key]

    scene = canonical_scene(obj, Mobility.HEALTHY, setup=setup)
    if method is MethodId.ADAPTIVE:
        solution = optimize_handover(
            scene, reach=RadialBandReach(), cfg=SamplerConfig(seed=sampler_seed)
        )
        outcome = (solution.object_pose, solution.robot_grasp_id)
    else:
        point = method_transfer_point(method, scene)
        pose = Pose(position=point, orientation=(1.0, 0.0, 0.0, 0.0))
        if method is MethodId.METHOD_A:
            # Naive baseline: grabs the first listed robot-side candidate.
            grasp_id = obj.robot_candidates()[0].id
        else:
            # Mid-distance baseline keeps the considerate grasp choice.
            grasp_id = select_robot_grasp(obj).id
        outcome = (pose, grasp_id)

    _OUTCOME_CACHE[key] = outcome
    return outcome


def _jitter_pose(
    base: Pose,
    rng: np.random.Generator,
    jitter_pos: float,
    jitter_ang_deg: float,
) -> Pose:
    offset = rng.normal(0.0, jitter_pos, size=3)
    angle = math.radians(rng.normal(0.0, jitter_ang_deg))
    axis = rng.normal(0.0, 1.0, size=3)
    norm = float(np.linalg.norm(axis))
    axis = axis / norm if norm > 1e-12 else np.array([0.0, 1.0, 0.0])
    delta = quat_from_axis_angle(axis, angle)
    return Pose(
        position=np.asarray(base.position, dtype=float) + offset,
        orientation=quat_multiply(delta, base.orientation),
    )


# ---------------------------------------------------------------------------
# Corpus generation
# ---------------------------------------------------------------------------


def synthesize(
    objects: list[str] | None = None,
    total: int = 1398,
    counts_per_level: dict | None = None,
    seed: int = 42,
    jitter_pos: float = 0.002,
    jitter_ang_deg: float = 0.5,
    setup: int = 0,
) -> list[HandoverInstance]:
    """Generate the synthetic portion of the corpus.

    Instances are spread evenly over the non-study objects, split across
    mobility levels proportionally to the study cohort sizes, and assigned
    methods by the per-level quota allocator. Each instance's target pose is
    the method's base outcome with small Gaussian positional/angular jitter.
    """
    library = load_library()
    if objects is None:
        objects = library.ids("train") + library.ids("test")
    if not objects:
        raise ValueError("no objects to synthesize over")
    seen = set()
    for oid in objects:
        library.get(oid)  # raises KeyError on unknown ids
        if oid in seen:
            raise ValueError(f"duplicate object id {oid!r}")
        seen.add(oid)

    if counts_per_level is None:
        counts_per_level = PARTICIPANTS_PER_LEVEL
    level_weights = [float(counts_per_level[level]) for level in _LEVEL_ORDER]

    per_object = largest_remainder(total, [1.0] * len(objects))
    level_counts: dict[tuple[str, Mobility], int] = {}
    for oid, obj_total in zip(objects, per_object):
        counts = largest_remainder(obj_total, level_weights)
        for level, count in zip(_LEVEL_ORDER, counts):
            level_counts[(oid, level)] = count

    assignment = _allocate_methods(library, objects, level_counts)

    instances: list[HandoverInstance] = []
    index = 0
    for oid in objects:
        obj = library.get(oid)
        for level in _LEVEL_ORDER:
            count = level_counts[(oid, level)]
            if count == 0:
                continue
            method = assignment[(oid, level)]
            base_pose, grasp_id = _base_outcome(obj, method, setup, seed)
            for _ in range(count):
                index += 1
                rng = np.random.default_rng(np.random.SeedSequence([seed, index, 0]))
                pose = _jitter_pose(base_pose, rng, jitter_pos, jitter_ang_deg)
                instances.append(
                    HandoverInstance(
                        instance_id=f"syn-{index:05d}",
                        source="synthetic",
                        object_id=oid,
                        shape=obj.shape,
                        task=obj.task,
                        mobility=level,
                        method=method,
                        target_pose=pose,
                        target_robot_grasp=grasp_id,
                    )
                )

    if len(instances) != total:
        raise CountMismatch(
            f"synthesized {len(instances)} instances, expected {total}"
        )
    return instances


def make_corpus(
    study_records: list[PreferenceRecord] | None = None,
    synthetic: list[HandoverInstance] | None = None,
    seed: int = 42,
    jitter_pos: float = 0.002,
    jitter_ang_deg: float = 0.5,
    setup: int = 0,
    expected_study: int | None = 259,
    expected_synthetic: int | None = 1398,
) -> list[HandoverInstance]:
    """Combine study-derived and synthetic instances into the full corpus.

    Study records contribute one instance each (the participant's preferred
    method applied to their study object); counts are checked against the
    expected totals before merging.
    """
    library = load_library()
    if study_records is None:
        study_records = generate_study_records(seed=seed)
    if synthetic is None:
        synthetic = synthesize(
            seed=seed,
            jitter_pos=jitter_pos,
            jitter_ang_deg=jitter_ang_deg,
            setup=setup,
        )

    if expected_study is not None and len(study_records) != expected_study:
        raise CountMismatch(
            f"study records: got {len(study_records)}, expected {expected_study}"
        )
    if expected_synthetic is not None and len(synthetic) != expected_synthetic:
        raise CountMismatch(
            f"synthetic instances: got {len(synthetic)}, expected {expected_synthetic}"
        )

    instances: list[HandoverInstance] = []
    for idx, record in enumerate(study_records, start=1):
        obj = library.get(record.object_id)
        base_pose, grasp_id = _base_outcome(
            obj, record.preferred_method, setup, seed
        )
        rng = np.random.default_rng(np.random.SeedSequence([seed, 500000, idx]))
        pose = _jitter_pose(base_pose, rng, jitter_pos, jitter_ang_deg)
        instances.append(
            HandoverInstance(
                instance_id=f"study-{record.participant_id}",
                source="study",
                object_id=record.object_id,
                shape=obj.shape,
                task=obj.task,
                mobility=record.mobility,
                method=record.preferred_method,
                target_pose=pose,
                target_robot_grasp=grasp_id,
            )
        )
    instances.extend(synthetic)
    return instances


def split(
    corpus: list[HandoverInstance],
    train_ids: list[str] | None = None,
    test_ids: list[str] | None = None,
) -> tuple[list[HandoverInstance], list[HandoverInstance]]:
    """Split a corpus by object identity into train and test instance lists.

    Defaults to the library's roles: study + train objects form the training
    set, test objects the evaluation set. Overlapping id sets are an error,
    as is an instance whose object belongs to neither side.
    """
    library = load_library()
    if train_ids is None:
        train_ids = library.train_ids()
    if test_ids is None:
        test_ids = library.test_ids()
    train_set, test_set = set(train_ids), set(test_ids)
    shared = train_set & test_set
    if shared:
        raise OverlapError(f"objects in both splits: {sorted(shared)}")
    train, test = [], []
    for inst in corpus:
        if inst.object_id in train_set:
            train.append(inst)
        elif inst.object_id in test_set:
            test.append(inst)
        else:
            raise ValueError(
                f"instance {inst.instance_id} object {inst.object_id!r} "
                "is in neither split"
            )
    return train, test


# ---------------------------------------------------------------------------
# CSV serialization
# ---------------------------------------------------------------------------

CORPUS_FIELDS = [
    "instance_id",
    "source",
    "object_id",
    "shape",
    "task",
    "mobility",
    "method",
    "px",
    "py",
    "pz",
    "qw",
    "qx",
    "qy",
    "qz",
    "robot_grasp",
]

STUDY_FIELDS = [
    "participant_id",
    "mobility",
    "object_id",
    "method",
    "preferred",
    "safety",
    "comfort",
    "appropriateness",
]


def write_corpus_csv(
    instances: list[HandoverInstance],
    path,
    seed: int | None = None,
    timestamp: bool = True,
) -> None:
    rows = []
    for inst in instances:
        px, py, pz = (csvio.fmt(v) for v in inst.target_pose.position)
        qw, qx, qy, qz = (csvio.fmt(v) for v in inst.target_pose.orientation)
        rows.append(
            {
                "instance_id": inst.instance_id,
                "source": inst.source,
                "object_id": inst.object_id,
                "shape": inst.shape.value,
                "task": inst.task,
                "mobility": inst.mobility.value,
                "method": inst.method.value,
                "px": px,
                "py": py,
                "pz": pz,
                "qw": qw,
                "qx": qx,
                "qy": qy,
                "qz": qz,
                "robot_grasp": inst.target_robot_grasp,
            }
        )
    csvio.write_rows(path, CORPUS_FIELDS, rows, seed=seed, timestamp=timestamp)


def read_corpus_csv(path) -> list[HandoverInstance]:
    instances = []
    for row in csvio.read_rows(path):
        pose = Pose(
            position=(float(row["px"]), float(row["py"]), float(row["pz"])),
            orientation=(
                float(row["qw"]),
                float(row["qx"]),
                float(row["qy"]),
                float(row["qz"]),
            ),
        )
        instances.append(
            HandoverInstance(
                instance_id=row["instance_id"],
                source=row["source"],
                object_id=row["object_id"],
                shape=Shape(row["shape"]),
                task=row["task"],
                mobility=Mobility(row["mobility"]),
                method=MethodId(row["method"]),
                target_pose=pose,
                target_robot_grasp=row["robot_grasp"],
            )
        )
    return instances


def write_study_csv(
    records: list[PreferenceRecord],
    path,
    seed: int | None = None,
    timestamp: bool = True,
) -> None:
    rows = []
    for rec in records:
        for method in METHOD_ORDER:
            ratings = rec.ratings[method.value]
            rows.append(
                {
                    "participant_id": rec.participant_id,
                    "mobility": rec.mobility.value,
                    "object_id": rec.object_id,
                    "method": method.value,
                    "preferred": "1" if method is rec.preferred_method else "0",
                    "safety": str(ratings["safety"]),
                    "comfort": str(ratings["comfort"]),
                    "appropriateness": str(ratings["appropriateness"]),
                }
            )
    csvio.write_rows(path, STUDY_FIELDS, rows, seed=seed, timestamp=timestamp)


def read_study_csv(path) -> list[PreferenceRecord]:
    grouped: "OrderedDict[tuple[str, str], dict]" = OrderedDict()
    for row in csvio.read_rows(path):
        key = (row["participant_id"], row["object_id"])
        entry = grouped.setdefault(
            key,
            {"mobility": Mobility(row["mobility"]), "preferred": None, "ratings": {}},
        )
        entry["ratings"][row["method"]] = {
            "safety": int(row["safety"]),
            "comfort": int(row["comfort"]),
            "appropriateness": int(row["appropriateness"]),
        }
        if row["preferred"] == "1":
            entry["preferred"] = MethodId(row["method"])
    records = []
    for (pid, oid), entry in grouped.items():
        if entry["preferred"] is None:
            raise ValueError(f"participant {pid} has no preferred method for {oid}")
        records.append(
            PreferenceRecord(
                participant_id=pid,
                mobility=entry["mobility"],
                object_id=oid,
                preferred_method=entry["preferred"],
                ratings=entry["ratings"],
            )
        )
    return records
