"""Affordance-aware robot-to-human handover planning and learning toolkit.

Plans object transfer poses over a voxelized workspace with explicit safety,
appropriateness, and reachability costs; compares receiver arm effort across
transfer strategies; and learns relational (context -> configuration/grasp)
preferences from a handover corpus with a clausal Markov-network learner.
"""

from .costs import (
    REACH_LIMIT_M,
    SAFETY_CLEARANCE_M,
    CostBreakdown,
    NoHumanGrasp,
    advised_human_grasp,
    appropriateness,
    reachability,
    safety,
)
from .effort import (
    ArmModel,
    EffortTable,
    LimitViolation,
    MethodId,
    Unreachable,
    compare_methods,
    joint_effort,
    method_transfer_point,
    solve_arm,
)
from .geometry import (
    OutOfBounds,
    Pose,
    VoxelMap,
    angular_distance,
    point_distance,
    transform_pose,
    voxel_center,
    voxel_index,
    voxels_by_hand_proximity,
)
from .library import SCENE_GEOMETRIES, build_effort_setups, canonical_scene, load_library
from .optimizer import (
    HandoverSolution,
    NoFeasibleHandover,
    NoRobotGrasp,
    RadialBandReach,
    ReachModel,
    SamplerConfig,
    brute_force_handover,
    optimize_handover,
    sample_object_poses,
    select_robot_grasp,
)
from .pipeline import (
    EvalReport,
    InferenceResult,
    NoWinningAtom,
    PlanReport,
    Prototype,
    PrototypeTable,
    SafetyGateFailed,
    TrainedModel,
    UncoveredKey,
    UnknownDomainValue,
    build_prototypes,
    build_relational_model,
    corpus_to_worlds,
    evaluate,
    grasp_distance_report,
    infer_handover,
    plan_and_verify,
    run_end_to_end,
    train,
)
from .scene import (
    GraspCandidate,
    HumanState,
    Mobility,
    ObjectModel,
    ParseError,
    Scene,
    Shape,
    ValidationError,
    load_scene,
    save_scene,
    scene_from_dict,
)
from .dataset import (
    CountMismatch,
    HandoverInstance,
    OverlapError,
    PreferenceRecord,
    generate_study_records,
    make_corpus,
    read_corpus_csv,
    split,
    synthesize,
    table1_distribution,
    write_corpus_csv,
)
from .stats import (
    AnovaResult,
    EmptySample,
    RankSumResult,
    UnbalancedWithin,
    mixed_anova,
    rank_sum,
)

__version__ = "0.1.0"
