"""Shared fixtures: deterministic hypothesis profile and scene factories."""
from __future__ import annotations

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

from handoverkit.geometry import Pose, VoxelMap
from handoverkit.library import load_library
from handoverkit.scene import HumanState, Mobility, Scene

settings.register_profile(
    "det",
    deadline=None,
    derandomize=True,
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("det")


@pytest.fixture(scope="session")
def library():
    return load_library()


@pytest.fixture(scope="session")
def corpus42():
    from handoverkit.dataset import make_corpus

    return make_corpus(seed=42)


@pytest.fixture(scope="session")
def trained42(corpus42):
    from handoverkit.dataset import split
    from handoverkit.pipeline import train

    train_split, test_split = split(corpus42)
    return train(train_split), test_split


def random_small_scene(seed: int, library) -> Scene:
    """Seeded scene on a grid of at most 6x6x6 voxels.

    Geometry mirrors the bundled setups (receiver in front of the robot, face
    above the hand) but randomizes grid placement, resolution, object, and
    mobility so optimizer equivalence is exercised broadly.
    """
    rng = np.random.default_rng(seed)
    ids = library.ids()
    obj = library.get(ids[seed % len(ids)])
    dims = tuple(int(d) for d in rng.integers(2, 7, size=3))
    resolution = float(rng.uniform(0.08, 0.16))
    origin = np.array(
        [
            rng.uniform(-0.1, 0.2),
            rng.uniform(0.6, 0.8),
            rng.uniform(0.2, 0.4),
        ]
    )
    extent = resolution * np.asarray(dims, dtype=float)
    hand = origin + extent * rng.uniform(0.15, 0.85, size=3)
    face = hand + np.array([0.0, float(rng.uniform(0.25, 0.4)), -0.05])
    torso = hand + np.array([0.0, -0.15, -0.25])
    mobility = [Mobility.HEALTHY, Mobility.HIGH_MOBILITY, Mobility.LOW_MOBILITY, Mobility.LOW][
        seed % 4
    ]
    human = HumanState(
        hand=Pose(hand), face=Pose(face), mobility=mobility, task=obj.task, torso=torso
    )
    robot_base = Pose(origin + np.array([extent[0] / 2.0, -0.4, -0.2]))
    vmap = VoxelMap(origin, resolution, dims)
    return Scene(map=vmap, human=human, object=obj, robot_base=robot_base)


@pytest.fixture
def small_scene_factory(library):
    def make(seed: int) -> Scene:
        return random_small_scene(seed, library)

    return make
