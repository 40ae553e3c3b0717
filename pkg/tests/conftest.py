"""Shared fixtures: task specs and a small rendered demonstration set."""

from __future__ import annotations

import numpy as np
import pytest

from surgibench.experts import collect
from surgibench.sim.tasks import get_task_spec
from surgibench.sim.types import TASK_NAMES, Action


@pytest.fixture(params=TASK_NAMES)
def task_spec(request):
    return get_task_spec(request.param)


@pytest.fixture(scope="session")
def needle_lift_spec():
    return get_task_spec("needle_lift")


@pytest.fixture(scope="session")
def small_dataset(tmp_path_factory):
    """Five rendered needle_lift expert episodes, session-cached."""
    root = tmp_path_factory.mktemp("demos") / "needle_lift_small"
    spec = get_task_spec("needle_lift")
    return collect(spec, 5, seed=2000, noise_scale=0.0, out=str(root))


def random_action_sequence(rng: np.random.Generator, num_arms: int, length: int):
    """Clamp-respecting random actions for determinism/replay tests."""
    actions = []
    for _ in range(length):
        actions.append(Action(
            dpos=rng.uniform(-0.004, 0.004, (num_arms, 3)),
            drot=rng.uniform(-0.08, 0.08, (num_arms, 3)),
            jaw=rng.integers(0, 2, num_arms).astype(np.float64),
        ))
    return actions
