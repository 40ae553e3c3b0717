"""Core simulator data types: arm/scene state, actions, task specs, needles."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from typing import Optional

import numpy as np

from ..errors import ConfigurationError
from ..geometry import Pose

TASK_NAMES = (
    "tissue_retraction",
    "needle_lift",
    "needle_handover",
    "suture_pad",
    "block_transfer",
)

# Control limits and grasp model constants (shared by sim, experts, teleop).
MAX_STEP_TRANSLATION = 0.005  # m per step
MAX_STEP_ROTATION = 0.1  # rad per step
CONTROL_RATE_HZ = 30
EPS_GRASP = 0.005  # m
JAW_MAX = 1.0  # rad
JAW_CLOSE_THRESHOLD = 0.2  # rad; attachment only possible below this
JAW_RATE = 0.4  # rad per step

JAW_OPEN_CMD = 0
JAW_CLOSE_CMD = 1

ACTION_DIMS_PER_ARM = 7  # dpos(3) + drot(3) + jaw(1)
PROPRIO_DIMS_PER_ARM = 8  # pos(3) + quat(4) + jaw(1)


@dataclass(frozen=True)
class ArmState:
    ee_pose: Pose
    jaw: float = JAW_MAX
    attached: Optional[str] = None
    # Object pose expressed in the gripper frame, fixed at grasp time.
    attach_offset: Optional[Pose] = None
    # Gripper-to-feature distance at the moment of attachment.
    attach_distance: float = 0.0

    def __post_init__(self):
        if not 0.0 <= self.jaw <= JAW_MAX:
            raise ValueError(f"jaw {self.jaw} outside [0, {JAW_MAX}]")
        if self.attached is not None and self.jaw > JAW_CLOSE_THRESHOLD:
            raise ValueError("attached with jaw above close threshold")


@dataclass(frozen=True)
class SceneState:
    arms: tuple[ArmState, ...]
    objects: dict[str, Pose]
    step_count: int = 0
    rng_state: Optional[dict] = None

    def __post_init__(self):
        if self.step_count < 0:
            raise ValueError("negative step_count")
        for arm in self.arms:
            if arm.attached is not None and arm.attached not in self.objects:
                raise ValueError(f"attached id {arm.attached!r} not in objects")

    def replace(self, **kw) -> "SceneState":
        return replace(self, **kw)

    def attachment_owner(self, object_id: str) -> Optional[int]:
        for i, arm in enumerate(self.arms):
            if arm.attached == object_id:
                return i
        return None


@dataclass(frozen=True)
class Action:
    """Per-arm relative end-effector command.

    dpos: (num_arms, 3) meters; drot: (num_arms, 3) axis-angle radians;
    jaw: (num_arms,) ints, 0 = open, 1 = close. Values beyond the step
    clamps are scaled down by step(), not rejected.
    """

    dpos: np.ndarray
    drot: np.ndarray
    jaw: np.ndarray

    def __post_init__(self):
        object.__setattr__(self, "dpos", np.asarray(self.dpos, dtype=np.float64).reshape(-1, 3))
        object.__setattr__(self, "drot", np.asarray(self.drot, dtype=np.float64).reshape(-1, 3))
        object.__setattr__(self, "jaw", np.asarray(self.jaw, dtype=np.int64).reshape(-1))
        if not (len(self.dpos) == len(self.drot) == len(self.jaw)):
            raise ValueError("inconsistent arm counts in action")
        if not np.all(np.isfinite(self.dpos)) or not np.all(np.isfinite(self.drot)):
            raise ValueError("non-finite action")
        if not np.all((self.jaw == 0) | (self.jaw == 1)):
            raise ValueError("jaw command must be 0 or 1")

    @property
    def num_arms(self) -> int:
        return len(self.jaw)

    @staticmethod
    def zero(num_arms: int, jaw_cmd: int = JAW_OPEN_CMD) -> "Action":
        return Action(
            np.zeros((num_arms, 3)), np.zeros((num_arms, 3)), np.full(num_arms, jaw_cmd)
        )

    def to_vector(self) -> np.ndarray:
        """Flat [dpos, drot, jaw] per arm, concatenated; length 7 * num_arms."""
        parts = []
        for i in range(self.num_arms):
            parts.extend([self.dpos[i], self.drot[i], [float(self.jaw[i])]])
        return np.concatenate(parts)

    @staticmethod
    def from_vector(vec: np.ndarray) -> "Action":
        vec = np.asarray(vec, dtype=np.float64).reshape(-1)
        if len(vec) % ACTION_DIMS_PER_ARM != 0:
            raise ValueError(f"action vector length {len(vec)} not a multiple of 7")
        n = len(vec) // ACTION_DIMS_PER_ARM
        per = vec.reshape(n, ACTION_DIMS_PER_ARM)
        return Action(per[:, 0:3], per[:, 3:6], (per[:, 6] > 0.5).astype(np.int64))


@dataclass(frozen=True)
class NeedleSpec:
    """Circular-arc suture needle with optional sinusoidal centerline warps.

    irregularity: list of (axis, amplitude) terms; term i modulates the
    centerline along `axis` by amplitude * sin((i+1) * pi * u), u in [0, 1].
    """

    arc_radius: float
    arc_angle: float
    wire_radius: float = 0.0006
    irregularity: tuple[tuple[int, float], ...] = ()
    name: str = ""

    def __post_init__(self):
        if self.arc_radius <= 0:
            raise ConfigurationError(f"arc_radius must be positive, got {self.arc_radius}")
        if not 0 < self.arc_angle <= 2 * math.pi:
            raise ConfigurationError(f"arc_angle must be in (0, 2*pi], got {self.arc_angle}")
        if self.wire_radius >= self.arc_radius:
            raise ConfigurationError("wire_radius must be smaller than arc_radius")
        for axis, _amp in self.irregularity:
            if axis not in (0, 1, 2):
                raise ConfigurationError(f"irregularity axis must be 0..2, got {axis}")


@dataclass(frozen=True)
class TaskSpec:
    name: str
    num_arms: int
    randomization: dict[str, float]
    success_params: dict[str, float]
    horizon: int
    camera_rig: tuple[str, ...]
    needle_name: str = "N1"

    def __post_init__(self):
        if self.name not in TASK_NAMES:
            raise ConfigurationError(f"unknown task {self.name!r}")
        if self.num_arms not in (1, 2):
            raise ConfigurationError("num_arms must be 1 or 2")
        if (self.num_arms == 2) != (self.name == "needle_handover"):
            raise ConfigurationError("num_arms = 2 only for needle_handover")
        if self.horizon <= 0:
            raise ConfigurationError("horizon must be positive")
        if any(v < 0 for v in self.randomization.values()):
            raise ConfigurationError("randomization ranges must be non-negative")
