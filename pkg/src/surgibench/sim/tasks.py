"""Task definitions: workspace layout, randomization ranges, success thresholds.

Defaults are embedded; a task can also be loaded from a JSON config with the
same field names so ranges/thresholds can be overridden without code changes.
"""

from __future__ import annotations

import json
import math
from pathlib import Path

import numpy as np

from ..errors import ConfigurationError
from ..geometry import Pose, pose_from_xyz
from .needles import get_needle_spec
from .types import TaskSpec

TABLE_Z = 0.0

# Static geometry shared by tasks (meters). Organs are rigid slabs; the
# suture pad hole is a y-axis cylinder; pegs are vertical posts on a board.
ORGAN_SIZE = {
    "tissue_retraction": (0.16, 0.12, 0.01),
    "needle_lift": (0.20, 0.10, 0.01),
    "needle_handover": (0.16, 0.12, 0.01),
}
ORGAN_TOP = 0.01
TISSUE_SIZE = (0.08, 0.06, 0.005)
TISSUE_CENTER_Z = 0.0125
TISSUE_TOP = TISSUE_CENTER_Z + TISSUE_SIZE[2] / 2
TISSUE_EDGE_Y = -0.03
MARKER_RADIUS = 0.0025

PAD_SIZE = (0.08, 0.03, 0.04)
PAD_CENTER = (0.0, 0.0, 0.02)
PAD_TOP = PAD_CENTER[2] + PAD_SIZE[2] / 2
HOLE_RADIUS = 0.003
HOLE_CENTER = (0.0, 0.0, 0.02)  # axis runs along y through the pad
HOLE_ENTRY_Y = PAD_CENTER[1] - PAD_SIZE[1] / 2
HOLE_EXIT_Y = PAD_CENTER[1] + PAD_SIZE[1] / 2

BOARD_SIZE = (0.20, 0.10, 0.01)
BOARD_TOP = 0.01
PEG_RADIUS = 0.004
PEG_TOP = 0.04
PEG_XS = (-0.07, -0.03, 0.01)
PEG_YS = (-0.025, 0.025)
PEG_POSITIONS = tuple((x, y) for x in PEG_XS for y in PEG_YS)  # six start pegs
GOAL_PEG_POSITION = (0.07, 0.0)
BLOCK_SIZE = (0.024, 0.024, 0.015)
BLOCK_REST_Z = BOARD_TOP + BLOCK_SIZE[2] / 2

ARM_HOME = {
    "tissue_retraction": ((0.0, -0.04, 0.06),),
    "needle_lift": ((0.0, -0.03, 0.06),),
    "needle_handover": ((0.03, 0.0, 0.05), (-0.03, 0.0, 0.05)),
    "suture_pad": ((0.0, -0.05, 0.07),),
    "block_transfer": ((0.0, -0.04, 0.07),),
}

DEFAULT_TASKS: dict[str, TaskSpec] = {
    "tissue_retraction": TaskSpec(
        name="tissue_retraction",
        num_arms=1,
        randomization={"marker_x": 0.02},  # +-2 cm => 4 cm along the tissue edge
        success_params={"h_lift": 0.02, "grasp_tol": 0.01},
        horizon=300,
        camera_rig=("top", "wrist0"),
    ),
    "needle_lift": TaskSpec(
        name="needle_lift",
        num_arms=1,
        randomization={"x": 0.025, "y": 0.01},
        success_params={"h_lift": 0.02},
        horizon=300,
        camera_rig=("top", "wrist0"),
    ),
    "needle_handover": TaskSpec(
        name="needle_handover",
        num_arms=2,
        randomization={"x": 0.015, "y": 0.02},
        success_params={},
        horizon=500,
        camera_rig=("top", "wrist0", "wrist1"),
    ),
    "suture_pad": TaskSpec(
        name="suture_pad",
        num_arms=1,
        randomization={"x": 0.02},
        success_params={"hole_radius": HOLE_RADIUS},
        horizon=300,
        camera_rig=("side", "wrist0"),
    ),
    "block_transfer": TaskSpec(
        name="block_transfer",
        num_arms=1,
        randomization={"num_start_pegs": float(len(PEG_POSITIONS))},
        success_params={"r_peg": 0.01},
        horizon=300,
        camera_rig=("side", "wrist0"),
    ),
}


def get_task_spec(name: str, needle_name: str | None = None) -> TaskSpec:
    try:
        spec = DEFAULT_TASKS[name]
    except KeyError:
        raise ConfigurationError(f"unknown task {name!r}; known: {sorted(DEFAULT_TASKS)}")
    if needle_name is not None:
        get_needle_spec(needle_name)  # validate early
        spec = TaskSpec(**{**task_spec_to_dict(spec), "needle_name": needle_name})
    return spec


def task_spec_to_dict(spec: TaskSpec) -> dict:
    return {
        "name": spec.name,
        "num_arms": spec.num_arms,
        "randomization": dict(spec.randomization),
        "success_params": dict(spec.success_params),
        "horizon": spec.horizon,
        "camera_rig": tuple(spec.camera_rig),
        "needle_name": spec.needle_name,
    }


def task_spec_from_dict(d: dict) -> TaskSpec:
    d = dict(d)
    d["camera_rig"] = tuple(d["camera_rig"])
    return TaskSpec(**d)


def load_task_spec(path: str | Path) -> TaskSpec:
    with open(path) as f:
        return task_spec_from_dict(json.load(f))


def save_task_spec(spec: TaskSpec, path: str | Path) -> None:
    with open(path, "w") as f:
        json.dump(task_spec_to_dict(spec), f, indent=2)


def nominal_object_poses(spec: TaskSpec) -> dict[str, Pose]:
    """Object poses before randomization offsets are applied."""
    wire_r = get_needle_spec(spec.needle_name).wire_radius
    if spec.name == "tissue_retraction":
        return {
            "organ": pose_from_xyz(0.0, 0.0, 0.005),
            "tissue": pose_from_xyz(0.0, 0.0, TISSUE_CENTER_Z),
            "tissue_marker": pose_from_xyz(0.0, TISSUE_EDGE_Y, TISSUE_TOP),
        }
    if spec.name in ("needle_lift", "needle_handover"):
        return {
            "organ": pose_from_xyz(0.0, 0.0, 0.005),
            "needle": pose_from_xyz(0.0, 0.0, ORGAN_TOP + wire_r),
        }
    if spec.name == "suture_pad":
        return {
            "pad": pose_from_xyz(*PAD_CENTER),
            "needle": pose_from_xyz(0.0, 0.0, PAD_TOP + wire_r),
        }
    if spec.name == "block_transfer":
        poses = {"board": pose_from_xyz(0.0, 0.0, 0.005)}
        for i, (x, y) in enumerate(PEG_POSITIONS):
            poses[f"peg_{i}"] = pose_from_xyz(x, y, BOARD_TOP)
        poses["goal_peg"] = pose_from_xyz(*GOAL_PEG_POSITION, BOARD_TOP)
        poses["block"] = pose_from_xyz(PEG_POSITIONS[0][0], PEG_POSITIONS[0][1], BLOCK_REST_Z)
        return poses
    raise ConfigurationError(f"unknown task {spec.name!r}")


# Object ids that can be grasped, per task.
GRASPABLE = {
    "tissue_retraction": ("tissue_marker",),
    "needle_lift": ("needle",),
    "needle_handover": ("needle",),
    "suture_pad": ("needle",),
    "block_transfer": ("block",),
}

# z the object settles to when released mid-air (instant-settle drop model).
def rest_height(spec: TaskSpec, object_id: str) -> float:
    wire_r = get_needle_spec(spec.needle_name).wire_radius
    if spec.name == "tissue_retraction":
        return TISSUE_TOP
    if spec.name in ("needle_lift", "needle_handover"):
        return ORGAN_TOP + wire_r
    if spec.name == "suture_pad":
        return TABLE_Z + wire_r
    if spec.name == "block_transfer":
        return BLOCK_REST_Z
    raise ConfigurationError(f"unknown task {spec.name!r}")


# Distractor ids excluded from point-cloud observations by default (arms and
# graspable targets are kept; organs/boards/pads are background).
def default_cloud_ids(spec: TaskSpec) -> tuple[str, ...]:
    if spec.name == "block_transfer":
        keep = ("block",) + tuple(f"peg_{i}" for i in range(len(PEG_POSITIONS))) + ("goal_peg",)
    elif spec.name == "suture_pad":
        keep = ("needle", "pad")
    else:
        keep = GRASPABLE[spec.name]
    return keep


def _quat_yaw(yaw: float) -> np.ndarray:
    return np.array([math.cos(yaw / 2), 0.0, 0.0, math.sin(yaw / 2)])
