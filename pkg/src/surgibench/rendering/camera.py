"""Pinhole camera models, per-task rigs, viewpoint perturbation and swapping."""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from ..errors import ConfigurationError
from ..geometry import Pose, look_at, quat_from_axis_angle, quat_multiply, quat_normalize
from ..sim.types import SceneState, TaskSpec

DEFAULT_RESOLUTION = 128


@dataclass(frozen=True)
class CameraModel:
    fx: float
    fy: float
    cx: float
    cy: float
    width: int
    height: int
    pose: Pose  # camera-to-world; +z optical axis, +x right, +y down
    id: str
    attached_arm: int | None = None  # if set, `pose` is expressed in that ee frame

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ConfigurationError("focal lengths must be positive")
        if not (0 <= self.cx < self.width and 0 <= self.cy < self.height):
            raise ConfigurationError("principal point outside image")

    def world_pose(self, state: SceneState | None = None) -> Pose:
        if self.attached_arm is None:
            return self.pose
        if state is None:
            raise ValueError(f"camera {self.id} is wrist-mounted; scene state required")
        return state.arms[self.attached_arm].ee_pose.compose(self.pose)

    def to_dict(self) -> dict:
        return {
            "fx": self.fx,
            "fy": self.fy,
            "cx": self.cx,
            "cy": self.cy,
            "width": self.width,
            "height": self.height,
            "position": self.pose.position.tolist(),
            "orientation": self.pose.orientation.tolist(),
            "id": self.id,
            "attached_arm": self.attached_arm,
        }

    @staticmethod
    def from_dict(d: dict) -> "CameraModel":
        return CameraModel(
            fx=d["fx"],
            fy=d["fy"],
            cx=d["cx"],
            cy=d["cy"],
            width=d["width"],
            height=d["height"],
            pose=Pose(np.array(d["position"]), np.array(d["orientation"])),
            id=d["id"],
            attached_arm=d.get("attached_arm"),
        )


@dataclass(frozen=True)
class CameraRig:
    """Primary task camera + registered alternate view + wrist cameras."""

    primary: CameraModel
    alternate: CameraModel
    wrists: tuple[CameraModel, ...] = ()

    @property
    def cameras(self) -> tuple[CameraModel, ...]:
        return (self.primary,) + self.wrists

    def camera(self, cam_id: str) -> CameraModel:
        for cam in (self.primary, self.alternate) + self.wrists:
            if cam.id == cam_id:
                return cam
        raise ConfigurationError(f"no camera {cam_id!r} in rig")

    def to_dict(self) -> dict:
        return {
            "primary": self.primary.to_dict(),
            "alternate": self.alternate.to_dict(),
            "wrists": [c.to_dict() for c in self.wrists],
        }

    @staticmethod
    def from_dict(d: dict) -> "CameraRig":
        return CameraRig(
            primary=CameraModel.from_dict(d["primary"]),
            alternate=CameraModel.from_dict(d["alternate"]),
            wrists=tuple(CameraModel.from_dict(c) for c in d["wrists"]),
        )


def _make_camera(cam_id: str, resolution: int) -> CameraModel:
    w = h = resolution
    if cam_id == "top":
        # Static top-down endoscope, zoomed onto the workspace.
        return CameraModel(
            fx=2.0 * w, fy=2.0 * w, cx=w / 2, cy=h / 2, width=w, height=h,
            pose=look_at(np.array([0.0, 0.0, 0.20]), np.array([0.0, 0.0, 0.0])),
            id="top",
        )
    if cam_id == "side":
        return CameraModel(
            fx=1.5 * w, fy=1.5 * w, cx=w / 2, cy=h / 2, width=w, height=h,
            pose=look_at(np.array([0.0, -0.26, 0.16]), np.array([0.0, 0.0, 0.02])),
            id="side",
        )
    if cam_id.startswith("wrist"):
        arm = int(cam_id[len("wrist"):])
        # Mounted behind/above the gripper tip, looking at it (ee-frame pose).
        local = look_at(np.array([0.0, -0.025, 0.05]), np.array([0.0, 0.0, 0.0]))
        return CameraModel(
            fx=1.0 * w, fy=1.0 * w, cx=w / 2, cy=h / 2, width=w, height=h,
            pose=local, id=cam_id, attached_arm=arm,
        )
    raise ConfigurationError(f"unknown camera id {cam_id!r}")


def default_rig(task: TaskSpec, resolution: int = DEFAULT_RESOLUTION) -> CameraRig:
    """Primary view per task (endoscope for needle/tissue tasks, side view for
    tabletop tasks), the other registered as the swap alternate, plus one wrist
    camera per arm."""
    primary_id = task.camera_rig[0]
    alternate_id = "side" if primary_id == "top" else "top"
    wrists = tuple(
        _make_camera(cid, resolution) for cid in task.camera_rig if cid.startswith("wrist")
    )
    return CameraRig(
        primary=_make_camera(primary_id, resolution),
        alternate=_make_camera(alternate_id, resolution),
        wrists=wrists,
    )


def sample_perturbation(
    seed: int, trans_range: float, rot_range_deg: float
) -> tuple[np.ndarray, np.ndarray]:
    """Per-axis uniform (translation [m], rotation angles [rad]) draws."""
    rng = np.random.default_rng(seed)
    dt = rng.uniform(-trans_range, trans_range, size=3)
    angles = rng.uniform(-math.radians(rot_range_deg), math.radians(rot_range_deg), size=3)
    return dt, angles


def perturb_camera(
    camera: CameraModel,
    seed: int,
    trans_range: float = 0.01,
    rot_range_deg: float = 5.0,
) -> CameraModel:
    """Random viewpoint jitter: per-axis uniform translation in
    [-trans_range, +trans_range] and rotation in [-rot_range_deg, +rot_range_deg];
    intrinsics unchanged."""
    if trans_range == 0.0 and rot_range_deg == 0.0:
        return camera
    dt, angles = sample_perturbation(seed, trans_range, rot_range_deg)
    q = camera.pose.orientation
    for axis in range(3):
        axis_vec = np.zeros(3)
        axis_vec[axis] = angles[axis]
        q = quat_normalize(quat_multiply(quat_from_axis_angle(axis_vec), q))
    return replace(camera, pose=Pose(camera.pose.position + dt, q))


def swap_view(rig: CameraRig) -> CameraRig:
    """Exchange primary and alternate perspectives; wrist cameras untouched."""
    return CameraRig(primary=rig.alternate, alternate=rig.primary, wrists=rig.wrists)
