"""Observation building: depth deprojection, segmentation crops, farthest
point sampling, and the three policy observation spaces."""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .errors import ConfigurationError, EmptyCloudError
from .rendering.camera import CameraModel, CameraRig
from .rendering.render import FrameSet, instance_ids, render
from .sim.env import get_proprio
from .sim.tasks import default_cloud_ids
from .sim.types import SceneState, TaskSpec

OBSERVATION_SPACES = ("single_camera", "multi_camera", "point_cloud")
DEFAULT_CLOUD_SIZE = 512


@dataclass(frozen=True)
class PointCloud:
    points: np.ndarray  # (N, 3) meters
    frame: str  # "camera" or "world"
    source_ids: tuple[int, ...] = ()
    padded: bool = False  # fps requested more points than were available

    def __post_init__(self):
        object.__setattr__(self, "points", np.asarray(self.points, dtype=np.float64))
        if self.points.ndim != 2 or self.points.shape[1] != 3 or len(self.points) == 0:
            raise ValueError(f"bad cloud shape {self.points.shape}")
        if not np.all(np.isfinite(self.points)):
            raise ValueError("non-finite points")
        if self.frame not in ("camera", "world"):
            raise ValueError(f"bad frame {self.frame!r}")


@dataclass(frozen=True)
class Observation:
    frames: dict[str, np.ndarray]  # camera-id -> (H, W, 3) uint8 RGB
    proprio: np.ndarray
    pointcloud: Optional[PointCloud] = None
    space: str = "single_camera"


def deproject(
    depth: np.ndarray, camera: CameraModel, mask: np.ndarray | None = None
) -> PointCloud:
    """Back-project masked depth pixels into the camera frame.

    Pixel (u, v) with depth z maps to ((u - cx)/fx * z, (v - cy)/fy * z, z),
    using pixel-center coordinates (u + 0.5). Zero-depth pixels never produce
    points.
    """
    depth = np.asarray(depth, dtype=np.float64)
    if mask is None:
        mask = np.ones_like(depth, dtype=bool)
    sel = mask & (depth > 0)
    if not sel.any():
        raise EmptyCloudError("no masked pixels with positive depth")
    vv, uu = np.nonzero(sel)
    z = depth[vv, uu]
    x = (uu + 0.5 - camera.cx) / camera.fx * z
    y = (vv + 0.5 - camera.cy) / camera.fy * z
    return PointCloud(points=np.stack([x, y, z], axis=1), frame="camera")


def project(points: np.ndarray, camera: CameraModel) -> np.ndarray:
    """Camera-frame points -> (u, v) pixel coordinates (pixel centers at +0.5)."""
    points = np.asarray(points, dtype=np.float64)
    u = points[:, 0] / points[:, 2] * camera.fx + camera.cx
    v = points[:, 1] / points[:, 2] * camera.fy + camera.cy
    return np.stack([u, v], axis=1)


def crop_by_segmentation(frames: FrameSet, ids) -> np.ndarray:
    """Boolean pixel predicate: True exactly where seg is one of `ids`."""
    ids = tuple(ids)
    if not ids:
        raise ValueError("ids must be nonempty")
    return np.isin(frames.seg, ids)


def farthest_point_sample(points: np.ndarray, n: int) -> tuple[np.ndarray, bool]:
    """Greedy FPS starting at index 0; ties broken by lowest index.

    Returns (indices in selection order, padded). If n exceeds the number of
    points, the last selected index is repeated and padded is True.
    """
    points = np.asarray(points, dtype=np.float64)
    m = len(points)
    if m < 1 or n < 1:
        raise ValueError("need at least one point and n >= 1")
    k = min(n, m)
    selected = np.empty(n, dtype=np.int64)
    selected[0] = 0
    min_d = np.linalg.norm(points - points[0], axis=1)
    for i in range(1, k):
        idx = int(np.argmax(min_d))  # argmax returns the lowest maximizing index
        selected[i] = idx
        min_d = np.minimum(min_d, np.linalg.norm(points - points[idx], axis=1))
    padded = n > m
    if padded:
        selected[m:] = selected[m - 1]
    return selected, padded


def segmented_cloud(
    spec: TaskSpec,
    state: SceneState,
    frames: FrameSet,
    camera: CameraModel,
    n_points: int = DEFAULT_CLOUD_SIZE,
    keep_ids: tuple[int, ...] | None = None,
    frame: str = "camera",
) -> PointCloud:
    """Segmentation-cropped, FPS-downsampled cloud from one camera's depth."""
    if keep_ids is None:
        id_map = instance_ids(spec, state)
        names = default_cloud_ids(spec)
        keep_ids = tuple(id_map[f"arm{i}"] for i in range(len(state.arms))) + tuple(
            id_map[n] for n in names
        )
    mask = crop_by_segmentation(frames, keep_ids)
    cloud = deproject(frames.depth, camera, mask)
    idx, padded = farthest_point_sample(cloud.points, n_points)
    pts = cloud.points[idx]
    if frame == "world":
        pts = camera.world_pose(state).transform_points(pts)
    return PointCloud(points=pts, frame=frame, source_ids=tuple(keep_ids), padded=padded)


def build_observation(
    spec: TaskSpec,
    state: SceneState,
    rig: CameraRig,
    space: str,
    n_points: int = DEFAULT_CLOUD_SIZE,
    cloud_frame: str = "camera",
) -> Observation:
    """Render the rig and assemble the requested observation space.

    single_camera: primary RGB + proprio. multi_camera: adds wrist RGB(s).
    point_cloud: segmented FPS cloud from the primary depth (no color) + proprio.
    """
    if space not in OBSERVATION_SPACES:
        raise ConfigurationError(f"unknown observation space {space!r}")
    q = get_proprio(state)
    if space == "point_cloud":
        frames = render(spec, state, rig.primary)
        cloud = segmented_cloud(
            spec, state, frames, rig.primary, n_points=n_points, frame=cloud_frame
        )
        return Observation(frames={}, proprio=q, pointcloud=cloud, space=space)
    cams = (rig.primary,) if space == "single_camera" else rig.cameras
    frames = {cam.id: render(spec, state, cam).rgb for cam in cams}
    return Observation(frames=frames, proprio=q, pointcloud=None, space=space)
