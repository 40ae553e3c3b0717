from .camera import (
    DEFAULT_RESOLUTION,
    CameraModel,
    CameraRig,
    default_rig,
    perturb_camera,
    swap_view,
)
from .render import BACKGROUND_ID, FrameSet, dump_frames, instance_ids, render

__all__ = [
    "DEFAULT_RESOLUTION",
    "CameraModel",
    "CameraRig",
    "default_rig",
    "perturb_camera",
    "swap_view",
    "BACKGROUND_ID",
    "FrameSet",
    "dump_frames",
    "instance_ids",
    "render",
]
