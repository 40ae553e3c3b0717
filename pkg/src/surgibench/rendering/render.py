"""Flat-shaded raycast renderer producing RGB, metric depth and instance ids.

Geometry is a set of analytic primitives (spheres, capsules, oriented boxes)
assembled per task. Depth is the z-distance along the optical axis, so a pixel
ray with camera-frame direction ((u-cx)/fx, (v-cy)/fy, 1) hits at parameter
t == depth. Rendering is a pure function of (scene, camera): identical inputs
give identical frames.
"""

from __future__ import annotations

from dataclasses import dataclass
from pathlib import Path

import numpy as np

from ..geometry import Pose, quat_to_matrix
from ..sim.needles import generate_needle, get_needle_spec
from ..sim.tasks import (
    BLOCK_SIZE,
    BOARD_SIZE,
    HOLE_RADIUS,
    MARKER_RADIUS,
    ORGAN_SIZE,
    PAD_SIZE,
    PEG_RADIUS,
    PEG_TOP,
    TISSUE_SIZE,
)
from ..sim.types import SceneState, TaskSpec
from .camera import CameraModel

BACKGROUND_ID = -1
BACKGROUND_RGB = (24, 24, 28)
LIGHT_DIR = np.array([0.3, 0.2, -1.0]) / np.linalg.norm([0.3, 0.2, -1.0])
AMBIENT = 0.35

ARM_RADIUS = 0.003
ARM_LENGTH = 0.10
ARM_TIP_RADIUS = 0.004

COLORS = {
    "arm": (200, 200, 210),
    "organ": (150, 60, 50),
    "tissue": (230, 170, 160),
    "tissue_marker": (255, 20, 20),
    "needle": (190, 190, 200),
    "pad": (90, 120, 200),
    "board": (120, 100, 80),
    "peg": (160, 160, 160),
    "goal_peg": (255, 105, 180),
    "block": (240, 210, 60),
}


@dataclass(frozen=True)
class FrameSet:
    rgb: np.ndarray  # (H, W, 3) uint8
    depth: np.ndarray  # (H, W) float32, meters; 0 = no hit
    seg: np.ndarray  # (H, W) int32 instance ids; -1 = background

    def __post_init__(self):
        if not (self.rgb.shape[:2] == self.depth.shape == self.seg.shape):
            raise ValueError("frame arrays must share H x W")


def instance_ids(spec: TaskSpec, state: SceneState) -> dict[str, int]:
    """Stable name -> id map: arms are 0..n-1, objects 10.. in sorted order."""
    ids = {f"arm{i}": i for i in range(len(state.arms))}
    for i, name in enumerate(sorted(state.objects)):
        ids[name] = 10 + i
    return ids


# --- primitives -------------------------------------------------------------


def _ray_spheres(o, dirs, centers, radii, inst, t_buf, id_buf, n_buf, color_buf, colors):
    for c, r, iid, col in zip(centers, radii, inst, colors):
        m = o - c
        a = np.einsum("ij,ij->i", dirs, dirs)
        b = 2.0 * dirs @ m
        c0 = m @ m - r * r
        disc = b * b - 4 * a * c0
        hit = disc >= 0
        t = np.full(len(dirs), np.inf)
        sq = np.sqrt(np.where(hit, disc, 0.0))
        t_near = (-b - sq) / (2 * a)
        t[hit & (t_near > 1e-6)] = t_near[hit & (t_near > 1e-6)]
        win = t < t_buf
        if not win.any():
            continue
        t_buf[win] = t[win]
        id_buf[win] = iid
        p = o + t[win, None] * dirs[win]
        n_buf[win] = (p - c) / r
        color_buf[win] = col


def _ray_capsule(o, dirs, p0, p1, radius):
    """Return (t, normal) arrays for a capsule; t = inf where missed."""
    axis = p1 - p0
    length = np.linalg.norm(axis)
    n_pts = len(dirs)
    t_out = np.full(n_pts, np.inf)
    if length < 1e-12:
        u = np.zeros(3)
    else:
        u = axis / length
    m = o - p0
    d_par = dirs @ u
    m_par = m @ u
    d_perp = dirs - d_par[:, None] * u
    m_perp = m - m_par * u
    a = np.einsum("ij,ij->i", d_perp, d_perp)
    b = 2.0 * d_perp @ m_perp
    c0 = m_perp @ m_perp - radius * radius
    disc = b * b - 4 * a * c0
    ok = (disc >= 0) & (a > 1e-18)
    sq = np.sqrt(np.where(ok, disc, 0.0))
    t_cyl = np.where(ok, (-b - sq) / np.where(ok, 2 * a, 1.0), np.inf)
    s = m_par + t_cyl * d_par  # axial coordinate of the cylinder hit
    cyl_hit = ok & (t_cyl > 1e-6) & (s >= 0) & (s <= length)
    t_out[cyl_hit] = t_cyl[cyl_hit]
    # End caps.
    for cap in (p0, p1):
        mc = o - cap
        bc = 2.0 * dirs @ mc
        cc = mc @ mc - radius * radius
        dc = bc * bc - 4 * np.einsum("ij,ij->i", dirs, dirs) * cc
        okc = dc >= 0
        sqc = np.sqrt(np.where(okc, dc, 0.0))
        tc = np.where(okc, (-bc - sqc) / (2 * np.einsum("ij,ij->i", dirs, dirs)), np.inf)
        cap_hit = okc & (tc > 1e-6) & (tc < t_out)
        t_out[cap_hit] = tc[cap_hit]
    hit = np.isfinite(t_out)
    normals = np.zeros((n_pts, 3))
    if hit.any():
        p = o + t_out[hit, None] * dirs[hit]
        s_hit = np.clip((p - p0) @ u, 0.0, length)
        closest = p0 + s_hit[:, None] * u
        nv = p - closest
        normals[hit] = nv / np.linalg.norm(nv, axis=1, keepdims=True)
    return t_out, normals


def _ray_box(o, dirs, pose: Pose, half):
    """Oriented box via the slab method in the box frame."""
    rot = quat_to_matrix(pose.orientation)
    o_l = (o - pose.position) @ rot
    d_l = dirs @ rot
    half = np.asarray(half)
    with np.errstate(divide="ignore", invalid="ignore"):
        t1 = (-half - o_l) / d_l
        t2 = (half - o_l) / d_l
        t_lo = np.minimum(t1, t2)
        t_hi = np.maximum(t1, t2)
    # Parallel rays: hit only if the origin is inside the slab.
    parallel = np.abs(d_l) <= 1e-15
    inside = np.abs(o_l) <= half
    t_lo = np.where(parallel, np.where(inside, -np.inf, np.inf), t_lo)
    t_hi = np.where(parallel, np.where(inside, np.inf, -np.inf), t_hi)
    tn = t_lo.max(axis=1)
    tf = t_hi.min(axis=1)
    hit = (tn <= tf) & (tn > 1e-6)
    t = np.where(hit, tn, np.inf)
    normals = np.zeros_like(dirs)
    if hit.any():
        entry_axis = t_lo[hit].argmax(axis=1)
        sign = -np.sign(d_l[hit, entry_axis])
        n_l = np.zeros((hit.sum(), 3))
        n_l[np.arange(hit.sum()), entry_axis] = sign
        normals[hit] = n_l @ rot.T
    return t, normals


# --- scene assembly ---------------------------------------------------------


def _scene_primitives(spec: TaskSpec, state: SceneState):
    """Yield (kind, params, instance_name, color) primitives for the scene."""
    prims = []
    for i, arm in enumerate(state.arms):
        p = arm.ee_pose.position
        up = quat_to_matrix(arm.ee_pose.orientation)[:, 2]
        prims.append(("capsule", (p, p + ARM_LENGTH * up, ARM_RADIUS), f"arm{i}", COLORS["arm"]))
        prims.append(("sphere", (p, ARM_TIP_RADIUS), f"arm{i}", COLORS["arm"]))

    name = spec.name
    objs = state.objects
    if name in ORGAN_SIZE:
        half = np.array(ORGAN_SIZE[name]) / 2
        prims.append(("box", (objs["organ"], half), "organ", COLORS["organ"]))
    if "tissue" in objs:
        prims.append(("box", (objs["tissue"], np.array(TISSUE_SIZE) / 2), "tissue", COLORS["tissue"]))
    if "tissue_marker" in objs:
        prims.append(
            ("sphere", (objs["tissue_marker"].position, MARKER_RADIUS), "tissue_marker",
             COLORS["tissue_marker"])
        )
    if "needle" in objs:
        nspec = get_needle_spec(spec.needle_name)
        pts = objs["needle"].transform_points(generate_needle(nspec, samples=12))
        for a, b in zip(pts[:-1], pts[1:]):
            prims.append(("capsule", (a, b, nspec.wire_radius), "needle", COLORS["needle"]))
    if "pad" in objs:
        # Four boxes framing a square through-channel so the hole is visible
        # in depth; the success predicate uses the cylinder model.
        pose = objs["pad"]
        hx, hy, hz = np.array(PAD_SIZE) / 2
        r = HOLE_RADIUS
        sub = [
            ((-(hx + r) / 2, 0.0, 0.0), ((hx - r) / 2, hy, hz)),  # left of hole
            ((+(hx + r) / 2, 0.0, 0.0), ((hx - r) / 2, hy, hz)),  # right of hole
            ((0.0, 0.0, +(hz + r) / 2), (r, hy, (hz - r) / 2)),  # above hole
            ((0.0, 0.0, -(hz + r) / 2), (r, hy, (hz - r) / 2)),  # below hole
        ]
        for center, half in sub:
            sub_pose = pose.compose(Pose(np.array(center)))
            prims.append(("box", (sub_pose, np.array(half)), "pad", COLORS["pad"]))
    if "board" in objs:
        prims.append(("box", (objs["board"], np.array(BOARD_SIZE) / 2), "board", COLORS["board"]))
    for oid, pose in objs.items():
        if oid.startswith("peg") or oid == "goal_peg":
            base = pose.position
            top = base + np.array([0.0, 0.0, PEG_TOP - base[2]])
            color = COLORS["goal_peg"] if oid == "goal_peg" else COLORS["peg"]
            prims.append(("capsule", (base, top, PEG_RADIUS), oid, color))
    if "block" in objs:
        prims.append(("box", (objs["block"], np.array(BLOCK_SIZE) / 2), "block", COLORS["block"]))
    return prims


_DIR_CACHE: dict[tuple, np.ndarray] = {}


def _pixel_dirs(camera: CameraModel) -> np.ndarray:
    key = (camera.width, camera.height, camera.fx, camera.fy, camera.cx, camera.cy)
    if key not in _DIR_CACHE:
        u = np.arange(camera.width) + 0.5
        v = np.arange(camera.height) + 0.5
        uu, vv = np.meshgrid(u, v)
        dirs = np.stack(
            [(uu - camera.cx) / camera.fx, (vv - camera.cy) / camera.fy, np.ones_like(uu)],
            axis=-1,
        ).reshape(-1, 3)
        _DIR_CACHE[key] = dirs
    return _DIR_CACHE[key]


def render(spec: TaskSpec, state: SceneState, camera: CameraModel) -> FrameSet:
    h, w = camera.height, camera.width
    cam_pose = camera.world_pose(state)
    rot = quat_to_matrix(cam_pose.orientation)
    o = cam_pose.position
    dirs = _pixel_dirs(camera) @ rot.T  # world-frame, t parameter == z depth

    n_px = h * w
    t_buf = np.full(n_px, np.inf)
    id_buf = np.full(n_px, BACKGROUND_ID, dtype=np.int32)
    n_buf = np.zeros((n_px, 3))
    color_buf = np.zeros((n_px, 3))

    ids = instance_ids(spec, state)
    for kind, params, inst_name, color in _scene_primitives(spec, state):
        if kind == "sphere":
            center, radius = params
            _ray_spheres(
                o, dirs, [center], [radius], [ids[inst_name]], t_buf, id_buf, n_buf, color_buf,
                [color],
            )
            continue
        if kind == "capsule":
            p0, p1, radius = params
            t, normals = _ray_capsule(o, dirs, p0, p1, radius)
        else:
            pose, half = params
            t, normals = _ray_box(o, dirs, pose, half)
        win = t < t_buf
        if win.any():
            t_buf[win] = t[win]
            id_buf[win] = ids[inst_name]
            n_buf[win] = normals[win]
            color_buf[win] = color

    hit = np.isfinite(t_buf)
    shade = AMBIENT + (1 - AMBIENT) * np.maximum(0.0, -(n_buf @ LIGHT_DIR))
    rgb = np.empty((n_px, 3), dtype=np.uint8)
    rgb[:] = BACKGROUND_RGB
    rgb[hit] = np.clip(color_buf[hit] * shade[hit, None], 0, 255).astype(np.uint8)
    depth = np.where(hit, t_buf, 0.0).astype(np.float32)
    return FrameSet(
        rgb=rgb.reshape(h, w, 3),
        depth=depth.reshape(h, w),
        seg=id_buf.reshape(h, w),
    )


def dump_frames(frames: FrameSet, out_dir: str | Path, prefix: str = "frame") -> list[Path]:
    """Write inspection PNGs: 8-bit RGB and 16-bit millimeter depth."""
    from PIL import Image

    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    rgb_path = out_dir / f"{prefix}_rgb.png"
    depth_path = out_dir / f"{prefix}_depth.png"
    Image.fromarray(frames.rgb).save(rgb_path)
    depth_mm = np.clip(np.round(frames.depth * 1000.0), 0, 65535).astype(np.uint16)
    Image.fromarray(depth_mm).save(depth_path)
    return [rgb_path, depth_path]
