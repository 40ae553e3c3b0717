"""Privileged-state scripted experts and demonstration collection.

Each expert is a reactive waypoint controller: every step it derives the
remaining waypoint list from the current scene (attachment state and object
poses) and drives the gripper proportionally toward the first one, clamped to
the per-step action limits. Collection keeps only successful episodes and
re-seeds until the requested count is reached, so every stored episode
replays to success.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .datasets.store import DemonstrationSet, Episode, canonical_actions
from .perception import segmented_cloud
from .rendering.camera import CameraRig, default_rig
from .rendering.render import render
from .sim.env import SurgicalEnv, clamp_action, get_proprio, grasp_features
from .sim.needles import generate_needle, get_needle_spec
from .sim.tasks import (
    BLOCK_REST_Z,
    BLOCK_SIZE,
    GOAL_PEG_POSITION,
    HOLE_CENTER,
    HOLE_ENTRY_Y,
    HOLE_EXIT_Y,
    ORGAN_TOP,
    PEG_TOP,
    TISSUE_TOP,
    ARM_HOME,
)
from .sim.types import (
    JAW_CLOSE_CMD,
    JAW_OPEN_CMD,
    MAX_STEP_ROTATION,
    MAX_STEP_TRANSLATION,
    Action,
    SceneState,
    TaskSpec,
)

HOVER = 0.02  # approach height above a grasp feature
REACH_TOL = 0.002
HANDOVER_POINT = np.array([0.0, 0.0, 0.06])


@dataclass(frozen=True)
class Waypoint:
    target_pos: np.ndarray
    jaw_cmd: int
    tolerance: float = REACH_TOL
    max_dwell: int = 60


@dataclass(frozen=True)
class WaypointPlan:
    waypoints: tuple[Waypoint, ...]

    @property
    def current(self) -> Waypoint | None:
        return self.waypoints[0] if self.waypoints else None


def _feature_point(spec: TaskSpec, state: SceneState, object_id: str, index: int = 0) -> np.ndarray:
    for oid, pts in grasp_features(spec, state.objects):
        if oid == object_id:
            return pts[index]
    raise KeyError(object_id)


def _grasp_waypoints(ee: np.ndarray, feature: np.ndarray, settle: int = 4) -> list[Waypoint]:
    """Approach-above -> descend -> close, the common grasp prefix."""
    wps = []
    horiz = np.linalg.norm(ee[:2] - feature[:2])
    above = feature + np.array([0.0, 0.0, HOVER])
    if horiz > 0.003:
        wps.append(Waypoint(above, JAW_OPEN_CMD))
    wps.append(Waypoint(feature, JAW_OPEN_CMD))
    wps.append(Waypoint(feature, JAW_CLOSE_CMD, max_dwell=settle))
    return wps


def _needle_grasp_index(spec: TaskSpec) -> int:
    # Grasp near the blunt end so the tip leads when threading.
    return 4


def plan(spec: TaskSpec, state: SceneState, arm: int = 0) -> WaypointPlan:
    """Remaining waypoints for `arm` from the current privileged state."""
    name = spec.name
    ee = state.arms[arm].ee_pose.position
    attached = state.arms[arm].attached

    if name in ("needle_lift", "tissue_retraction"):
        target_id = "needle" if name == "needle_lift" else "tissue_marker"
        lift_base = ORGAN_TOP if name == "needle_lift" else TISSUE_TOP
        lift_z = lift_base + spec.success_params["h_lift"] + 0.015
        if attached != target_id:
            feat = _feature_point(spec, state, target_id, _needle_grasp_index(spec) if name == "needle_lift" else 0)
            wps = _grasp_waypoints(ee, feat)
        else:
            wps = [Waypoint(np.array([ee[0], ee[1], lift_z]), JAW_CLOSE_CMD)]
        return WaypointPlan(tuple(wps))

    if name == "needle_handover":
        return _plan_handover(spec, state, arm)

    if name == "suture_pad":
        nspec = get_needle_spec(spec.needle_name)
        tip_local = generate_needle(nspec)[-1]
        tip = state.objects["needle"].transform_points(tip_local.reshape(1, 3))[0]
        if attached != "needle":
            feat = _feature_point(spec, state, "needle", _needle_grasp_index(spec))
            return WaypointPlan(tuple(_grasp_waypoints(ee, feat)))
        # Steer the needle tip: gripper target = ee + (tip target - tip).
        # Phases (from the tip position): route to a staging point in front of
        # the pad, align with the hole axis, push through past the exit plane.
        pre_entry = np.array([HOLE_CENTER[0], HOLE_ENTRY_Y - 0.008, HOLE_CENTER[2]])
        through = np.array([HOLE_CENTER[0], HOLE_EXIT_Y + 0.008, HOLE_CENTER[2]])
        front = np.array([HOLE_CENTER[0], HOLE_ENTRY_Y - 0.030, HOLE_CENTER[2] + 0.028])
        radial = float(np.hypot(tip[0] - HOLE_CENTER[0], tip[2] - HOLE_CENTER[2]))
        if tip[1] >= HOLE_ENTRY_Y - 0.009 and radial > 0.002:
            wp = Waypoint(ee + (front - tip), JAW_CLOSE_CMD, tolerance=0.003)
        elif tip[1] < HOLE_ENTRY_Y - 0.009 and np.linalg.norm(tip - pre_entry) > 0.0012:
            wp = Waypoint(ee + (pre_entry - tip), JAW_CLOSE_CMD, tolerance=0.001)
        elif tip[1] <= HOLE_EXIT_Y + 0.005:
            wp = Waypoint(ee + (through - tip), JAW_CLOSE_CMD)
        else:
            wp = Waypoint(ee, JAW_CLOSE_CMD)
        return WaypointPlan((wp,))

    if name == "block_transfer":
        block = state.objects["block"].position
        goal = np.array(GOAL_PEG_POSITION)
        at_goal = np.linalg.norm(block[:2] - goal) <= 0.002
        carry_z = PEG_TOP + BLOCK_SIZE[2] / 2 + 0.01
        if attached != "block":
            if at_goal:
                # Done: retreat upward with the jaw open.
                home = np.array(ARM_HOME[name][0])
                return WaypointPlan((Waypoint(np.array([ee[0], ee[1], home[2]]), JAW_OPEN_CMD),))
            feat = _feature_point(spec, state, "block")
            return WaypointPlan(tuple(_grasp_waypoints(ee, feat)))
        grip_offset = ee - block
        wps = []
        if block[2] < carry_z - 0.001 and not at_goal:
            wps.append(Waypoint(np.array([ee[0], ee[1], carry_z + grip_offset[2]]), JAW_CLOSE_CMD))
        if not at_goal:
            wps.append(Waypoint(np.array([goal[0] + grip_offset[0], goal[1] + grip_offset[1],
                                          carry_z + grip_offset[2]]), JAW_CLOSE_CMD))
        wps.append(Waypoint(np.array([goal[0] + grip_offset[0], goal[1] + grip_offset[1],
                                      BLOCK_REST_Z + grip_offset[2]]), JAW_CLOSE_CMD, tolerance=0.001))
        wps.append(Waypoint(np.array([goal[0] + grip_offset[0], goal[1] + grip_offset[1],
                                      BLOCK_REST_Z + grip_offset[2]]), JAW_OPEN_CMD, max_dwell=4))
        return WaypointPlan(tuple(wps))

    raise ValueError(f"no expert for task {name!r}")


def _plan_handover(spec: TaskSpec, state: SceneState, arm: int) -> WaypointPlan:
    ee = state.arms[arm].ee_pose.position
    owner = state.attachment_owner("needle")
    needle_pts = None
    for oid, pts in grasp_features(spec, state.objects):
        if oid == "needle":
            needle_pts = pts
    right_ee = state.arms[0].ee_pose.position
    left_home = np.array(ARM_HOME[spec.name][1])

    if arm == 0:  # right arm: pick up, carry to the handover point, release
        if owner is None:
            feat = needle_pts[_needle_grasp_index(spec)]
            return WaypointPlan(tuple(_grasp_waypoints(ee, feat)))
        if owner == 0:
            return WaypointPlan((Waypoint(HANDOVER_POINT, JAW_CLOSE_CMD),))
        # Left arm has it: open and retreat toward home.
        home = np.array(ARM_HOME[spec.name][0])
        return WaypointPlan((Waypoint(home, JAW_OPEN_CMD),))

    # Left arm: wait until the needle is presented, then take the free end.
    if owner == 1:
        return WaypointPlan((Waypoint(left_home, JAW_CLOSE_CMD),))
    presented = owner == 0 and np.linalg.norm(right_ee - HANDOVER_POINT) < 0.004
    if not presented:
        return WaypointPlan((Waypoint(left_home, JAW_OPEN_CMD),))
    # Free end: the centerline endpoint farther from the right gripper.
    d0 = np.linalg.norm(needle_pts[0] - right_ee)
    d1 = np.linalg.norm(needle_pts[-1] - right_ee)
    feat = needle_pts[0] if d0 >= d1 else needle_pts[-1]
    side = feat + np.array([-0.012, 0.0, 0.0])  # stage left of the free end
    wps = []
    if np.linalg.norm(ee - feat) > 0.012:
        wps.append(Waypoint(side, JAW_OPEN_CMD, tolerance=0.004))
    wps.append(Waypoint(feat, JAW_OPEN_CMD, tolerance=0.0015))
    wps.append(Waypoint(feat, JAW_CLOSE_CMD, max_dwell=4))
    return WaypointPlan(tuple(wps))


def expert_action(spec: TaskSpec, state: SceneState) -> Action:
    """Proportional step toward each arm's current waypoint (clamped by step())."""
    dpos = np.zeros((spec.num_arms, 3))
    jaw = np.zeros(spec.num_arms, dtype=np.int64)
    for arm in range(spec.num_arms):
        wps = plan(spec, state, arm).waypoints
        ee = state.arms[arm].ee_pose.position
        # First unreached waypoint; if all are reached, hold at the last one
        # (its jaw command drives grasp/release to completion).
        wp = wps[-1]
        for cand in wps:
            if np.linalg.norm(cand.target_pos - ee) > cand.tolerance:
                wp = cand
                break
        err = wp.target_pos - ee
        if np.linalg.norm(err) > wp.tolerance:
            dpos[arm] = err  # full error; step() clamps to the limits
        jaw[arm] = wp.jaw_cmd
    return Action(dpos, np.zeros((spec.num_arms, 3)), jaw)


class ExpertPolicy:
    """Policy-interface wrapper so the evaluation harness can roll out experts."""

    def __init__(self, spec: TaskSpec):
        self.spec = spec

    def reset(self) -> None:
        pass

    def act(self, observation, state: SceneState) -> Action:
        return expert_action(self.spec, state)


def run_expert_episode(
    spec: TaskSpec,
    seed: int,
    noise_scale: float = 0.0,
    settle_steps: int = 5,
) -> tuple[SurgicalEnv, list[np.ndarray]]:
    """Roll the expert until success (plus settle) or horizon.

    Returns the env (with its trajectory) and the float32-canonical action
    vectors that were actually applied. Uniform noise of amplitude
    noise_scale * clamp is injected before clamping.
    """
    env = SurgicalEnv(spec)
    env.reset(seed)
    noise_rng = np.random.default_rng((seed + 1) * 7919)
    actions: list[np.ndarray] = []
    success_since = None
    while not env.done:
        action = expert_action(spec, env.state)
        if noise_scale > 0:
            dpos = action.dpos + noise_rng.uniform(
                -1, 1, action.dpos.shape
            ) * noise_scale * MAX_STEP_TRANSLATION
            drot = action.drot + noise_rng.uniform(
                -1, 1, action.drot.shape
            ) * noise_scale * MAX_STEP_ROTATION
            action = Action(dpos, drot, action.jaw)
        # Stored actions satisfy the clamps; replay re-applies the same bytes.
        vec = canonical_actions(clamp_action(action).to_vector())
        action = Action.from_vector(vec)
        env.step(action)
        actions.append(vec)
        if success_since is None and env.success():
            success_since = env.state.step_count
        if success_since is not None and env.state.step_count >= success_since + settle_steps:
            break
    return env, actions


def collect(
    task: TaskSpec,
    count: int,
    seed: int,
    noise_scale: float,
    out: str,
    rig: CameraRig | None = None,
    n_points: int = 512,
    record_frames: bool = True,
    min_attempts_before_abort: int = 10,
) -> DemonstrationSet:
    """Collect `count` successful expert demonstrations into a dataset.

    Failures are discarded and the seed advanced; aborts if the running
    success rate drops below 50% (a broken plan, not bad luck).
    """
    if count < 1:
        raise ValueError("count must be >= 1")
    if rig is None:
        rig = default_rig(task)
    ds = DemonstrationSet.create(out, task, rig, source="scripted")
    attempts = 0
    attempt_seed = seed
    while len(ds.manifest["episodes"]) < count:
        env, actions = run_expert_episode(task, attempt_seed, noise_scale)
        attempts += 1
        if env.success():
            ds.append(_record_episode(env, actions, attempt_seed, rig, n_points, record_frames))
        elif attempts >= min_attempts_before_abort and (
            len(ds.manifest["episodes"]) / attempts < 0.5
        ):
            raise RuntimeError(
                f"expert success rate {len(ds.manifest['episodes'])}/{attempts} below 50% "
                f"on {task.name}; aborting collection"
            )
        attempt_seed += 1
    return ds


def _record_episode(
    env: SurgicalEnv,
    actions: list[np.ndarray],
    seed: int,
    rig: CameraRig,
    n_points: int,
    record_frames: bool,
) -> Episode:
    spec = env.spec
    states = env.trajectory
    proprio = np.stack([get_proprio(s) for s in states]).astype(np.float32).astype(np.float64)
    frames: dict[str, dict[str, list]] = {}
    clouds = []
    if record_frames:
        for cam in rig.cameras:
            frames[cam.id] = {"rgb": [], "depth": [], "seg": []}
        for s in states[:-1]:  # one observation per executed action
            for cam in rig.cameras:
                fr = render(spec, s, cam)
                frames[cam.id]["rgb"].append(fr.rgb)
                frames[cam.id]["depth"].append(fr.depth)
                frames[cam.id]["seg"].append(fr.seg)
                if cam.id == rig.primary.id:
                    cloud = segmented_cloud(spec, s, fr, cam, n_points=n_points)
                    clouds.append(cloud.points.astype(np.float32))
    stacked = {
        cam_id: {k: np.stack(v) for k, v in arrs.items()} for cam_id, arrs in frames.items()
    }
    return Episode(
        spec=spec,
        seed=seed,
        actions=np.stack(actions),
        proprio=proprio,
        frames=stacked,
        cloud=np.stack(clouds) if clouds else None,
        success=True,
        source="scripted",
        rig=rig,
    )
