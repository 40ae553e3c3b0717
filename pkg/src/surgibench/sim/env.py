"""Deterministic kinematic stepping, grasp/attachment logic, success predicates."""

from __future__ import annotations

import numpy as np

from ..errors import ConfigurationError, EpisodeOverError
from ..geometry import Pose, quat_from_axis_angle, quat_multiply, quat_normalize
from .needles import generate_needle, get_needle_spec
from .tasks import (
    ARM_HOME,
    BLOCK_SIZE,
    GOAL_PEG_POSITION,
    GRASPABLE,
    HOLE_CENTER,
    HOLE_ENTRY_Y,
    HOLE_EXIT_Y,
    PEG_POSITIONS,
    PEG_TOP,
    TABLE_Z,
    nominal_object_poses,
    rest_height,
)
from .types import (
    EPS_GRASP,
    JAW_CLOSE_CMD,
    JAW_CLOSE_THRESHOLD,
    JAW_MAX,
    JAW_OPEN_CMD,
    JAW_RATE,
    MAX_STEP_ROTATION,
    MAX_STEP_TRANSLATION,
    Action,
    ArmState,
    SceneState,
    TaskSpec,
)


def reset_task(spec: TaskSpec, seed: int) -> SceneState:
    """Sample an initial scene. Identical (spec, seed) gives identical state."""
    if seed < 0:
        raise ValueError("seed must be non-negative")
    rng = np.random.default_rng(seed)
    objects = nominal_object_poses(spec)

    def offset(object_id: str, dx: float = 0.0, dy: float = 0.0):
        p = objects[object_id]
        objects[object_id] = Pose(p.position + np.array([dx, dy, 0.0]), p.orientation)

    r = spec.randomization
    if spec.name == "tissue_retraction":
        offset("tissue_marker", dx=rng.uniform(-r["marker_x"], r["marker_x"]))
    elif spec.name in ("needle_lift", "needle_handover"):
        offset("needle", dx=rng.uniform(-r["x"], r["x"]), dy=rng.uniform(-r["y"], r["y"]))
    elif spec.name == "suture_pad":
        offset("needle", dx=rng.uniform(-r["x"], r["x"]))
    elif spec.name == "block_transfer":
        peg = int(rng.integers(0, int(r["num_start_pegs"])))
        x, y = PEG_POSITIONS[peg]
        p = objects["block"]
        objects["block"] = Pose(np.array([x, y, p.position[2]]), p.orientation)
    else:
        raise ConfigurationError(f"unknown task {spec.name!r}")

    arms = tuple(
        ArmState(ee_pose=Pose(np.array(home)), jaw=JAW_MAX) for home in ARM_HOME[spec.name]
    )
    return SceneState(arms=arms, objects=objects, step_count=0, rng_state=rng.bit_generator.state)


def clamp_action(action: Action) -> Action:
    """Scale each arm's dpos/drot down to the per-step limits."""
    dpos = action.dpos.copy()
    drot = action.drot.copy()
    for i in range(action.num_arms):
        np_norm = np.linalg.norm(dpos[i])
        if np_norm > MAX_STEP_TRANSLATION:
            dpos[i] *= MAX_STEP_TRANSLATION / np_norm
        r_norm = np.linalg.norm(drot[i])
        if r_norm > MAX_STEP_ROTATION:
            drot[i] *= MAX_STEP_ROTATION / r_norm
    return Action(dpos, drot, action.jaw)


def grasp_features(spec: TaskSpec, objects: dict[str, Pose]) -> list[tuple[str, np.ndarray]]:
    """World-frame graspable feature points per graspable object, sorted by id."""
    feats = []
    for oid in sorted(GRASPABLE[spec.name]):
        pose = objects[oid]
        if oid == "needle":
            local = generate_needle(get_needle_spec(spec.needle_name))
        elif oid == "block":
            local = np.array([[0.0, 0.0, BLOCK_SIZE[2] / 2]])
        else:  # tissue_marker
            local = np.zeros((1, 3))
        feats.append((oid, pose.transform_points(local)))
    return feats


def step(spec: TaskSpec, state: SceneState, action: Action) -> SceneState:
    """Advance one control step; pure function of (spec, state, action)."""
    if state.step_count >= spec.horizon:
        raise EpisodeOverError(f"horizon {spec.horizon} reached")
    if action.num_arms != len(state.arms):
        raise ValueError("action arm count mismatch")
    action = clamp_action(action)

    objects = dict(state.objects)
    new_arms: list[ArmState] = []
    for i, arm in enumerate(state.arms):
        pos = arm.ee_pose.position + action.dpos[i]
        dq = quat_from_axis_angle(action.drot[i])
        quat = quat_normalize(quat_multiply(dq, arm.ee_pose.orientation))
        ee = Pose(pos, quat)

        cmd = int(action.jaw[i])
        jaw_target = 0.0 if cmd == JAW_CLOSE_CMD else JAW_MAX
        jaw = arm.jaw + np.clip(jaw_target - arm.jaw, -JAW_RATE, JAW_RATE)

        attached = arm.attached
        attach_offset = arm.attach_offset
        attach_distance = arm.attach_distance
        if attached is not None and cmd == JAW_OPEN_CMD:
            # Release: the object settles straight down to its rest height.
            dropped = objects[attached]
            objects[attached] = Pose(
                np.array([dropped.position[0], dropped.position[1], rest_height(spec, attached)]),
                dropped.orientation,
            )
            attached, attach_offset, attach_distance = None, None, 0.0
        new_arms.append(
            ArmState(
                ee_pose=ee,
                jaw=float(jaw),
                attached=attached,
                attach_offset=attach_offset,
                attach_distance=attach_distance,
            )
        )

    # Attached objects move rigidly with their gripper.
    for i, arm in enumerate(new_arms):
        if arm.attached is not None:
            objects[arm.attached] = arm.ee_pose.compose(arm.attach_offset)

    # Grasp acquisition; an object held by another arm may be taken over
    # (this is how a handover completes).
    for i, arm in enumerate(new_arms):
        if arm.attached is not None or int(action.jaw[i]) != JAW_CLOSE_CMD:
            continue
        if arm.jaw > JAW_CLOSE_THRESHOLD:
            continue
        grasp_point = arm.ee_pose.position
        best: tuple[float, str] | None = None
        for oid, pts in grasp_features(spec, objects):
            d = float(np.min(np.linalg.norm(pts - grasp_point, axis=1)))
            if d <= EPS_GRASP and (best is None or d < best[0]):
                best = (d, oid)
        if best is None:
            continue
        d, oid = best
        for j, other in enumerate(new_arms):
            if other.attached == oid:
                new_arms[j] = ArmState(
                    ee_pose=other.ee_pose, jaw=other.jaw, attached=None
                )
        new_arms[i] = ArmState(
            ee_pose=arm.ee_pose,
            jaw=arm.jaw,
            attached=oid,
            attach_offset=arm.ee_pose.inverse().compose(objects[oid]),
            attach_distance=d,
        )

    return SceneState(
        arms=tuple(new_arms),
        objects=objects,
        step_count=state.step_count + 1,
        rng_state=state.rng_state,
    )


def get_proprio(state: SceneState) -> np.ndarray:
    """Per arm [position(3), quaternion(4), jaw(1)], concatenated."""
    parts = []
    for arm in state.arms:
        parts.extend([arm.ee_pose.position, arm.ee_pose.orientation, [arm.jaw]])
    return np.concatenate(parts)


def proprio_to_arm_fields(vec: np.ndarray) -> list[tuple[np.ndarray, np.ndarray, float]]:
    vec = np.asarray(vec, dtype=np.float64)
    if len(vec) % 8 != 0:
        raise ValueError("proprio length must be a multiple of 8")
    out = []
    for i in range(len(vec) // 8):
        a = vec[8 * i : 8 * (i + 1)]
        out.append((a[0:3], a[3:7], float(a[7])))
    return out


def _needle_z(state: SceneState) -> float:
    return float(state.objects["needle"].position[2])


def check_success(spec: TaskSpec, trajectory: list[SceneState]) -> bool:
    """Per-task success predicate over a full state trajectory (total function)."""
    if not trajectory:
        raise ValueError("trajectory must be nonempty")
    name = spec.name
    p = spec.success_params

    if name == "tissue_retraction":
        z0 = float(trajectory[0].objects["tissue_marker"].position[2])
        for state in trajectory:
            owner = state.attachment_owner("tissue_marker")
            if owner is None:
                continue
            arm = state.arms[owner]
            if arm.attach_distance > p["grasp_tol"]:
                continue
            if state.objects["tissue_marker"].position[2] >= z0 + p["h_lift"]:
                return True
        return False

    if name == "needle_lift":
        z0 = _needle_z(trajectory[0])
        for state in trajectory:
            if state.attachment_owner("needle") is not None:
                if _needle_z(state) >= z0 + p["h_lift"]:
                    return True
        return False

    if name == "needle_handover":
        # Arm 0 (right) must hold first, arm 1 (left) later; the needle must
        # never go below the table plane.
        if any(_needle_z(s) < TABLE_Z - 1e-9 for s in trajectory):
            return False
        seen_right = False
        for state in trajectory:
            owner = state.attachment_owner("needle")
            if owner == 0:
                seen_right = True
            elif owner == 1 and seen_right:
                return True
        return False

    if name == "suture_pad":
        needle_spec = get_needle_spec(spec.needle_name)
        tip_local = generate_needle(needle_spec)[-1]
        hole_r = p["hole_radius"]
        entered = False
        prev_tip = None
        prev_grasped = False
        for state in trajectory:
            tip = state.objects["needle"].transform_points(tip_local.reshape(1, 3))[0]
            grasped = state.attachment_owner("needle") is not None
            radial = float(np.hypot(tip[0] - HOLE_CENTER[0], tip[2] - HOLE_CENTER[2]))
            if prev_tip is not None and grasped and prev_grasped and radial <= hole_r:
                if prev_tip[1] < HOLE_ENTRY_Y <= tip[1]:
                    entered = True
                if entered and prev_tip[1] < HOLE_EXIT_Y <= tip[1]:
                    return True
            prev_tip, prev_grasped = tip, grasped
        return False

    if name == "block_transfer":
        final = trajectory[-1]
        block = final.objects["block"].position
        goal = np.array(GOAL_PEG_POSITION)
        if final.attachment_owner("block") is not None:
            return False
        if np.linalg.norm(block[:2] - goal) > p["r_peg"]:
            return False
        return bool(block[2] <= PEG_TOP)

    raise ConfigurationError(f"unknown task {name!r}")


class SurgicalEnv:
    """Convenience wrapper binding a TaskSpec; records the state trajectory."""

    def __init__(self, spec: TaskSpec):
        self.spec = spec
        self.state: SceneState | None = None
        self.trajectory: list[SceneState] = []

    def reset(self, seed: int) -> SceneState:
        self.state = reset_task(self.spec, seed)
        self.trajectory = [self.state]
        return self.state

    def step(self, action: Action) -> SceneState:
        if self.state is None:
            raise RuntimeError("call reset() first")
        self.state = step(self.spec, self.state, action)
        self.trajectory.append(self.state)
        return self.state

    @property
    def done(self) -> bool:
        return self.state is not None and self.state.step_count >= self.spec.horizon

    def success(self) -> bool:
        return check_success(self.spec, self.trajectory)
