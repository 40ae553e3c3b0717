"""WebSocket bridge for human teleoperation and demonstration recording.

The server exposes one live environment session over a WebSocket. The
simulation advances only when the client sends an `action` message (lockstep),
so teleoperated episodes replay exactly like scripted ones. Recorded episodes
are appended to a standard demonstration set and pass the same replay
validation as scripted data.

Protocol (JSON text frames):
  client -> server: hello | action {dpos:[3], drot:[3], jaw:0|1, arm:0|1}
                    | record {cmd: start|stop|save} | reset {seed}
  server -> client: spec | state | frame (base64 PNG, reduced rate)
                    | error {code, msg}
"""

from __future__ import annotations

import asyncio
import base64
import io
import json
import logging
from pathlib import Path

import numpy as np

from .datasets.store import DemonstrationSet, Episode, canonical_actions
from .rendering.camera import CameraRig, default_rig
from .rendering.render import render
from .perception import segmented_cloud, DEFAULT_CLOUD_SIZE
from .sim.env import SurgicalEnv, get_proprio
from .sim.tasks import task_spec_to_dict
from .sim.types import (
    Action,
    CONTROL_RATE_HZ,
    MAX_STEP_ROTATION,
    MAX_STEP_TRANSLATION,
    TaskSpec,
)

logger = logging.getLogger(__name__)


def encode_state_message(scene, success: bool = False, recording: bool = False) -> dict:
    """Structured snapshot of the scene; pose floats round-trip exactly."""
    return {
        "type": "state",
        "step_count": scene.step_count,
        "success": bool(success),
        "recording": bool(recording),
        "proprio": get_proprio(scene).tolist(),
        "objects": {
            name: {
                "position": pose.position.tolist(),
                "orientation": pose.orientation.tolist(),
            }
            for name, pose in sorted(scene.objects.items())
        },
        "arms": [
            {
                "position": arm.ee_pose.position.tolist(),
                "orientation": arm.ee_pose.orientation.tolist(),
                "jaw": arm.jaw,
                "attached": arm.attached,
            }
            for arm in scene.arms
        ],
    }


def encode_frame_message(spec: TaskSpec, scene, camera) -> dict:
    """Primary-camera RGB as base64 PNG."""
    from PIL import Image

    fr = render(spec, scene, camera)
    buf = io.BytesIO()
    Image.fromarray(fr.rgb).save(buf, format="PNG")
    return {
        "type": "frame",
        "camera": camera.id,
        "step_count": scene.step_count,
        "png": base64.b64encode(buf.getvalue()).decode("ascii"),
    }


def parse_action_message(msg: dict, num_arms: int, jaw_state: list[float]) -> Action:
    """Validate an `action` message and build a full-scene Action.

    The addressed arm gets the commanded deltas; other arms hold position and
    keep their previous jaw command (tracked in `jaw_state`, updated in place).
    """
    arm = msg.get("arm", 0)
    if not isinstance(arm, int) or not 0 <= arm < num_arms:
        raise ValueError(f"arm must be an integer in [0, {num_arms})")
    dpos = np.asarray(msg["dpos"], dtype=np.float64)
    drot = np.asarray(msg["drot"], dtype=np.float64)
    if dpos.shape != (3,) or drot.shape != (3,):
        raise ValueError("dpos and drot must each have 3 elements")
    if not (np.all(np.isfinite(dpos)) and np.all(np.isfinite(drot))):
        raise ValueError("dpos/drot must be finite")
    jaw_cmd = msg["jaw"]
    if jaw_cmd not in (0, 1):
        raise ValueError("jaw must be 0 or 1")
    jaw_state[arm] = float(jaw_cmd)
    full_dpos = np.zeros((num_arms, 3))
    full_drot = np.zeros((num_arms, 3))
    full_dpos[arm] = dpos
    full_drot[arm] = drot
    return Action(dpos=full_dpos, drot=full_drot, jaw=np.array(jaw_state))


class TeleopSession:
    """One environment + optional in-progress recording."""

    def __init__(self, spec: TaskSpec, rig: CameraRig | None = None,
                 dataset_root: str | Path | None = None, frame_stride: int = 5,
                 n_points: int = DEFAULT_CLOUD_SIZE):
        self.spec = spec
        self.rig = rig if rig is not None else default_rig(spec)
        self.env = SurgicalEnv(spec)
        self.frame_stride = max(1, frame_stride)
        self.n_points = n_points
        self.dataset_root = Path(dataset_root) if dataset_root else None
        self.dataset: DemonstrationSet | None = None
        self.seed: int | None = None
        self.recording = False
        self.recorded_actions: list[np.ndarray] = []

    def reset(self, seed: int) -> None:
        if not isinstance(seed, int) or seed < 0:
            raise ValueError("seed must be a non-negative integer")
        self.env.reset(seed)
        self.seed = seed
        self.recording = False
        self.recorded_actions = []

    def step(self, action: Action) -> None:
        if self.env.state is None:
            raise ValueError("reset the session before stepping")
        vec = canonical_actions(action.to_vector())
        self.env.step(Action.from_vector(vec))
        if self.recording:
            self.recorded_actions.append(vec)

    def record_start(self) -> None:
        if self.env.state is None or self.env.state.step_count != 0:
            raise ValueError("recording must start immediately after a reset")
        self.recording = True
        self.recorded_actions = []

    def record_stop(self) -> None:
        self.recording = False

    def record_save(self) -> dict:
        """Finish the recording and append it to the session dataset."""
        if not self.recorded_actions:
            raise ValueError("nothing recorded")
        if self.dataset_root is None:
            raise ValueError("server started without a dataset directory")
        if self.dataset is None:
            manifest = self.dataset_root / "manifest.json"
            if manifest.exists():
                self.dataset = DemonstrationSet.open(self.dataset_root)
            else:
                self.dataset = DemonstrationSet.create(
                    self.dataset_root, self.spec, self.rig, source="teleop"
                )
        episode = self._build_episode()
        entry = self.dataset.append(episode)
        self.recording = False
        self.recorded_actions = []
        return entry

    def _build_episode(self) -> Episode:
        states = self.env.trajectory
        proprio = np.stack([get_proprio(s) for s in states]).astype(np.float32).astype(np.float64)
        frames: dict[str, dict[str, list]] = {
            cam.id: {"rgb": [], "depth": [], "seg": []} for cam in self.rig.cameras
        }
        clouds = []
        for s in states[:-1]:
            for cam in self.rig.cameras:
                fr = render(self.spec, s, cam)
                frames[cam.id]["rgb"].append(fr.rgb)
                frames[cam.id]["depth"].append(fr.depth)
                frames[cam.id]["seg"].append(fr.seg)
                if cam.id == self.rig.primary.id:
                    cloud = segmented_cloud(self.spec, s, fr, cam, n_points=self.n_points)
                    clouds.append(cloud.points.astype(np.float32))
        stacked = {
            cid: {k: np.stack(v) for k, v in arrs.items()} for cid, arrs in frames.items()
        }
        return Episode(
            spec=self.spec,
            seed=self.seed,
            actions=np.stack(self.recorded_actions),
            proprio=proprio,
            frames=stacked,
            cloud=np.stack(clouds) if clouds else None,
            success=self.env.success(),
            source="teleop",
            rig=self.rig,
        )


class TeleopServer:
    def __init__(self, spec: TaskSpec, rate_hz: float = 6.0,
                 dataset_root: str | Path | None = None,
                 rig: CameraRig | None = None, send_frames: bool = True):
        frame_stride = max(1, int(round(CONTROL_RATE_HZ / max(rate_hz, 0.1))))
        self.session = TeleopSession(spec, rig=rig, dataset_root=dataset_root,
                                     frame_stride=frame_stride)
        self.rate_hz = rate_hz
        self.send_frames = send_frames
        self._client = None
        self._jaw_state = [0.0] * spec.num_arms

    def spec_message(self) -> dict:
        return {
            "type": "spec",
            "task": task_spec_to_dict(self.session.spec),
            "rig": self.session.rig.to_dict(),
            "rate_hz": self.rate_hz,
            "control_rate_hz": CONTROL_RATE_HZ,
            "limits": {
                "max_step_translation": MAX_STEP_TRANSLATION,
                "max_step_rotation": MAX_STEP_ROTATION,
            },
        }

    async def handler(self, websocket) -> None:
        if self._client is not None:
            await websocket.send(json.dumps(
                {"type": "error", "code": "busy", "msg": "another client is connected"}
            ))
            await websocket.close(code=1013, reason="busy")
            return
        self._client = websocket
        try:
            async for raw in websocket:
                reply = self.handle_message(raw)
                for msg in reply:
                    await websocket.send(json.dumps(msg))
        finally:
            self._client = None

    def handle_message(self, raw: str) -> list[dict]:
        """Pure message dispatch; returns the ordered replies. Malformed input
        yields an error reply and leaves the session untouched."""
        try:
            msg = json.loads(raw)
            if not isinstance(msg, dict) or "type" not in msg:
                raise ValueError("message must be an object with a `type` field")
        except (json.JSONDecodeError, ValueError) as e:
            return [{"type": "error", "code": "bad_message", "msg": str(e)}]
        try:
            return self._dispatch(msg)
        except (KeyError, TypeError, ValueError) as e:
            return [{"type": "error", "code": "bad_message", "msg": str(e)}]
        except Exception as e:  # session survives unexpected failures
            logger.exception("teleop message failed")
            return [{"type": "error", "code": "internal", "msg": str(e)}]

    def _dispatch(self, msg: dict) -> list[dict]:
        session = self.session
        kind = msg["type"]
        if kind == "hello":
            return [self.spec_message()]
        if kind == "reset":
            session.reset(msg["seed"])
            self._jaw_state = [0.0] * session.spec.num_arms
            return self._state_replies(force_frame=True)
        if kind == "action":
            if session.env.state is None:
                raise ValueError("send reset before actions")
            action = parse_action_message(msg, session.spec.num_arms, self._jaw_state)
            session.step(action)
            return self._state_replies()
        if kind == "record":
            cmd = msg["cmd"]
            if cmd == "start":
                session.record_start()
            elif cmd == "stop":
                session.record_stop()
            elif cmd == "save":
                entry = session.record_save()
                return [{"type": "record", "cmd": "saved", "episode": entry["name"],
                         "length": int(entry["length"]), "success": bool(entry["success"])}]
            else:
                raise ValueError(f"unknown record cmd {cmd!r}")
            return [{"type": "record", "cmd": cmd, "recording": session.recording}]
        raise ValueError(f"unknown message type {msg['type']!r}")

    def _state_replies(self, force_frame: bool = False) -> list[dict]:
        session = self.session
        state = session.env.state
        replies = [encode_state_message(state, session.env.success(), session.recording)]
        if self.send_frames and (
            force_frame or state.step_count % session.frame_stride == 0
        ):
            replies.append(encode_frame_message(session.spec, state, session.rig.primary))
        return replies


async def serve(spec: TaskSpec, port: int, rate_hz: float = 6.0,
                dataset_root: str | Path | None = None, host: str = "127.0.0.1"):
    """Start the WebSocket endpoint; returns the running server object."""
    import websockets.asyncio.server

    server = TeleopServer(spec, rate_hz=rate_hz, dataset_root=dataset_root)
    ws_server = await websockets.asyncio.server.serve(server.handler, host, port)
    logger.info("teleop server for %s on ws://%s:%d", spec.name, host, port)
    return ws_server


def run_server(spec: TaskSpec, port: int, rate_hz: float = 6.0,
               dataset_root: str | Path | None = None, host: str = "127.0.0.1") -> None:
    """Blocking entry point used by the CLI."""

    async def main():
        ws_server = await serve(spec, port, rate_hz, dataset_root, host)
        await ws_server.wait_closed()

    asyncio.run(main())
