"""On-disk demonstration storage: episode directories + checksummed manifest.

Dataset root layout:
    manifest.json
    episode_0000/
        actions.f32  proprio.f32  rgb_<cam>.u8  depth_<cam>.f32
        seg_<cam>.i32  [cloud.f32]  meta

Episodes are written to a temp directory and atomically renamed, so readers
never observe half-written episodes. All arrays round-trip bitwise; actions
are float32-canonical (the simulator consumed exactly the stored values), so
replaying an episode from its seed reproduces the recorded proprioception
exactly.
"""

from __future__ import annotations

import hashlib
import json
import os
import shutil
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

import numpy as np

from ..rendering.camera import CameraRig
from ..sim.env import check_success, get_proprio, reset_task, step
from ..sim.tasks import task_spec_from_dict, task_spec_to_dict
from ..sim.types import Action, TaskSpec
from .rawarray import read_array, write_array

FORMAT_VERSION = 1


def canonical_actions(vec: np.ndarray) -> np.ndarray:
    """Round an action vector to float32 precision (the stored precision)."""
    return np.asarray(vec, dtype=np.float32).astype(np.float64)


@dataclass
class Episode:
    spec: TaskSpec
    seed: int
    actions: np.ndarray  # (T, A) float32-exact values
    proprio: np.ndarray  # (T+1, 8 * num_arms), state before each action + final
    frames: dict[str, dict[str, np.ndarray]]  # cam-id -> {rgb, depth, seg}, length T
    cloud: Optional[np.ndarray]  # (T, N, 3) or None
    success: bool
    source: str  # "scripted" or "teleop"
    rig: CameraRig

    @property
    def length(self) -> int:
        return len(self.actions)


def _file_checksum(path: Path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as f:
        for chunk in iter(lambda: f.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def episode_checksum(ep_dir: Path) -> str:
    """Checksum over every file in the episode directory, sorted by name."""
    h = hashlib.sha256()
    for p in sorted(ep_dir.iterdir()):
        h.update(p.name.encode())
        h.update(bytes.fromhex(_file_checksum(p)))
    return h.hexdigest()


def write_episode(episode: Episode, root: str | Path, index: int) -> dict:
    """Write `episode_<index>` under root atomically; return its manifest entry."""
    root = Path(root)
    root.mkdir(parents=True, exist_ok=True)
    name = f"episode_{index:04d}"
    tmp = root / f".tmp_{name}"
    if tmp.exists():
        shutil.rmtree(tmp)
    tmp.mkdir()
    write_array(tmp / "actions.f32", episode.actions.astype("<f4"))
    write_array(tmp / "proprio.f32", episode.proprio.astype("<f4"))
    for cam_id, arrs in episode.frames.items():
        write_array(tmp / f"rgb_{cam_id}.u8", arrs["rgb"])
        write_array(tmp / f"depth_{cam_id}.f32", arrs["depth"].astype("<f4"))
        write_array(tmp / f"seg_{cam_id}.i32", arrs["seg"].astype("<i4"))
    if episode.cloud is not None:
        write_array(tmp / "cloud.f32", episode.cloud.astype("<f4"))
    meta = {
        "format_version": FORMAT_VERSION,
        "task": task_spec_to_dict(episode.spec),
        "seed": episode.seed,
        "source": episode.source,
        "success": episode.success,
        "rig": episode.rig.to_dict(),
        "length": episode.length,
        "cameras": sorted(episode.frames),
        "has_cloud": episode.cloud is not None,
    }
    (tmp / "meta").write_text(json.dumps(meta, indent=2))
    final = root / name
    if final.exists():
        shutil.rmtree(final)
    os.replace(tmp, final)
    return {"name": name, "seed": episode.seed, "success": episode.success,
            "source": episode.source, "length": episode.length,
            "checksum": episode_checksum(final)}


def read_episode(ep_dir: str | Path) -> Episode:
    ep_dir = Path(ep_dir)
    meta = json.loads((ep_dir / "meta").read_text())
    frames = {}
    for cam_id in meta["cameras"]:
        frames[cam_id] = {
            "rgb": read_array(ep_dir / f"rgb_{cam_id}.u8"),
            "depth": read_array(ep_dir / f"depth_{cam_id}.f32"),
            "seg": read_array(ep_dir / f"seg_{cam_id}.i32"),
        }
    cloud = read_array(ep_dir / "cloud.f32") if meta["has_cloud"] else None
    return Episode(
        spec=task_spec_from_dict(meta["task"]),
        seed=meta["seed"],
        actions=read_array(ep_dir / "actions.f32").astype(np.float64),
        proprio=read_array(ep_dir / "proprio.f32").astype(np.float64),
        frames=frames,
        cloud=cloud,
        success=meta["success"],
        source=meta["source"],
        rig=CameraRig.from_dict(meta["rig"]),
    )


class DemonstrationSet:
    """A dataset root plus the (possibly subsampled) episode selection."""

    def __init__(self, root: str | Path, manifest: dict, indices: list[int] | None = None):
        self.root = Path(root)
        self.manifest = manifest
        self.indices = list(range(len(manifest["episodes"]))) if indices is None else indices

    def __len__(self) -> int:
        return len(self.indices)

    @property
    def entries(self) -> list[dict]:
        return [self.manifest["episodes"][i] for i in self.indices]

    def episode_dir(self, i: int) -> Path:
        return self.root / self.manifest["episodes"][self.indices[i]]["name"]

    def load_episode(self, i: int) -> Episode:
        return read_episode(self.episode_dir(i))

    def seeds(self) -> list[int]:
        return [e["seed"] for e in self.entries]

    @staticmethod
    def open(root: str | Path) -> "DemonstrationSet":
        root = Path(root)
        manifest = json.loads((root / "manifest.json").read_text())
        names = sorted(p.name for p in root.iterdir() if p.name.startswith("episode_"))
        listed = [e["name"] for e in manifest["episodes"]]
        if names != listed:
            raise ValueError(f"manifest lists {len(listed)} episodes, directory has {len(names)}")
        return DemonstrationSet(root, manifest)

    @staticmethod
    def create(root: str | Path, task: TaskSpec, rig: CameraRig, source: str) -> "DemonstrationSet":
        root = Path(root)
        root.mkdir(parents=True, exist_ok=True)
        manifest = {
            "format_version": FORMAT_VERSION,
            "task": task_spec_to_dict(task),
            "source": source,
            "rig": rig.to_dict(),
            "episode_count": 0,
            "episodes": [],
        }
        ds = DemonstrationSet(root, manifest)
        ds.save_manifest()
        return ds

    def append(self, episode: Episode) -> dict:
        index = len(self.manifest["episodes"])
        entry = write_episode(episode, self.root, index)
        self.manifest["episodes"].append(entry)
        self.manifest["episode_count"] = len(self.manifest["episodes"])
        self.indices.append(index)
        self.save_manifest()
        return entry

    def save_manifest(self) -> None:
        tmp = self.root / ".manifest.json.tmp"
        tmp.write_text(json.dumps(self.manifest, indent=2))
        os.replace(tmp, self.root / "manifest.json")

    def task_spec(self) -> TaskSpec:
        return task_spec_from_dict(self.manifest["task"])

    def rig(self) -> CameraRig:
        return CameraRig.from_dict(self.manifest["rig"])

    def verify_checksums(self) -> list[str]:
        """Return names of episodes whose on-disk bytes fail their checksum."""
        bad = []
        for e in self.entries:
            if episode_checksum(self.root / e["name"]) != e["checksum"]:
                bad.append(e["name"])
        return bad

    def subsample(self, n: int, seed: int) -> "DemonstrationSet":
        """Uniform subset without replacement with the nesting property:
        subsample(n1, s).indices is a prefix of subsample(n2, s).indices for
        n1 <= n2 (both drawn from the same seeded permutation)."""
        if not 1 <= n <= len(self):
            raise ValueError(f"n must be in [1, {len(self)}], got {n}")
        perm = np.random.default_rng(seed).permutation(len(self.indices))
        chosen = [self.indices[int(i)] for i in perm[:n]]
        return DemonstrationSet(self.root, self.manifest, chosen)

    def validate(self) -> dict:
        """Replay every episode through the simulator and verify it.

        Reports the max deviation between the replayed final proprioception
        (at stored float32 precision) and the stored one, plus recomputed
        success flags. Episodes with deviation > 1e-9, success mismatch, or a
        failing checksum are listed as invalid.
        """
        bad_checksum = set(self.verify_checksums())
        report = {"episodes": [], "invalid": [], "max_deviation": 0.0}
        for i in range(len(self)):
            entry = self.entries[i]
            result = {"name": entry["name"]}
            if entry["name"] in bad_checksum:
                result["error"] = "checksum mismatch"
                report["invalid"].append(entry["name"])
                report["episodes"].append(result)
                continue
            ep = self.load_episode(i)
            state = reset_task(ep.spec, ep.seed)
            trajectory = [state]
            for t in range(ep.length):
                state = step(ep.spec, state, Action.from_vector(ep.actions[t]))
                trajectory.append(state)
            replayed = get_proprio(state).astype(np.float32).astype(np.float64)
            deviation = float(np.abs(replayed - ep.proprio[-1]).max())
            success = check_success(ep.spec, trajectory)
            result["deviation"] = deviation
            result["success_match"] = success == ep.success
            if deviation > 1e-9 or not result["success_match"]:
                report["invalid"].append(entry["name"])
            report["max_deviation"] = max(report["max_deviation"], deviation)
            report["episodes"].append(result)
        report["valid"] = not report["invalid"]
        return report
