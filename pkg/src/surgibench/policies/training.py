"""Dataset tensorization, training loops, checkpoints, and inference wrappers."""

from __future__ import annotations

import hashlib
import json
import time
from collections import deque
from pathlib import Path

import numpy as np
import torch

from ..datasets.store import DemonstrationSet
from ..perception import Observation
from ..sim.types import Action
from .act import ACTModel, ActConfig, TemporalAggregator, act_train_step
from .diffusion import (
    DiffusionConfig,
    DiffusionPolicyModel,
    diffusion_sample,
    diffusion_train_step,
)
from .normalize import MinMaxNormalizer

MODEL_ACT = "act"
MODEL_DP3 = "dp3"


def dataset_checksum(ds: DemonstrationSet) -> str:
    h = hashlib.sha256()
    for e in ds.entries:
        h.update(e["checksum"].encode())
    return h.hexdigest()


def _pad_chunk(actions: np.ndarray, t: int, k: int) -> np.ndarray:
    """actions[t : t+k], padded by repeating the final action."""
    chunk = actions[t : t + k]
    if len(chunk) < k:
        chunk = np.concatenate([chunk, np.repeat(chunk[-1:], k - len(chunk), axis=0)])
    return chunk


class _LoadedData:
    """All episodes of a demonstration set in memory, plus normalizers."""

    def __init__(self, ds: DemonstrationSet, views: tuple[str, ...], need_cloud: bool):
        self.episodes = []
        all_actions, all_proprio, cloud_lo, cloud_hi = [], [], None, None
        for i in range(len(ds)):
            ep = ds.load_episode(i)
            entry = {
                "actions": ep.actions,
                "proprio": ep.proprio[:-1],
                "images": {v: ep.frames[v]["rgb"] for v in views},
            }
            if need_cloud:
                if ep.cloud is None:
                    raise ValueError(f"episode {i} has no stored point cloud")
                entry["cloud"] = ep.cloud.astype(np.float64)
                lo = entry["cloud"].reshape(-1, 3).min(axis=0)
                hi = entry["cloud"].reshape(-1, 3).max(axis=0)
                cloud_lo = lo if cloud_lo is None else np.minimum(cloud_lo, lo)
                cloud_hi = hi if cloud_hi is None else np.maximum(cloud_hi, hi)
            self.episodes.append(entry)
            all_actions.append(ep.actions)
            all_proprio.append(ep.proprio[:-1])
        self.action_norm = MinMaxNormalizer.fit(np.concatenate(all_actions))
        self.proprio_norm = MinMaxNormalizer.fit(np.concatenate(all_proprio))
        self.cloud_norm = (
            MinMaxNormalizer(cloud_lo, cloud_hi) if need_cloud else None
        )
        self.index = [
            (e, t) for e, ep in enumerate(self.episodes) for t in range(len(ep["actions"]))
        ]


def _rgb_to_tensor(rgb: np.ndarray) -> torch.Tensor:
    return torch.from_numpy(np.ascontiguousarray(rgb)).float().permute(0, 3, 1, 2) / 255.0


def train_act(
    ds: DemonstrationSet,
    space: str,
    out_dir: str | Path,
    epochs: int = 40,
    batch_size: int = 16,
    lr: float = 1e-4,
    seed: int = 0,
    chunk_size: int = 16,
    resolution: int = 128,
    log_every: int = 50,
    progress: bool = True,
) -> Path:
    """Train an ACT variant on a demonstration set; returns checkpoint dir."""
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)
    task = ds.task_spec()
    rig = ds.rig()
    if space == "single_camera":
        views: tuple[str, ...] = (rig.primary.id,)
    elif space == "multi_camera":
        views = tuple(c.id for c in rig.cameras)
    elif space == "point_cloud":
        views = ()
    else:
        raise ValueError(f"unknown space {space!r}")
    use_cloud = space == "point_cloud"
    data = _LoadedData(ds, views, need_cloud=use_cloud)

    sample = data.episodes[0]
    cfg = ActConfig(
        action_dim=sample["actions"].shape[1],
        proprio_dim=sample["proprio"].shape[1],
        views=views,
        use_pointcloud=use_cloud,
        chunk_size=chunk_size,
        resolution=resolution,
    )
    model = ACTModel(cfg)
    optimizer = torch.optim.AdamW(model.parameters(), lr=lr, weight_decay=1e-4)

    n = len(data.index)
    t0 = time.time()
    step_i = 0
    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch_idx = [data.index[j] for j in order[start : start + batch_size]]
            obs, proprio, actions = _act_batch(data, batch_idx, cfg)
            losses = act_train_step(model, optimizer, obs, proprio, actions)
            step_i += 1
            if progress and step_i % log_every == 0:
                print(
                    f"[act/{space}] epoch {epoch + 1}/{epochs} step {step_i} "
                    f"recon {losses['reconstruction']:.4f} kl {losses['kl']:.4f} "
                    f"({time.time() - t0:.0f}s)",
                    flush=True,
                )
    return save_checkpoint(
        out_dir,
        model_type=MODEL_ACT,
        model=model,
        config=cfg.to_dict(),
        data=data,
        ds=ds,
        space=space,
        extra={"epochs": epochs, "batch_size": batch_size, "lr": lr, "seed": seed},
    )


def _act_batch(data: _LoadedData, batch_idx, cfg: ActConfig):
    obs: dict = {}
    proprio, actions = [], []
    imgs = {v: [] for v in cfg.views}
    clouds = []
    for e, t in batch_idx:
        ep = data.episodes[e]
        proprio.append(data.proprio_norm.normalize(ep["proprio"][t]))
        actions.append(data.action_norm.normalize(_pad_chunk(ep["actions"], t, cfg.chunk_size)))
        for v in cfg.views:
            imgs[v].append(ep["images"][v][t])
        if cfg.use_pointcloud:
            clouds.append(data.cloud_norm.normalize(ep["cloud"][t]))
    for v in cfg.views:
        obs[v] = _rgb_to_tensor(np.stack(imgs[v]))
    if cfg.use_pointcloud:
        obs["points"] = torch.from_numpy(np.stack(clouds)).float()
    return obs, torch.from_numpy(np.stack(proprio)).float(), torch.from_numpy(
        np.stack(actions)
    ).float()


def train_diffusion(
    ds: DemonstrationSet,
    out_dir: str | Path,
    epochs: int = 120,
    batch_size: int = 32,
    lr: float = 3e-4,
    seed: int = 0,
    horizon: int = 16,
    n_exec: int = 8,
    log_every: int = 100,
    progress: bool = True,
) -> Path:
    """Train the point-cloud diffusion policy; returns checkpoint dir."""
    torch.manual_seed(seed)
    rng = np.random.default_rng(seed)
    gen = torch.Generator().manual_seed(seed)
    data = _LoadedData(ds, views=(), need_cloud=True)
    sample = data.episodes[0]
    cfg = DiffusionConfig(
        action_dim=sample["actions"].shape[1],
        proprio_dim=sample["proprio"].shape[1],
        horizon=horizon,
        n_exec=n_exec,
        n_points=sample["cloud"].shape[1],
    )
    model = DiffusionPolicyModel(cfg)
    optimizer = torch.optim.AdamW(model.parameters(), lr=lr, weight_decay=1e-6)

    n = len(data.index)
    t0 = time.time()
    step_i = 0
    for epoch in range(epochs):
        order = rng.permutation(n)
        for start in range(0, n, batch_size):
            batch_idx = [data.index[j] for j in order[start : start + batch_size]]
            points, proprio, x0 = _diffusion_batch(data, batch_idx, cfg)
            losses = diffusion_train_step(model, optimizer, points, proprio, x0, generator=gen)
            step_i += 1
            if progress and step_i % log_every == 0:
                print(
                    f"[dp3] epoch {epoch + 1}/{epochs} step {step_i} "
                    f"mse {losses['mse']:.5f} ({time.time() - t0:.0f}s)",
                    flush=True,
                )
    return save_checkpoint(
        out_dir,
        model_type=MODEL_DP3,
        model=model,
        config=cfg.to_dict(),
        data=data,
        ds=ds,
        space="point_cloud",
        extra={"epochs": epochs, "batch_size": batch_size, "lr": lr, "seed": seed},
    )


def _diffusion_batch(data: _LoadedData, batch_idx, cfg: DiffusionConfig):
    points, proprio, chunks = [], [], []
    for e, t in batch_idx:
        ep = data.episodes[e]
        hist_ts = [max(0, t - i) for i in range(cfg.obs_history - 1, -1, -1)]
        points.append(np.stack([data.cloud_norm.normalize(ep["cloud"][h]) for h in hist_ts]))
        proprio.append(np.stack([data.proprio_norm.normalize(ep["proprio"][h]) for h in hist_ts]))
        chunks.append(data.action_norm.normalize(_pad_chunk(ep["actions"], t, cfg.horizon)))
    return (
        torch.from_numpy(np.stack(points)).float(),
        torch.from_numpy(np.stack(proprio)).float(),
        torch.from_numpy(np.stack(chunks)).float(),
    )


def save_checkpoint(
    out_dir: str | Path,
    model_type: str,
    model: torch.nn.Module,
    config: dict,
    data: _LoadedData,
    ds: DemonstrationSet,
    space: str,
    extra: dict,
) -> Path:
    out_dir = Path(out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    torch.save(model.state_dict(), out_dir / "model.pt")
    sidecar = {
        "model_type": model_type,
        "config": config,
        "space": space,
        "task": ds.manifest["task"],
        "normalizers": {
            "action": data.action_norm.to_dict(),
            "proprio": data.proprio_norm.to_dict(),
            "cloud": data.cloud_norm.to_dict() if data.cloud_norm else None,
        },
        "dataset_checksum": dataset_checksum(ds),
        "training": extra,
        "train_seeds": ds.seeds(),
    }
    (out_dir / "checkpoint.json").write_text(json.dumps(sidecar, indent=2))
    return out_dir


def load_policy(checkpoint_dir: str | Path):
    """Instantiate the right inference wrapper from a checkpoint directory."""
    checkpoint_dir = Path(checkpoint_dir)
    sidecar = json.loads((checkpoint_dir / "checkpoint.json").read_text())
    if sidecar["model_type"] == MODEL_ACT:
        return ActPolicy(checkpoint_dir, sidecar)
    if sidecar["model_type"] == MODEL_DP3:
        return DP3Policy(checkpoint_dir, sidecar)
    raise ValueError(f"unknown model type {sidecar['model_type']!r}")


class ActPolicy:
    """ACT inference: fresh chunk each step + temporal aggregation.

    The style latent is fixed to the zero vector at inference.
    """

    def __init__(self, checkpoint_dir: Path, sidecar: dict):
        self.sidecar = sidecar
        self.cfg = ActConfig.from_dict(sidecar["config"])
        self.model = ACTModel(self.cfg)
        self.model.load_state_dict(torch.load(checkpoint_dir / "model.pt", weights_only=True))
        self.model.eval()
        norms = sidecar["normalizers"]
        self.action_norm = MinMaxNormalizer.from_dict(norms["action"])
        self.proprio_norm = MinMaxNormalizer.from_dict(norms["proprio"])
        self.cloud_norm = (
            MinMaxNormalizer.from_dict(norms["cloud"]) if norms["cloud"] else None
        )
        self.space = sidecar["space"]
        self.aggregator = TemporalAggregator(self.cfg.chunk_size, self.cfg.aggregation_m)

    def reset(self, seed: int | None = None) -> None:
        self.aggregator.reset()

    @torch.no_grad()
    def act(self, observation: Observation, state=None) -> Action:
        obs: dict = {}
        for v in self.cfg.views:
            obs[v] = _rgb_to_tensor(observation.frames[v][None])
        if self.cfg.use_pointcloud:
            pts = self.cloud_norm.normalize(observation.pointcloud.points)
            obs["points"] = torch.from_numpy(pts[None]).float()
        proprio = torch.from_numpy(
            self.proprio_norm.normalize(observation.proprio)[None]
        ).float()
        latent = torch.zeros(1, self.cfg.latent_dim)
        chunk = self.model.decode(obs, proprio, latent)[0].numpy().astype(np.float64)
        self.aggregator.push(chunk)
        action_vec = self.action_norm.denormalize(self.aggregator.pop_action())
        return Action.from_vector(action_vec)


class DP3Policy:
    """Diffusion inference: re-plan every n_exec steps from an obs history."""

    def __init__(self, checkpoint_dir: Path, sidecar: dict):
        self.sidecar = sidecar
        self.cfg = DiffusionConfig.from_dict(sidecar["config"])
        self.model = DiffusionPolicyModel(self.cfg)
        self.model.load_state_dict(torch.load(checkpoint_dir / "model.pt", weights_only=True))
        self.model.eval()
        norms = sidecar["normalizers"]
        self.action_norm = MinMaxNormalizer.from_dict(norms["action"])
        self.proprio_norm = MinMaxNormalizer.from_dict(norms["proprio"])
        self.cloud_norm = MinMaxNormalizer.from_dict(norms["cloud"])
        self.space = "point_cloud"
        self.reset()

    def reset(self, seed: int | None = None) -> None:
        self.history: deque = deque(maxlen=self.cfg.obs_history)
        self.queue: deque = deque()
        self.generator = torch.Generator().manual_seed(seed if seed is not None else 0)

    @torch.no_grad()
    def act(self, observation: Observation, state=None) -> Action:
        pts = self.cloud_norm.normalize(observation.pointcloud.points)
        q = self.proprio_norm.normalize(observation.proprio)
        self.history.append((pts, q))
        if not self.queue:
            hist = list(self.history)
            while len(hist) < self.cfg.obs_history:
                hist.insert(0, hist[0])
            points = torch.from_numpy(np.stack([h[0] for h in hist])[None]).float()
            proprio = torch.from_numpy(np.stack([h[1] for h in hist])[None]).float()
            cond = self.model.encode_conditioning(points, proprio)
            chunk = diffusion_sample(self.model, cond, generator=self.generator)[0].numpy()
            for i in range(self.cfg.n_exec):
                self.queue.append(chunk[i].astype(np.float64))
        action_vec = self.action_norm.denormalize(self.queue.popleft())
        return Action.from_vector(action_vec)
