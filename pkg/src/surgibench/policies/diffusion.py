"""Sample-predicting diffusion policy over action chunks.

A 1-D temporal U-Net conditioned on a pooled point-cloud feature plus
proprioception predicts the clean chunk x0 directly (not the noise). Training
minimizes MSE(x0_hat, x0) at random noise levels; sampling runs ancestral
denoising over a strided subset of the schedule, re-deriving each transition
mean from the predicted x0.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import torch
import torch.nn as nn

from .encoders import PointNetEncoder


@dataclass
class DiffusionSchedule:
    """Monotone alpha-bar sequence; prediction mode is always `sample`."""

    t_train: int = 100
    alpha_bar: np.ndarray | None = None

    def __post_init__(self):
        if self.alpha_bar is None:
            self.alpha_bar = cosine_alpha_bar(self.t_train)
        self.alpha_bar = np.asarray(self.alpha_bar, dtype=np.float64)
        if len(self.alpha_bar) != self.t_train:
            raise ValueError("alpha_bar length must equal t_train")
        if not np.all(np.diff(self.alpha_bar) < 0):
            raise ValueError("alpha_bar must be strictly decreasing")
        if not (0 < self.alpha_bar[-1] and self.alpha_bar[0] <= 1.0):
            raise ValueError("alpha_bar values must lie in (0, 1]")


def cosine_alpha_bar(t_train: int, offset: float = 0.008) -> np.ndarray:
    """Squared-cosine cumulative schedule; alpha_bar[0] close to 1."""
    t = np.arange(1, t_train + 1) / t_train
    f = np.cos((t + offset) / (1 + offset) * math.pi / 2) ** 2
    f0 = math.cos(offset / (1 + offset) * math.pi / 2) ** 2
    return np.clip(f / f0, 1e-5, 1.0 - 1e-7)


def q_sample(
    x0: torch.Tensor, t: torch.Tensor, noise: torch.Tensor, schedule: DiffusionSchedule
) -> torch.Tensor:
    """Forward process: x_t = sqrt(abar_t) * x0 + sqrt(1 - abar_t) * noise."""
    t = torch.as_tensor(t, dtype=torch.long)
    if torch.any(t < 0) or torch.any(t >= schedule.t_train):
        raise ValueError(f"t out of range [0, {schedule.t_train})")
    abar = torch.as_tensor(schedule.alpha_bar, dtype=x0.dtype, device=x0.device)[t]
    while abar.dim() < x0.dim():
        abar = abar.unsqueeze(-1)
    return torch.sqrt(abar) * x0 + torch.sqrt(1.0 - abar) * noise


def timestep_embedding(t: torch.Tensor, dim: int) -> torch.Tensor:
    half = dim // 2
    freqs = torch.exp(-math.log(10000.0) * torch.arange(half, device=t.device) / half)
    ang = t.float()[:, None] * freqs[None]
    return torch.cat([torch.sin(ang), torch.cos(ang)], dim=-1)


class FiLMBlock(nn.Module):
    def __init__(self, in_ch: int, out_ch: int, cond_dim: int):
        super().__init__()
        self.conv1 = nn.Conv1d(in_ch, out_ch, 3, padding=1)
        self.conv2 = nn.Conv1d(out_ch, out_ch, 3, padding=1)
        self.norm1 = nn.GroupNorm(8, out_ch)
        self.norm2 = nn.GroupNorm(8, out_ch)
        self.act = nn.Mish()
        self.film = nn.Linear(cond_dim, 2 * out_ch)
        self.skip = nn.Conv1d(in_ch, out_ch, 1) if in_ch != out_ch else nn.Identity()

    def forward(self, x: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        h = self.act(self.norm1(self.conv1(x)))
        scale, shift = self.film(cond)[:, :, None].chunk(2, dim=1)
        h = h * (1 + scale) + shift
        h = self.act(self.norm2(self.conv2(h)))
        return h + self.skip(x)


class ConditionalUnet1D(nn.Module):
    """Temporal U-Net over (B, A, H) chunks with FiLM conditioning."""

    def __init__(self, action_dim: int, cond_dim: int, widths: tuple[int, ...] = (64, 128, 256)):
        super().__init__()
        t_dim = 64
        self.t_mlp = nn.Sequential(nn.Linear(t_dim, 128), nn.Mish(), nn.Linear(128, cond_dim))
        self.t_dim = t_dim
        full_cond = 2 * cond_dim  # timestep embedding + observation conditioning

        self.downs = nn.ModuleList()
        in_ch = action_dim
        for w in widths:
            self.downs.append(FiLMBlock(in_ch, w, full_cond))
            in_ch = w
        self.pool = nn.AvgPool1d(2)
        self.mid = FiLMBlock(widths[-1], widths[-1], full_cond)
        self.ups = nn.ModuleList()
        for w_skip, w_out in zip(reversed(widths), list(reversed(widths))[1:] + [widths[0]]):
            self.ups.append(FiLMBlock(w_skip * 2, w_out, full_cond))
        self.head = nn.Conv1d(widths[0], action_dim, 1)

    def forward(self, x: torch.Tensor, t: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        c = torch.cat([self.t_mlp(timestep_embedding(t, self.t_dim)), cond], dim=-1)
        skips = []
        h = x
        for block in self.downs:
            h = block(h, c)
            skips.append(h)
            h = self.pool(h)
        h = self.mid(h, c)
        for block in self.ups:
            h = nn.functional.interpolate(h, scale_factor=2, mode="nearest")
            h = block(torch.cat([h, skips.pop()], dim=1), c)
        return self.head(h)


@dataclass
class DiffusionConfig:
    action_dim: int
    proprio_dim: int
    horizon: int = 16  # predicted chunk length H
    n_exec: int = 8  # actions executed before re-planning
    n_points: int = 512
    obs_history: int = 2
    cond_dim: int = 256
    t_train: int = 100
    inference_steps: int = 10
    widths: tuple[int, ...] = (64, 128, 256)

    def to_dict(self) -> dict:
        d = self.__dict__.copy()
        d["widths"] = list(self.widths)
        return d

    @staticmethod
    def from_dict(d: dict) -> "DiffusionConfig":
        d = dict(d)
        d["widths"] = tuple(d["widths"])
        return DiffusionConfig(**d)


class DiffusionPolicyModel(nn.Module):
    """Point-cloud conditioned sample-predicting diffusion model."""

    def __init__(self, cfg: DiffusionConfig):
        super().__init__()
        self.cfg = cfg
        self.point_encoder = PointNetEncoder(cfg.cond_dim)
        self.proprio_proj = nn.Linear(cfg.proprio_dim, 64)
        per_frame = cfg.cond_dim + 64
        self.cond_proj = nn.Sequential(
            nn.Linear(per_frame * cfg.obs_history, cfg.cond_dim), nn.Mish(),
            nn.Linear(cfg.cond_dim, cfg.cond_dim),
        )
        self.unet = ConditionalUnet1D(cfg.action_dim, cfg.cond_dim, cfg.widths)
        self.schedule = DiffusionSchedule(cfg.t_train)

    def encode_conditioning(self, points: torch.Tensor, proprio: torch.Tensor) -> torch.Tensor:
        """points: (B, hist, N, 3); proprio: (B, hist, P) -> (B, cond_dim).

        Depth-only conditioning: no RGB features enter this pathway.
        """
        b, hist = points.shape[:2]
        feats = []
        for i in range(hist):
            pooled = self.point_encoder.pooled(points[:, i])
            feats.append(torch.cat([pooled, self.proprio_proj(proprio[:, i])], dim=-1))
        return self.cond_proj(torch.cat(feats, dim=-1))

    def predict_x0(self, x_t: torch.Tensor, t: torch.Tensor, cond: torch.Tensor) -> torch.Tensor:
        """x_t: (B, H, A) noisy chunk -> predicted clean chunk (B, H, A)."""
        return self.unet(x_t.transpose(1, 2), t, cond).transpose(1, 2)


def diffusion_train_step(
    model: DiffusionPolicyModel,
    optimizer: torch.optim.Optimizer,
    points: torch.Tensor,
    proprio: torch.Tensor,
    x0: torch.Tensor,
    generator: torch.Generator | None = None,
) -> dict:
    """One gradient step of MSE(x0_hat, x0) at a random noise level."""
    model.train()
    b = x0.shape[0]
    t = torch.randint(0, model.schedule.t_train, (b,), generator=generator)
    noise = torch.randn(x0.shape, generator=generator, dtype=x0.dtype)
    x_t = q_sample(x0, t, noise, model.schedule)
    cond = model.encode_conditioning(points, proprio)
    x0_hat = model.predict_x0(x_t, t, cond)
    loss = torch.nn.functional.mse_loss(x0_hat, x0)
    if not torch.isfinite(loss):
        raise FloatingPointError(f"non-finite diffusion loss; batch {tuple(x0.shape)}")
    optimizer.zero_grad()
    loss.backward()
    optimizer.step()
    return {"mse": float(loss.detach())}


def sampling_timesteps(t_train: int, inference_steps: int) -> list[int]:
    """Strided descending step subset; degenerates to the full schedule."""
    steps = np.linspace(t_train - 1, 0, min(inference_steps, t_train))
    return sorted({int(round(s)) for s in steps}, reverse=True)


@torch.no_grad()
def diffusion_sample(
    model: DiffusionPolicyModel,
    cond: torch.Tensor,
    inference_steps: int | None = None,
    generator: torch.Generator | None = None,
    eta: float = 1.0,
) -> torch.Tensor:
    """Ancestral sampling from pure noise; transitions re-derived from x0_hat.

    eta = 1 gives stochastic (DDPM-like) transitions, eta = 0 deterministic.
    Returns a (B, H, A) chunk in normalized action space.
    """
    model.eval()
    cfg = model.cfg
    sched = model.schedule
    steps = sampling_timesteps(sched.t_train, inference_steps or cfg.inference_steps)
    b = cond.shape[0]
    x = torch.randn((b, cfg.horizon, cfg.action_dim), generator=generator)
    for i, t in enumerate(steps):
        t_batch = torch.full((b,), t, dtype=torch.long)
        x0_hat = model.predict_x0(x, t_batch, cond)
        abar_t = float(sched.alpha_bar[t])
        if i + 1 == len(steps):
            x = x0_hat
            break
        s = steps[i + 1]
        abar_s = float(sched.alpha_bar[s])
        sigma = eta * math.sqrt((1 - abar_s) / (1 - abar_t) * (1 - abar_t / abar_s))
        eps = (x - math.sqrt(abar_t) * x0_hat) / math.sqrt(1 - abar_t)
        dir_coeff = math.sqrt(max(1 - abar_s - sigma**2, 0.0))
        x = math.sqrt(abar_s) * x0_hat + dir_coeff * eps
        if sigma > 0:
            x = x + sigma * torch.randn(x.shape, generator=generator)
    return x
