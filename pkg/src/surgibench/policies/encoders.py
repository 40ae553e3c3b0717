"""Visual feature encoders: per-view convolutional backbone and point encoder.

Images go through an 18-layer residual network (one independent instance per
camera view, trained from scratch); the final stride-32 feature map becomes
flattened tokens with 2-D sinusoidal positional embeddings. Point clouds go
through a shared per-point MLP; the token variant feeds per-point features
(plus coordinate-based positional embeddings) to a transformer, the pooled
variant max-pools into a single global feature.
"""

from __future__ import annotations

import math

import torch
import torch.nn as nn
from torchvision.models import resnet18


def sinusoidal_embedding_2d(h: int, w: int, dim: int) -> torch.Tensor:
    """(h*w, dim) fixed 2-D sine/cosine position embedding."""
    if dim % 4 != 0:
        raise ValueError("embedding dim must be divisible by 4")
    quarter = dim // 4
    omega = torch.exp(-math.log(10000.0) * torch.arange(quarter) / quarter)
    ys, xs = torch.meshgrid(torch.arange(h).float(), torch.arange(w).float(), indexing="ij")
    out = []
    for coord in (ys.flatten(), xs.flatten()):
        ang = coord[:, None] * omega[None, :]
        out.extend([torch.sin(ang), torch.cos(ang)])
    return torch.cat(out, dim=1)


class ImageEncoder(nn.Module):
    """Residual conv backbone -> (B, tokens, hidden) with positional embeddings."""

    def __init__(self, hidden_dim: int = 256, resolution: int = 128):
        super().__init__()
        backbone = resnet18(weights=None)
        # Keep everything up to the final stride-32 feature map.
        self.body = nn.Sequential(*list(backbone.children())[:-2])
        self.proj = nn.Conv2d(512, hidden_dim, kernel_size=1)
        side = resolution // 32
        self.num_tokens = side * side
        self.register_buffer(
            "pos_embed", sinusoidal_embedding_2d(side, side, hidden_dim), persistent=False
        )
        self.resolution = resolution

    def forward(self, rgb: torch.Tensor) -> torch.Tensor:
        """rgb: (B, 3, H, W) float in [0, 1]."""
        if rgb.shape[-1] != self.resolution or rgb.shape[-2] != self.resolution:
            raise ValueError(f"expected {self.resolution}x{self.resolution}, got {rgb.shape}")
        feat = self.proj(self.body(rgb))  # (B, D, h, w)
        tokens = feat.flatten(2).transpose(1, 2)  # (B, h*w, D)
        return tokens + self.pos_embed[None]


class PointNetEncoder(nn.Module):
    """Shared per-point MLP; token or max-pooled global output."""

    def __init__(self, hidden_dim: int = 256, widths: tuple[int, ...] = (64, 128)):
        super().__init__()
        layers: list[nn.Module] = []
        in_dim = 3
        for w in widths:
            layers += [nn.Linear(in_dim, w), nn.LayerNorm(w), nn.ReLU()]
            in_dim = w
        layers += [nn.Linear(in_dim, hidden_dim)]
        self.mlp = nn.Sequential(*layers)
        self.pos_proj = nn.Linear(3, hidden_dim)

    def point_features(self, points: torch.Tensor) -> torch.Tensor:
        """points: (B, N, 3) -> per-point features (B, N, D)."""
        return self.mlp(points)

    def tokens(self, points: torch.Tensor) -> torch.Tensor:
        """Per-point features plus coordinate positional embeddings."""
        return self.point_features(points) + self.pos_proj(points)

    def pooled(self, points: torch.Tensor) -> torch.Tensor:
        """Symmetric max-pool over points -> (B, D); permutation invariant."""
        return self.point_features(points).max(dim=1).values
