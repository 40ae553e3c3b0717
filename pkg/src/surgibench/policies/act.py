"""Action-chunking CVAE transformer with temporal aggregation at inference.

The CVAE encoder summarizes (proprioception, ground-truth action chunk) into a
style latent; the decoder attends over vision/point tokens + proprio + style
and emits a k-step action chunk from learned queries. Training loss is
L1(chunk) + beta * KL(N(mu, sigma^2) || N(0, I)). At inference the style
latent is the zero vector and overlapping chunk predictions are blended with
exponential age weights.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import torch
import torch.nn as nn

from .encoders import ImageEncoder, PointNetEncoder


@dataclass
class ActConfig:
    action_dim: int
    proprio_dim: int
    views: tuple[str, ...] = ("top",)  # empty for the point-cloud variant
    use_pointcloud: bool = False
    chunk_size: int = 16
    hidden_dim: int = 256
    latent_dim: int = 32
    n_heads: int = 4
    ff_dim: int = 512
    enc_layers: int = 2
    dec_layers: int = 3
    dropout: float = 0.1
    beta: float = 10.0
    resolution: int = 128
    aggregation_m: float = 0.01

    def to_dict(self) -> dict:
        d = self.__dict__.copy()
        d["views"] = list(self.views)
        return d

    @staticmethod
    def from_dict(d: dict) -> "ActConfig":
        d = dict(d)
        d["views"] = tuple(d["views"])
        return ActConfig(**d)


def kl_standard_normal(mu: torch.Tensor, logvar: torch.Tensor) -> torch.Tensor:
    """KL(N(mu, sigma^2) || N(0, I)) summed over latent dims, mean over batch."""
    return 0.5 * (mu.pow(2) + logvar.exp() - 1.0 - logvar).sum(dim=-1).mean()


class ACTModel(nn.Module):
    def __init__(self, cfg: ActConfig):
        super().__init__()
        self.cfg = cfg
        d = cfg.hidden_dim

        # CVAE encoder over [cls, proprio, action chunk].
        self.enc_action_proj = nn.Linear(cfg.action_dim, d)
        self.enc_proprio_proj = nn.Linear(cfg.proprio_dim, d)
        self.enc_cls = nn.Parameter(torch.zeros(1, 1, d))
        self.enc_pos = nn.Parameter(torch.zeros(1, cfg.chunk_size + 2, d))
        enc_layer = nn.TransformerEncoderLayer(
            d, cfg.n_heads, cfg.ff_dim, cfg.dropout, batch_first=True, norm_first=False
        )
        self.cvae_encoder = nn.TransformerEncoder(enc_layer, cfg.enc_layers)
        self.latent_head = nn.Linear(d, 2 * cfg.latent_dim)

        # Observation encoders.
        self.image_encoders = nn.ModuleDict(
            {view: ImageEncoder(d, cfg.resolution) for view in cfg.views}
        )
        self.point_encoder = PointNetEncoder(d) if cfg.use_pointcloud else None
        self.view_embed = nn.ParameterDict(
            {view: nn.Parameter(torch.zeros(1, 1, d)) for view in cfg.views}
        )

        # Decoder: transformer encoder over conditioning tokens, then a
        # transformer decoder driven by k learned chunk queries.
        self.dec_proprio_proj = nn.Linear(cfg.proprio_dim, d)
        self.latent_proj = nn.Linear(cfg.latent_dim, d)
        dec_enc_layer = nn.TransformerEncoderLayer(
            d, cfg.n_heads, cfg.ff_dim, cfg.dropout, batch_first=True, norm_first=False
        )
        self.cond_encoder = nn.TransformerEncoder(dec_enc_layer, cfg.enc_layers)
        dec_layer = nn.TransformerDecoderLayer(
            d, cfg.n_heads, cfg.ff_dim, cfg.dropout, batch_first=True, norm_first=False
        )
        self.decoder = nn.TransformerDecoder(dec_layer, cfg.dec_layers)
        self.chunk_queries = nn.Parameter(torch.zeros(1, cfg.chunk_size, d))
        nn.init.normal_(self.chunk_queries, std=0.02)
        self.action_head = nn.Linear(d, cfg.action_dim)

    def encode_style(self, proprio: torch.Tensor, actions: torch.Tensor):
        """(B, P), (B, k, A) -> (mu, logvar), each (B, L)."""
        b = proprio.shape[0]
        tokens = torch.cat(
            [
                self.enc_cls.expand(b, -1, -1),
                self.enc_proprio_proj(proprio)[:, None],
                self.enc_action_proj(actions),
            ],
            dim=1,
        ) + self.enc_pos
        out = self.cvae_encoder(tokens)[:, 0]
        mu, logvar = self.latent_head(out).chunk(2, dim=-1)
        return mu, logvar

    def _conditioning_tokens(self, obs: dict, proprio: torch.Tensor, latent: torch.Tensor):
        tokens = [self.latent_proj(latent)[:, None], self.dec_proprio_proj(proprio)[:, None]]
        for view in self.cfg.views:
            tok = self.image_encoders[view](obs[view])
            tokens.append(tok + self.view_embed[view])
        if self.point_encoder is not None:
            tokens.append(self.point_encoder.tokens(obs["points"]))
        return torch.cat(tokens, dim=1)

    def decode(self, obs: dict, proprio: torch.Tensor, latent: torch.Tensor) -> torch.Tensor:
        """Predict a (B, k, A) chunk from observations and a style latent."""
        memory = self.cond_encoder(self._conditioning_tokens(obs, proprio, latent))
        b = proprio.shape[0]
        out = self.decoder(self.chunk_queries.expand(b, -1, -1), memory)
        return self.action_head(out)

    def forward(self, obs: dict, proprio: torch.Tensor, actions: torch.Tensor):
        mu, logvar = self.encode_style(proprio, actions)
        latent = mu + torch.exp(0.5 * logvar) * torch.randn_like(mu)
        pred = self.decode(obs, proprio, latent)
        return pred, mu, logvar


def act_train_step(
    model: ACTModel,
    optimizer: torch.optim.Optimizer,
    obs: dict,
    proprio: torch.Tensor,
    actions: torch.Tensor,
) -> dict:
    """One gradient step; returns {reconstruction, kl, total} floats."""
    model.train()
    pred, mu, logvar = model(obs, proprio, actions)
    recon = torch.nn.functional.l1_loss(pred, actions)
    kl = kl_standard_normal(mu, logvar)
    loss = recon + model.cfg.beta * kl
    if not torch.isfinite(loss):
        raise FloatingPointError(
            f"non-finite ACT loss (recon={recon.item()}, kl={kl.item()}); "
            f"batch shapes: proprio {tuple(proprio.shape)}, actions {tuple(actions.shape)}"
        )
    optimizer.zero_grad()
    loss.backward()
    optimizer.step()
    return {
        "reconstruction": float(recon.detach()),
        "kl": float(kl.detach()),
        "total": float(loss.detach()),
    }


def aggregate_chunks(predictions: list[tuple[int, np.ndarray]], m: float) -> np.ndarray:
    """Blend same-timestep predictions with weights exp(-m * age), normalized.

    `predictions` is a list of (age, action) pairs, age 0 = newest. Weights
    always sum to 1 after normalization.
    """
    if not predictions:
        raise ValueError("no predictions to aggregate")
    ages = np.array([age for age, _ in predictions], dtype=np.float64)
    acts = np.stack([a for _, a in predictions])
    w = np.exp(-m * ages)
    w = w / w.sum()
    return (w[:, None] * acts).sum(axis=0)


class TemporalAggregator:
    """Buffers per-step chunk predictions and emits the blended action."""

    def __init__(self, chunk_size: int, m: float):
        self.chunk_size = chunk_size
        self.m = m
        self.reset()

    def reset(self) -> None:
        self._chunks: list[tuple[int, np.ndarray]] = []  # (t_predicted, (k, A))
        self._t = 0

    def push(self, chunk: np.ndarray) -> None:
        self._chunks.append((self._t, np.asarray(chunk)))

    def pop_action(self) -> np.ndarray:
        t = self._t
        preds = []
        for t0, chunk in self._chunks:
            offset = t - t0
            if 0 <= offset < self.chunk_size:
                preds.append((t - t0, chunk[offset]))
        action = aggregate_chunks(preds, self.m)
        self._t += 1
        self._chunks = [(t0, c) for t0, c in self._chunks if t + 1 - t0 < self.chunk_size]
        return action
