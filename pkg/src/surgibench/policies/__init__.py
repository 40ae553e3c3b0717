"""Learned policies: ACT variants and a point-cloud diffusion policy."""

from .act import (
    ACTModel,
    ActConfig,
    TemporalAggregator,
    act_train_step,
    aggregate_chunks,
    kl_standard_normal,
)
from .diffusion import (
    ConditionalUnet1D,
    DiffusionConfig,
    DiffusionPolicyModel,
    DiffusionSchedule,
    cosine_alpha_bar,
    diffusion_sample,
    diffusion_train_step,
    q_sample,
    sampling_timesteps,
)
from .encoders import ImageEncoder, PointNetEncoder, sinusoidal_embedding_2d
from .normalize import MinMaxNormalizer
from .training import (
    ActPolicy,
    DP3Policy,
    dataset_checksum,
    load_policy,
    train_act,
    train_diffusion,
)

__all__ = [
    "ACTModel",
    "ActConfig",
    "ActPolicy",
    "ConditionalUnet1D",
    "DP3Policy",
    "DiffusionConfig",
    "DiffusionPolicyModel",
    "DiffusionSchedule",
    "ImageEncoder",
    "MinMaxNormalizer",
    "PointNetEncoder",
    "TemporalAggregator",
    "act_train_step",
    "aggregate_chunks",
    "cosine_alpha_bar",
    "dataset_checksum",
    "diffusion_sample",
    "diffusion_train_step",
    "kl_standard_normal",
    "load_policy",
    "q_sample",
    "sampling_timesteps",
    "sinusoidal_embedding_2d",
    "train_act",
    "train_diffusion",
]
