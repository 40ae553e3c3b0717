"""Per-dimension min-max normalization to [-1, 1], stored with checkpoints."""

from __future__ import annotations

import numpy as np


class MinMaxNormalizer:
    def __init__(self, low: np.ndarray, high: np.ndarray):
        self.low = np.asarray(low, dtype=np.float64)
        self.high = np.asarray(high, dtype=np.float64)
        # Constant dimensions normalize to 0 and denormalize back to `low`.
        self.range = np.maximum(self.high - self.low, 1e-8)

    @staticmethod
    def fit(data: np.ndarray) -> "MinMaxNormalizer":
        data = np.asarray(data, dtype=np.float64).reshape(-1, data.shape[-1])
        return MinMaxNormalizer(data.min(axis=0), data.max(axis=0))

    def normalize(self, x: np.ndarray) -> np.ndarray:
        return 2.0 * (np.asarray(x, dtype=np.float64) - self.low) / self.range - 1.0

    def denormalize(self, x: np.ndarray) -> np.ndarray:
        return (np.asarray(x, dtype=np.float64) + 1.0) / 2.0 * self.range + self.low

    def to_dict(self) -> dict:
        return {"low": self.low.tolist(), "high": self.high.tolist()}

    @staticmethod
    def from_dict(d: dict) -> "MinMaxNormalizer":
        return MinMaxNormalizer(np.array(d["low"]), np.array(d["high"]))
