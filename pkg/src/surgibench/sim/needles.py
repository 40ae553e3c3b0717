"""Suture needle geometry: arc centerlines and the N1-N5 instance registry.

N1 is the training needle; N2-N5 are held-out variants of differing size and
shape used for instance-generalization evaluation. The parameter table is a
declared artifact default, not measured from any physical needle set.
"""

from __future__ import annotations

import math

import numpy as np

from ..errors import ConfigurationError
from .types import NeedleSpec

NEEDLE_SAMPLES = 24  # centerline resolution used for grasp features and rendering


def generate_needle(spec: NeedleSpec, samples: int = NEEDLE_SAMPLES) -> np.ndarray:
    """Sample `samples` centerline points of the needle in its local frame.

    The ideal arc lies in the local xy-plane, bending toward -y, with the arc
    midpoint at the local origin. Index 0 is the blunt end, index -1 the tip.
    Every centerline point is a graspable feature.
    """
    if samples < 2:
        raise ConfigurationError("need at least 2 centerline samples")
    u = np.linspace(0.0, 1.0, samples)
    s = (u - 0.5) * spec.arc_angle
    r = spec.arc_radius
    pts = np.stack([r * np.sin(s), r * np.cos(s) - r, np.zeros_like(s)], axis=1)
    for i, (axis, amp) in enumerate(spec.irregularity):
        pts[:, axis] += amp * np.sin((i + 1) * math.pi * u)
    return pts


def needle_tip(spec: NeedleSpec, samples: int = NEEDLE_SAMPLES) -> np.ndarray:
    return generate_needle(spec, samples)[-1]


NEEDLE_REGISTRY: dict[str, NeedleSpec] = {
    "N1": NeedleSpec(arc_radius=0.012, arc_angle=3 * math.pi / 4, name="N1"),
    "N2": NeedleSpec(arc_radius=0.008, arc_angle=3 * math.pi / 4, wire_radius=0.0005, name="N2"),
    "N3": NeedleSpec(arc_radius=0.009, arc_angle=2 * math.pi / 3, wire_radius=0.0005, name="N3"),
    "N4": NeedleSpec(
        arc_radius=0.012,
        arc_angle=3 * math.pi / 4,
        irregularity=((2, 0.0015),),
        name="N4",
    ),
    "N5": NeedleSpec(
        arc_radius=0.014,
        arc_angle=5 * math.pi / 6,
        irregularity=((2, 0.001), (0, 0.001)),
        name="N5",
    ),
}


def get_needle_spec(name: str) -> NeedleSpec:
    try:
        return NEEDLE_REGISTRY[name]
    except KeyError:
        raise ConfigurationError(f"unknown needle {name!r}; known: {sorted(NEEDLE_REGISTRY)}")
