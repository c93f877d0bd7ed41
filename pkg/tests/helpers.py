"""Samplers shared across test modules."""

from __future__ import annotations

import numpy as np

from coneguard.cone import Obstacle
from coneguard.dynamics import QuadrotorState


def random_state(rng, att_max=1.0, speed=2.0, rate=2.0):
    """A generic state with attitude bounded away from the pitch singularity."""
    vec = np.concatenate(
        [
            rng.uniform(-3.0, 3.0, size=3),
            rng.uniform(-speed, speed, size=3),
            rng.uniform(-att_max, att_max, size=3),
            rng.uniform(-rate, rate, size=3),
        ]
    )
    return QuadrotorState.from_vector(vec)


def random_thrusts(rng, params, spread=0.5):
    base = params.hover_thrust
    return base * rng.uniform(1.0 - spread, 1.0 + spread, size=4)


def random_sphere(rng, center_scale=4.0, radius_range=(0.1, 0.6)):
    return Obstacle(
        kind="sphere",
        center=tuple(rng.uniform(-center_scale, center_scale, size=3)),
        radius_raw=float(rng.uniform(*radius_range)),
        velocity=tuple(rng.uniform(-1.0, 1.0, size=3)),
    )


def random_cylinder(rng, center_scale=4.0, radius_range=(0.1, 0.6)):
    # axis fixed to +z: that's the only orientation the built-in scenarios
    # use, and the projection math is axis-agnostic anyway
    return Obstacle(
        kind="cylinder",
        center=tuple(rng.uniform(-center_scale, center_scale, size=3)),
        radius_raw=float(rng.uniform(*radius_range)),
        axis=(0.0, 0.0, 1.0),
        height=2.0,
        velocity=tuple(rng.uniform(-1.0, 1.0, size=3)),
    )
