"""Mountain Car with the classic constants.  All functions accept batches."""
from __future__ import annotations

import numpy as np

REVERSE, COAST, FORWARD = 0, 1, 2
N_ACTIONS = 3
POS_BOUNDS = (-1.2, 0.5)
VEL_BOUNDS = (-0.07, 0.07)
GOAL = 0.5
START_RANGE = (-0.6, -0.4)


def mountain_car_reset(seed=None, size: int | None = None) -> np.ndarray:
    """Start state(s) [position, velocity] with position ~ U[-0.6, -0.4), velocity 0.

    ``seed`` may be an int or a ``numpy.random.Generator``.
    """
    rng = seed if isinstance(seed, np.random.Generator) else np.random.default_rng(seed)
    shape = () if size is None else (size,)
    pos = rng.uniform(*START_RANGE, size=shape)
    return np.stack([pos, np.zeros(shape)], axis=-1)


def start_from_uniform(u) -> np.ndarray:
    """Start state(s) from pre-drawn uniforms in [0, 1)."""
    u = np.asarray(u, dtype=float)
    pos = START_RANGE[0] + (START_RANGE[1] - START_RANGE[0]) * u
    return np.stack([pos, np.zeros_like(pos)], axis=-1)


def mountain_car_step(state, action):
    """Advance one step; returns (next_state, reward, terminated)."""
    state = np.asarray(state, dtype=float)
    action = np.asarray(action)
    if np.any((action < 0) | (action >= N_ACTIONS)):
        raise ValueError("action must be 0 (reverse), 1 (coast) or 2 (forward)")
    pos, vel = state[..., 0], state[..., 1]
    vel = np.clip(vel + 0.001 * (action - 1) - 0.0025 * np.cos(3.0 * pos), *VEL_BOUNDS)
    pos = np.clip(pos + vel, *POS_BOUNDS)
    vel = np.where(pos <= POS_BOUNDS[0], 0.0, vel)
    terminated = pos >= GOAL
    reward = np.full(np.shape(pos), -1.0)
    return np.stack([pos, vel], axis=-1), reward, terminated
