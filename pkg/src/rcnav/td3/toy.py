"""1D point-mass reach task used to sanity-check the learner."""

from __future__ import annotations

import numpy as np


class PointMass1D:
    """State is the signed distance to the origin; x += 0.1 * a per step.

    Reward is -|x|. Episodes run a fixed 50 steps and never terminate
    early; success means ending within ``tolerance`` of the origin.
    """

    observation_dim = 1

    def __init__(self, horizon: int = 50, gain: float = 0.1, start_range: float = 1.0, tolerance: float = 0.05,
                 seed: int = 0):
        self.horizon = horizon
        self.gain = gain
        self.start_range = start_range
        self.tolerance = tolerance
        self.action_low = np.array([-1.0])
        self.action_high = np.array([1.0])
        self.rng = np.random.default_rng(seed)
        self.x = 0.0
        self.t = 0

    def reset(self, seed: int | None = None) -> np.ndarray:
        if seed is not None:
            self.rng = np.random.default_rng(seed)
        self.x = float(self.rng.uniform(-self.start_range, self.start_range))
        self.t = 0
        return np.array([self.x])

    def step(self, action):
        a = float(np.clip(np.asarray(action, dtype=np.float64).reshape(-1)[0], -1.0, 1.0))
        self.x += self.gain * a
        self.t += 1
        reward = -abs(self.x)
        truncated = self.t >= self.horizon
        info = {}
        if truncated:
            info["terminal"] = "goal" if abs(self.x) <= self.tolerance else "timeout"
        return np.array([self.x]), reward, False, truncated, info
