"""Uniform-sampling ring buffer of transitions."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np


@dataclass(frozen=True)
class Batch:
    obs: np.ndarray
    action: np.ndarray
    reward: np.ndarray  # (n, 1)
    next_obs: np.ndarray
    done: np.ndarray  # (n, 1), 1.0 only for true terminals

    def __len__(self) -> int:
        return len(self.obs)


class ReplayBuffer:
    """Fixed-capacity ring buffer.

    Storage grows geometrically up to ``capacity`` so a 10^6-slot buffer does
    not allocate hundreds of MB for a short run.
    """

    def __init__(self, obs_dim: int, action_dim: int, capacity: int = 1_000_000, dtype=np.float32):
        if capacity < 1:
            raise ValueError("capacity must be >= 1")
        self.obs_dim = obs_dim
        self.action_dim = action_dim
        self.capacity = capacity
        self.dtype = np.dtype(dtype)
        self.size = 0
        self.ptr = 0
        self._alloc(min(capacity, 1024))

    def _alloc(self, n: int) -> None:
        old = getattr(self, "_obs", None)
        fields = {
            "_obs": (n, self.obs_dim), "_action": (n, self.action_dim), "_reward": (n, 1),
            "_next_obs": (n, self.obs_dim), "_done": (n, 1),
        }
        for name, shape in fields.items():
            arr = np.zeros(shape, dtype=self.dtype)
            if old is not None:
                arr[:self.size] = getattr(self, name)[:self.size]
            setattr(self, name, arr)

    def __len__(self) -> int:
        return self.size

    def add(self, obs, action, reward: float, next_obs, done: bool) -> None:
        if self.ptr >= len(self._obs):
            self._alloc(min(self.capacity, 2 * len(self._obs)))
        i = self.ptr
        self._obs[i] = obs
        self._action[i] = action
        self._reward[i, 0] = reward
        self._next_obs[i] = next_obs
        self._done[i, 0] = float(done)
        self.ptr = (self.ptr + 1) % self.capacity
        self.size = min(self.size + 1, self.capacity)

    def sample(self, n: int, rng: np.random.Generator) -> Batch:
        if self.size < n:
            raise ValueError(f"buffer holds {self.size} transitions, asked for {n}")
        idx = rng.integers(0, self.size, n)
        return Batch(self._obs[idx], self._action[idx], self._reward[idx], self._next_obs[idx], self._done[idx])
