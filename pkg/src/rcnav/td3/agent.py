"""TD3 learner: deterministic tanh actor, twin critics, target smoothing, delayed actor updates.

The actor works in a normalized action box [-1, 1]^d; :meth:`Td3Agent.to_env`
maps it affinely onto the environment's bounds. Replay stores normalized
actions.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .buffer import Batch
from .nn import Adam, Mlp


class TrainingDiverged(RuntimeError):
    """A loss went non-finite."""


@dataclass(frozen=True)
class Td3Config:
    gamma: float = 0.99
    tau: float = 0.005
    policy_delay: int = 2
    target_noise: float = 0.2
    noise_clip: float = 0.5
    exploration_noise: float = 0.1
    batch_size: int = 100
    lr: float = 3e-4
    warmup_steps: int = 1000
    episodes: int = 3000
    seed: int = 0
    hidden: tuple[int, ...] = (256, 256)
    buffer_capacity: int = 1_000_000
    checkpoint_every: int = 100

    def __post_init__(self) -> None:
        if not 0 <= self.gamma <= 1:
            raise ValueError("gamma must lie in [0, 1]")
        if not 0 < self.tau <= 1:
            raise ValueError("tau must lie in (0, 1]")
        if self.policy_delay < 1:
            raise ValueError("policy_delay must be >= 1")
        for name in ("target_noise", "noise_clip", "exploration_noise", "warmup_steps", "episodes"):
            if getattr(self, name) < 0:
                raise ValueError(f"{name} must be >= 0")
        for name in ("batch_size", "lr", "buffer_capacity", "checkpoint_every"):
            if getattr(self, name) <= 0:
                raise ValueError(f"{name} must be positive")
        object.__setattr__(self, "hidden", tuple(int(h) for h in self.hidden))


def soft_update(target: Mlp, online: Mlp, tau: float) -> None:
    for t, p in zip(target.params, online.params):
        t[...] = tau * p + (1 - tau) * t


class Td3Agent:
    def __init__(self, obs_dim: int, action_low, action_high, cfg: Td3Config | None = None,
                 rng: np.random.Generator | None = None, dtype=np.float32):
        self.cfg = cfg or Td3Config()
        self.obs_dim = obs_dim
        self.low = np.asarray(action_low, dtype=np.float64)
        self.high = np.asarray(action_high, dtype=np.float64)
        if self.low.shape != self.high.shape or np.any(self.high <= self.low):
            raise ValueError("action bounds must satisfy low < high elementwise")
        self.action_dim = len(self.low)
        self.rng = rng if rng is not None else np.random.default_rng(self.cfg.seed)
        h = list(self.cfg.hidden)
        self.actor = Mlp([obs_dim, *h, self.action_dim], "tanh", self.rng, dtype)
        self.critic1 = Mlp([obs_dim + self.action_dim, *h, 1], "linear", self.rng, dtype)
        self.critic2 = Mlp([obs_dim + self.action_dim, *h, 1], "linear", self.rng, dtype)
        self.actor_target = self.actor.copy()
        self.critic1_target = self.critic1.copy()
        self.critic2_target = self.critic2.copy()
        self._make_optimizers()
        self.updates = 0

    def _make_optimizers(self) -> None:
        lr = self.cfg.lr
        self.actor_opt = Adam(self.actor.params, lr)
        self.critic_opt = Adam(self.critic1.params + self.critic2.params, lr)

    @property
    def networks(self) -> dict[str, Mlp]:
        return {"actor": self.actor, "critic1": self.critic1, "critic2": self.critic2,
                "actor_target": self.actor_target, "critic1_target": self.critic1_target,
                "critic2_target": self.critic2_target}

    def load_networks(self, nets: dict[str, Mlp]) -> None:
        """Replace parameters in place; optimizer moments restart from zero."""
        for name, net in nets.items():
            mine = getattr(self, name)
            if mine.dims != net.dims:
                raise ValueError(f"{name}: checkpoint dims {net.dims} do not match agent dims {mine.dims}")
            for p, q in zip(mine.params, net.params):
                p[...] = q
        self._make_optimizers()

    # ----------------------------------------------------------------- actions

    def to_env(self, a_norm: np.ndarray) -> np.ndarray:
        a = np.clip(np.asarray(a_norm, dtype=np.float64), -1.0, 1.0)
        return np.clip(self.low + (a + 1.0) * 0.5 * (self.high - self.low), self.low, self.high)

    def to_norm(self, a_env: np.ndarray) -> np.ndarray:
        a = np.asarray(a_env, dtype=np.float64)
        return np.clip(2.0 * (a - self.low) / (self.high - self.low) - 1.0, -1.0, 1.0)

    def act_norm(self, obs, noise_sigma: float = 0.0, rng: np.random.Generator | None = None) -> np.ndarray:
        a = self.actor(obs).astype(np.float64)
        if noise_sigma > 0:
            rng = rng if rng is not None else self.rng
            a = a + rng.normal(0.0, noise_sigma, a.shape)
        return np.clip(a, -1.0, 1.0)

    def select_action(self, obs, noise_sigma: float = 0.0, rng: np.random.Generator | None = None) -> np.ndarray:
        """Environment-scale action. ``noise_sigma`` is in units of the half-range."""
        return self.to_env(self.act_norm(obs, noise_sigma, rng))

    # ----------------------------------------------------------------- learning

    def critic_target(self, batch: Batch, rng: np.random.Generator | None = None):
        """(y, min target Q) for a batch; smoothing noise drawn from ``rng``."""
        cfg = self.cfg
        rng = rng if rng is not None else self.rng
        a_next = self.actor_target(batch.next_obs)
        if cfg.target_noise > 0:
            noise = np.clip(rng.normal(0.0, cfg.target_noise, a_next.shape), -cfg.noise_clip, cfg.noise_clip)
            a_next = np.clip(a_next + noise.astype(a_next.dtype), -1.0, 1.0)
        sa = np.concatenate([batch.next_obs, a_next], axis=1)
        q_min = np.minimum(self.critic1_target(sa), self.critic2_target(sa))
        y = batch.reward + cfg.gamma * (1.0 - batch.done) * q_min
        return y, q_min

    def update(self, batch: Batch) -> dict[str, float | None]:
        cfg = self.cfg
        n = len(batch)
        y, _ = self.critic_target(batch)
        sa = np.concatenate([batch.obs, batch.action], axis=1)
        q1, c1 = self.critic1.forward_cached(sa)
        q2, c2 = self.critic2.forward_cached(sa)
        e1, e2 = q1 - y, q2 - y
        critic_loss = float(np.mean(e1 * e1) + np.mean(e2 * e2))
        if not np.isfinite(critic_loss):
            raise TrainingDiverged(f"critic loss is {critic_loss} at update {self.updates + 1}")
        g1, _ = self.critic1.backward(c1, 2.0 * e1 / n)
        g2, _ = self.critic2.backward(c2, 2.0 * e2 / n)
        self.critic_opt.step(g1 + g2)
        self.updates += 1

        actor_loss = None
        if self.updates % cfg.policy_delay == 0:
            a, ca = self.actor.forward_cached(batch.obs)
            q, cq = self.critic1.forward_cached(np.concatenate([batch.obs, a], axis=1))
            actor_loss = float(-np.mean(q))
            if not np.isfinite(actor_loss):
                raise TrainingDiverged(f"actor loss is {actor_loss} at update {self.updates}")
            _, g_in = self.critic1.backward(cq, np.full_like(q, -1.0 / n))
            ga, _ = self.actor.backward(ca, g_in[:, self.obs_dim:])
            self.actor_opt.step(ga)
            soft_update(self.actor_target, self.actor, cfg.tau)
            soft_update(self.critic1_target, self.critic1, cfg.tau)
            soft_update(self.critic2_target, self.critic2, cfg.tau)
        return {"critic_loss": critic_loss, "actor_loss": actor_loss}
