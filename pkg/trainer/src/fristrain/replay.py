"""Bounded experience store with uniform sampling."""
from __future__ import annotations

import numpy as np

__all__ = ["ReplayBuffer"]


class ReplayBuffer:
    """Fixed-capacity ring buffer; once full, each push overwrites the oldest."""

    def __init__(self, capacity: int, state_dim: int, action_dim: int):
        if capacity < 1:
            raise ValueError("capacity must be positive")
        self.capacity = capacity
        self._s = np.empty((capacity, state_dim))
        self._a = np.empty((capacity, action_dim))
        self._r = np.empty(capacity)
        self._s2 = np.empty((capacity, state_dim))
        self._d = np.empty(capacity, dtype=bool)
        self._n = 0
        self._head = 0

    def __len__(self) -> int:
        return self._n

    def push(self, state, action, reward, next_state, done) -> None:
        i = self._head
        self._s[i] = state
        self._a[i] = action
        self._r[i] = float(reward)
        self._s2[i] = next_state
        self._d[i] = bool(done)
        self._head = (i + 1) % self.capacity
        self._n = min(self._n + 1, self.capacity)

    def sample(self, batch_size: int, rng: np.random.Generator):
        """Uniform with replacement: (states, actions, rewards, next_states, dones)."""
        if self._n == 0:
            raise ValueError("cannot sample from an empty buffer")
        idx = rng.integers(0, self._n, size=batch_size)
        return (self._s[idx], self._a[idx], self._r[idx],
                self._s2[idx], self._d[idx])

    def rewards_stored(self) -> np.ndarray:
        """Rewards currently held, oldest first (diagnostics and tests)."""
        if self._n < self.capacity:
            return self._r[:self._n].copy()
        return np.roll(self._r, -self._head).copy()
