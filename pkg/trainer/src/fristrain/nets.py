"""Actor and return-distribution critic networks.

The actor is a tanh-squashed Gaussian mapped affinely into the action box,
so emitted actions always satisfy the box constraints; the environment's
discrete phase alphabet is handled server-side by quantization, the policy
treats every coordinate as continuous. The critic predicts a Gaussian over
the soft return: a mean and a floored standard deviation.
"""
from __future__ import annotations

import math

import torch
import torch.nn.functional as F
from torch import nn

__all__ = ["mlp", "GaussianActor", "ReturnCritic",
           "LOG_STD_MIN", "LOG_STD_MAX"]

LOG_STD_MIN = -20.0
LOG_STD_MAX = 2.0
_LOG_SQRT_2PI = 0.5 * math.log(2.0 * math.pi)


def mlp(in_dim: int, hidden: tuple[int, ...], out_dim: int) -> nn.Sequential:
    layers: list[nn.Module] = []
    prev = in_dim
    for width in hidden:
        layers += [nn.Linear(prev, width), nn.ReLU()]
        prev = width
    layers.append(nn.Linear(prev, out_dim))
    return nn.Sequential(*layers)


def _squash_correction(pre: torch.Tensor) -> torch.Tensor:
    # log(1 - tanh(x)^2) = 2(log 2 - x - softplus(-2x)), stable for large |x|
    return 2.0 * (math.log(2.0) - pre - F.softplus(-2.0 * pre))


class GaussianActor(nn.Module):
    """Squashed Gaussian policy over a box-bounded action space."""

    def __init__(self, state_dim: int, action_dim: int, low, high,
                 hidden: tuple[int, ...] = (256, 256)):
        super().__init__()
        self.net = mlp(state_dim, hidden, 2 * action_dim)
        self.action_dim = action_dim
        dt = torch.get_default_dtype()
        low = torch.as_tensor(low, dtype=dt)
        high = torch.as_tensor(high, dtype=dt)
        if low.shape != (action_dim,) or high.shape != (action_dim,):
            raise ValueError("bounds must match the action dimension")
        if not torch.all(high > low):
            raise ValueError("box must have positive extent")
        self.register_buffer("_scale", (high - low) / 2.0)
        self.register_buffer("_center", (high + low) / 2.0)

    def forward(self, state: torch.Tensor):
        out = self.net(state)
        mean, log_std = out.chunk(2, dim=-1)
        return mean, log_std.clamp(LOG_STD_MIN, LOG_STD_MAX)

    def sample(self, state: torch.Tensor, noise: torch.Tensor | None = None):
        """Reparameterized draw; returns (action, per-sample log density)."""
        mean, log_std = self(state)
        std = log_std.exp()
        if noise is None:
            noise = torch.randn_like(mean)
        pre = mean + std * noise
        action = self._center + self._scale * torch.tanh(pre)
        base = (-0.5 * noise ** 2 - log_std - _LOG_SQRT_2PI).sum(-1)
        corr = _squash_correction(pre).sum(-1)
        log_prob = base - corr - torch.log(self._scale).sum()
        return action, log_prob

    def log_prob(self, state: torch.Tensor, action: torch.Tensor) -> torch.Tensor:
        """Density of a given in-box action (inverts the squash)."""
        mean, log_std = self(state)
        u = (action - self._center) / self._scale
        u = u.clamp(-1.0 + 1e-6, 1.0 - 1e-6)
        pre = torch.atanh(u)
        std = log_std.exp()
        base = (-0.5 * ((pre - mean) / std) ** 2 - log_std - _LOG_SQRT_2PI).sum(-1)
        corr = _squash_correction(pre).sum(-1)
        return base - corr - torch.log(self._scale).sum()

    @torch.no_grad()
    def act(self, state: torch.Tensor) -> torch.Tensor:
        """Deterministic evaluation action (mode of the squashed Gaussian)."""
        mean, _ = self(state)
        return self._center + self._scale * torch.tanh(mean)


class ReturnCritic(nn.Module):
    """Gaussian return head: mean and standard deviation floored at sigma_min."""

    def __init__(self, state_dim: int, action_dim: int,
                 hidden: tuple[int, ...] = (256, 256), sigma_min: float = 1e-3):
        super().__init__()
        if sigma_min <= 0:
            raise ValueError("sigma_min must be positive")
        self.net = mlp(state_dim + action_dim, hidden, 2)
        self.sigma_min = sigma_min

    def forward(self, state: torch.Tensor, action: torch.Tensor):
        out = self.net(torch.cat([state, action], dim=-1))
        mean = out[..., 0]
        sigma = F.softplus(out[..., 1]).clamp(min=self.sigma_min)
        return mean, sigma

    def sample(self, state: torch.Tensor, action: torch.Tensor,
               noise: torch.Tensor | None = None) -> torch.Tensor:
        """One draw from the predicted return distribution."""
        mean, sigma = self(state, action)
        if noise is None:
            noise = torch.randn_like(mean)
        return mean + sigma * noise
