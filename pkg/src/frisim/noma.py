"""Two-user downlink NOMA rates under successive interference cancellation.

Decoding order is fixed: the public user decodes first (treating the covert
signal as noise), the covert user then decodes interference-free. Both symbol
alphabets are unit-power circularly symmetric Gaussian, which is what makes
the warden's power statistic exponential and the detection math exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

from .errors import ConfigError, DomainError


@dataclass(frozen=True)
class NomaParams:
    beta: float            # public user's power share, in (0, 1)
    power_w: float = 0.2
    noise_w: float = 1.0e-8

    def __post_init__(self) -> None:
        if not 0.0 < self.beta < 1.0:
            raise ConfigError("noma.beta", f"power split {self.beta} outside (0, 1)")
        if self.power_w <= 0:
            raise ConfigError("noma.power_w", "must be positive")
        if self.noise_w <= 0:
            raise ConfigError("noma.noise_w", "must be positive")


def rate_carol(np_: NomaParams, h_c2: float) -> float:
    """Public-user rate with the covert signal treated as interference."""
    if h_c2 < 0:
        raise DomainError("channel gain must be non-negative")
    sig = np_.beta * np_.power_w * h_c2
    return math.log2(1.0 + sig / ((1.0 - np_.beta) * np_.power_w * h_c2 + np_.noise_w))


def rate_bob(np_: NomaParams, h_b2: float) -> float:
    """Covert-user rate after the public signal is cancelled."""
    if h_b2 < 0:
        raise DomainError("channel gain must be non-negative")
    return math.log2(1.0 + (1.0 - np_.beta) * np_.power_w * h_b2 / np_.noise_w)
