"""Detection-error mathematics for the warden's radiometer.

With Gaussian codebooks and a single power observation per slot, the warden's
statistic |y_w|^2 is exponential with mean lambda0 (public signal only) or
lambda1 (public + covert). Everything here is closed-form except the Monte
Carlo validator.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .noma import NomaParams


@dataclass(frozen=True)
class CovertStats:
    lambda0: float
    lambda1: float
    kl_01: float
    kl_10: float
    tau_star: float
    xi_star: float
    c1_ok: bool


def lambdas(np_: NomaParams, h_w2: float) -> tuple[float, float]:
    """Received-power means at the warden under H0 (beta P) and H1 (full P)."""
    if h_w2 < 0:
        raise DomainError("channel gain must be non-negative")
    l0 = np_.beta * np_.power_w * h_w2 + np_.noise_w
    l1 = np_.power_w * h_w2 + np_.noise_w
    return l0, l1


def kl_pair(lambda0: float, lambda1: float) -> tuple[float, float]:
    """KL divergences between the two exponential laws, both directions, nats."""
    if lambda0 <= 0 or lambda1 <= 0:
        raise DomainError("lambda parameters must be positive")
    ratio = lambda1 / lambda0
    kl01 = math.log(ratio) + 1.0 / ratio - 1.0
    kl10 = -math.log(ratio) + ratio - 1.0
    return kl01, kl10


def c1_satisfied(lambda0: float, lambda1: float, eps: float) -> bool:
    """Covertness constraint: both KL directions at or below 2 eps^2."""
    if not 0.0 <= eps <= 1.0:
        raise DomainError(f"covertness level {eps} outside [0, 1]")
    kl01, kl10 = kl_pair(lambda0, lambda1)
    return max(kl01, kl10) <= 2.0 * eps * eps


def false_alarm(tau: float, lambda0: float) -> float:
    return math.exp(-tau / lambda0)


def missed_detection(tau: float, lambda1: float) -> float:
    return 1.0 - math.exp(-tau / lambda1)


def radiometer_xi(lambda0: float, lambda1: float, tau: float) -> float:
    """Detection error probability P_FA + P_MD at threshold tau."""
    if lambda0 <= 0 or lambda1 <= 0 or tau < 0:
        raise DomainError("need positive lambdas and tau >= 0")
    return false_alarm(tau, lambda0) + missed_detection(tau, lambda1)


def optimal_radiometer(lambda0: float, lambda1: float) -> tuple[float, float]:
    """Optimal threshold and its minimal detection error probability.

    tau* = (lambda0 lambda1 / (lambda1 - lambda0)) ln(lambda1/lambda0).
    Degenerate lambda0 = lambda1 means the warden cannot do better than
    guessing: xi* = 1 with an infinite threshold sentinel.
    """
    if lambda0 <= 0 or lambda1 <= 0:
        raise DomainError("lambda parameters must be positive")
    if lambda1 < lambda0:
        raise DomainError("expected lambda1 >= lambda0 (covert power adds energy)")
    if lambda1 == lambda0:
        return math.inf, 1.0
    tau = lambda0 * lambda1 / (lambda1 - lambda0) * math.log(lambda1 / lambda0)
    return tau, radiometer_xi(lambda0, lambda1, tau)


def pinsker_bound(kl: float) -> float:
    """Lower bound on the detection error probability from one KL value."""
    if kl < 0:
        raise DomainError("KL divergence cannot be negative")
    return max(0.0, 1.0 - math.sqrt(kl / 2.0))


def dep_monte_carlo(lambda0: float, lambda1: float, tau: float, n_samples: int,
                    rng: np.random.Generator) -> tuple[float, float]:
    """Empirical xi at threshold tau plus its binomial standard error."""
    if n_samples < 10_000:
        raise DomainError("need at least 1e4 samples for a stable estimate")
    if lambda0 <= 0 or lambda1 <= 0 or tau < 0:
        raise DomainError("need positive lambdas and tau >= 0")
    p_fa = float(np.mean(rng.exponential(lambda0, n_samples) > tau))
    p_md = float(np.mean(rng.exponential(lambda1, n_samples) <= tau))
    stderr = math.sqrt(p_fa * (1.0 - p_fa) / n_samples + p_md * (1.0 - p_md) / n_samples)
    return p_fa + p_md, stderr


def covert_stats(np_: NomaParams, h_w2: float, eps: float) -> CovertStats:
    """Full per-slot record for the env info channel."""
    l0, l1 = lambdas(np_, h_w2)
    kl01, kl10 = kl_pair(l0, l1)
    tau, xi = optimal_radiometer(l0, l1)
    return CovertStats(lambda0=l0, lambda1=l1, kl_01=kl01, kl_10=kl10,
                       tau_star=tau, xi_star=xi,
                       c1_ok=max(kl01, kl10) <= 2.0 * eps * eps)
