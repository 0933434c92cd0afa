"""Stochastic link generation.

Air-to-air links are pure line of sight; links that end on the ground or on
the reflecting surface are Rician. Surface links carry the half-wavelength
steering progression exp(-j pi (m-1) sin(iota)) in their deterministic part.

Sampling discipline: one generator per (seed, slot), and inside a slot the
links draw in the fixed order g_ac, g_aw, g_af, g_fb, g_fc, g_fw with
real/imag parts interleaved. New links must append to the end of that list so
existing draws never move.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .errors import ConfigError, DimensionMismatch, DomainError


@dataclass(frozen=True)
class ChannelParams:
    gamma0: float = 0.1          # reference gain at 1 m, linear
    kappa: float = 10.0          # Rician factor, linear
    alpha_los: float = 2.0
    alpha_nlos: float = 3.0
    noise_w: float = 1.0e-8      # -50 dBm
    carrier_hz: float = 0.839e9
    gamma0_in_rician: bool = True

    def __post_init__(self) -> None:
        if self.gamma0 <= 0:
            raise ConfigError("channel.gamma0", "must be positive")
        if self.kappa < 0:
            raise ConfigError("channel.kappa", "must be non-negative")
        if not 1.0 <= self.alpha_los <= self.alpha_nlos:
            raise ConfigError("channel.alpha_los", "need alpha_nlos >= alpha_los >= 1")
        if self.noise_w <= 0:
            raise ConfigError("channel.noise_w", "must be positive")
        if self.carrier_hz <= 0:
            raise ConfigError("channel.carrier_hz", "must be positive")


@dataclass
class ChannelSet:
    """All coefficients for one slot; composites filled once a surface setting is applied."""

    h_ab: complex
    h_ac: complex
    h_aw: complex
    h_af: np.ndarray
    h_fb: np.ndarray
    h_fc: np.ndarray
    h_fw: np.ndarray
    h_b: complex | None = None
    h_c: complex | None = None
    h_w: complex | None = None


def los_channel(d: float, cp: ChannelParams) -> complex:
    """Free-space air-to-air coefficient sqrt(gamma0) d^(-alpha_los/2)."""
    if d < 1.0:
        raise DomainError(f"distance {d} m below the 1 m reference")
    return complex(math.sqrt(cp.gamma0) * d ** (-cp.alpha_los / 2.0))


def los_phase(d: float, cp: ChannelParams) -> complex:
    """Unit-modulus deterministic phase exp(-j 2 pi d / lambda_c)."""
    lam = 3.0e8 / cp.carrier_hz
    ang = -2.0 * math.pi * d / lam
    return complex(math.cos(ang), math.sin(ang))


def complex_gaussian(rng: np.random.Generator, n: int) -> np.ndarray:
    """n unit-variance circularly symmetric samples; 2n real draws, interleaved."""
    z = rng.standard_normal(2 * n)
    return (z[0::2] + 1j * z[1::2]) / math.sqrt(2.0)


def rician_sample(d: float, g_bar: complex, cp: ChannelParams,
                  rng: np.random.Generator) -> complex:
    """One Rician coefficient with deterministic phase g_bar (|g_bar| = 1).

    sqrt(kappa/(kappa+1)) g_bar d^(-a_L/2) + sqrt(1/(kappa+1)) g d^(-a_N/2),
    both terms scaled by sqrt(gamma0) when gamma0_in_rician is set (the
    printed fading equation omits the reference gain; the flag restores
    consistency with the pure line-of-sight links).
    """
    if d < 1.0:
        raise DomainError(f"distance {d} m below the 1 m reference")
    scale = math.sqrt(cp.gamma0) if cp.gamma0_in_rician else 1.0
    k = cp.kappa
    los = math.sqrt(k / (k + 1.0)) * scale * g_bar * d ** (-cp.alpha_los / 2.0)
    nlos = math.sqrt(1.0 / (k + 1.0)) * scale * d ** (-cp.alpha_nlos / 2.0)
    return los + nlos * complex(complex_gaussian(rng, 1)[0])


def ris_los_vector(m_count: int, iota_deg: float, d: float, cp: ChannelParams) -> np.ndarray:
    """Deterministic surface-link component: steering progression times path loss."""
    if m_count < 1:
        raise DomainError("element count must be >= 1")
    if d < 1.0:
        raise DomainError(f"distance {d} m below the 1 m reference")
    phase = -math.pi * math.sin(math.radians(iota_deg)) * np.arange(m_count)
    return math.sqrt(cp.gamma0) * d ** (-cp.alpha_los / 2.0) * np.exp(1j * phase)


def rician_ris_vector(los_vec: np.ndarray, d: float, cp: ChannelParams,
                      rng: np.random.Generator) -> np.ndarray:
    """Rician surface link around the steering-vector mean."""
    k = cp.kappa
    nlos_scale = math.sqrt(cp.gamma0) if cp.gamma0_in_rician else 1.0
    g = complex_gaussian(rng, len(los_vec))
    return (math.sqrt(k / (k + 1.0)) * los_vec
            + math.sqrt(1.0 / (k + 1.0)) * nlos_scale * d ** (-cp.alpha_nlos / 2.0) * g)


def cascaded_channel(h_direct: complex, h_rx: np.ndarray, theta_diag: np.ndarray,
                     h_af: np.ndarray) -> complex:
    """Composite coefficient h_direct + sum_m conj(h_rx[m]) theta[m] h_af[m]."""
    if not len(h_rx) == len(theta_diag) == len(h_af):
        raise DimensionMismatch(
            f"cascade lengths differ: {len(h_rx)}, {len(theta_diag)}, {len(h_af)}")
    return complex(h_direct + np.sum(np.conj(h_rx) * theta_diag * h_af))


@dataclass(frozen=True)
class LinkGeometry:
    """Scalar geometry feeding one slot's draw: distances and steering sines."""

    d_ab: float
    d_ac: float
    d_aw: float
    d_af: float
    d_fb: float
    d_fc: float
    d_fw: float
    iota_af_deg: float
    iota_fb_deg: float
    iota_fc_deg: float
    iota_fw_deg: float


def draw_channel_set(geom: LinkGeometry, g_bar_ac: complex, g_bar_aw: complex,
                     m_count: int, cp: ChannelParams,
                     rng: np.random.Generator) -> ChannelSet:
    """All direct coefficients for one slot, in the documented draw order.

    The normal variates come out of one bulk call, sliced in order; the
    generator stream advances exactly as it would under separate draws.
    """
    z = rng.standard_normal(4 + 8 * m_count)
    g = (z[0::2] + 1j * z[1::2]) / math.sqrt(2.0)

    k = cp.kappa
    w_los = math.sqrt(k / (k + 1.0))
    w_nlos = math.sqrt(1.0 / (k + 1.0))
    scale = math.sqrt(cp.gamma0) if cp.gamma0_in_rician else 1.0

    def scalar(d, g_bar, gg):
        if d < 1.0:
            raise DomainError(f"distance {d} m below the 1 m reference")
        return (w_los * scale * g_bar * d ** (-cp.alpha_los / 2.0)
                + w_nlos * scale * d ** (-cp.alpha_nlos / 2.0) * gg)

    def vector(d, iota_deg, gg):
        los = ris_los_vector(m_count, iota_deg, d, cp)
        return w_los * los + w_nlos * scale * d ** (-cp.alpha_nlos / 2.0) * gg

    h_ab = los_channel(geom.d_ab, cp)
    h_ac = complex(scalar(geom.d_ac, g_bar_ac, g[0]))
    h_aw = complex(scalar(geom.d_aw, g_bar_aw, g[1]))
    h_af = vector(geom.d_af, geom.iota_af_deg, g[2:2 + m_count])
    h_fb = vector(geom.d_fb, geom.iota_fb_deg, g[2 + m_count:2 + 2 * m_count])
    h_fc = vector(geom.d_fc, geom.iota_fc_deg, g[2 + 2 * m_count:2 + 3 * m_count])
    h_fw = vector(geom.d_fw, geom.iota_fw_deg, g[2 + 3 * m_count:])
    return ChannelSet(h_ab=h_ab, h_ac=h_ac, h_aw=h_aw,
                      h_af=h_af, h_fb=h_fb, h_fc=h_fc, h_fw=h_fw)


def compose(cs: ChannelSet, theta_diag: np.ndarray) -> ChannelSet:
    """Fill the composite coefficients for the surface setting theta_diag."""
    cs.h_b = cascaded_channel(cs.h_ab, cs.h_fb, theta_diag, cs.h_af)
    cs.h_c = cascaded_channel(cs.h_ac, cs.h_fc, theta_diag, cs.h_af)
    cs.h_w = cascaded_channel(cs.h_aw, cs.h_fw, theta_diag, cs.h_af)
    return cs
