"""Episode dynamics: geometry, surface setting, channels, rates, covertness.

One CovertEnv instance runs one episode at a time. The observation is a flat
vector, layout given by state_slices(); the action is a flat vector of length
7 + 3M:

    [0] accel Alice (signed)   [1] accel Bob
    [2] heading Alice          [3] heading Bob
    [4] pitch Alice            [5] pitch Bob
    [6] NOMA allocation beta
    [7 : 7+M]      per-element phase commands (radians, snapped to codebook)
    [7+M : 7+2M]   per-element horizontal bend (degrees)
    [7+2M : 7+3M]  per-element vertical bend (degrees)

Raw components are projected into their boxes, never rejected; every
projection is reported under info["clamps"].
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .channel import LinkGeometry, compose, draw_channel_set, los_phase
from .config import ScenarioConfig
from .covert import covert_stats
from .em import (assemble_configuration, effective_incident_angles,
                 element_positions, surface_frame)
from .errors import DimensionMismatch, EpisodeFinished
from .noma import NomaParams, rate_bob, rate_carol
from .uav import enforce_separation, step_kinematics

__all__ = ["CovertEnv", "reward", "episode_metrics", "state_slices",
           "BETA_MIN", "BETA_MAX"]

BETA_MIN = 1e-6
BETA_MAX = 1.0 - 1e-6


def state_slices(m_count: int) -> dict[str, slice]:
    """Layout of the flat observation; complex blocks are re/im interleaved."""
    out, pos = {}, 0

    def take(name, size):
        nonlocal pos
        out[name] = slice(pos, pos + size)
        pos += size

    take("t", 1)
    for name in ("h_ab", "h_ac", "h_aw"):
        take(name, 2)
    for name in ("h_af", "h_fb", "h_fc", "h_fw"):
        take(name, 2 * m_count)
    take("q_a", 3)
    take("q_b", 3)
    take("avg_r_b", 1)
    take("avg_r_c", 1)
    return out


def _interleave(z: np.ndarray) -> np.ndarray:
    out = np.empty(2 * len(z))
    out[0::2] = np.real(z)
    out[1::2] = np.imag(z)
    return out


def reward(avg_r_b: float, avg_r_c: float, c1_ok: bool, cfg: ScenarioConfig) -> float:
    """Penalized rate objective: indicator terms are 0 when satisfied, -1 when not."""
    rate_term = avg_r_b if cfg.reward_rate_source == "bob" else avg_r_c
    pen_public = 0.0 if avg_r_c >= cfg.eps_c else -1.0
    pen_covert = 0.0 if c1_ok else -1.0
    return rate_term + cfg.nu1 * pen_public + cfg.nu2 * pen_covert


class CovertEnv:
    """The slotted decision process. amplitude_override pins every element's
    reflection amplitude (diagnostics; 0 disconnects the surface)."""

    def __init__(self, cfg: ScenarioConfig, amplitude_override: float | None = None):
        self.cfg = cfg
        self.amplitude_override = amplitude_override
        self._axis = np.asarray(cfg.fris_axis, float)
        self._axis = self._axis / np.linalg.norm(self._axis)
        self._normal = np.asarray(cfg.fris_normal, float)
        self._normal = self._normal / np.linalg.norm(self._normal)
        self._frame = surface_frame(self._axis, self._normal)
        self._elements = element_positions(cfg.m_count, cfg.fris_center,
                                           self._axis, cfg.spacing)
        self._fris = np.asarray(cfg.fris_center, float)
        self._carol = np.asarray(cfg.carol, float)
        self._willie = np.asarray(cfg.willie, float)
        self._done = True
        self._t = -1

    @property
    def state_dim(self) -> int:
        return self.cfg.state_dim()

    @property
    def action_dim(self) -> int:
        return self.cfg.action_dim()

    def initial_geometry(self) -> LinkGeometry:
        """Link geometry at the configured starting positions."""
        return self._geometry(np.asarray(self.cfg.uav_a.position, dtype=float),
                              np.asarray(self.cfg.uav_b.position, dtype=float))

    def _geometry(self, q_a: np.ndarray, q_b: np.ndarray) -> LinkGeometry:
        # steering-angle sines are axis components of the unit rays from the surface
        rays = np.stack([q_a, q_b, self._carol, self._willie]) - self._fris
        d = np.sqrt(np.einsum("nk,nk->n", rays, rays))
        sines = np.clip(rays @ self._axis / d, -1.0, 1.0)
        iotas = np.degrees(np.arcsin(sines))
        diff = q_a - np.stack([q_b, self._carol, self._willie])
        d_direct = np.sqrt(np.einsum("nk,nk->n", diff, diff))
        return LinkGeometry(
            d_ab=float(d_direct[0]), d_ac=float(d_direct[1]),
            d_aw=float(d_direct[2]),
            d_af=float(d[0]), d_fb=float(d[1]), d_fc=float(d[2]),
            d_fw=float(d[3]),
            iota_af_deg=float(iotas[0]), iota_fb_deg=float(iotas[1]),
            iota_fc_deg=float(iotas[2]), iota_fw_deg=float(iotas[3]))

    def reset(self, seed: int | None = None) -> np.ndarray:
        cfg = self.cfg
        self._seed = cfg.seed if seed is None else int(seed)
        self._t = 0
        self._uav_a = cfg.initial_state("uav_a")
        self._uav_b = cfg.initial_state("uav_b")
        # ground-link phases are frozen for the whole episode at reset geometry
        q0 = self._uav_a.position
        self._g_bar_ac = los_phase(float(np.linalg.norm(q0 - self._carol)), cfg.channel)
        self._g_bar_aw = los_phase(float(np.linalg.norm(q0 - self._willie)), cfg.channel)
        rng = np.random.default_rng([self._seed, 0])
        self._channels = draw_channel_set(self._geometry(q0, self._uav_b.position),
                                          self._g_bar_ac, self._g_bar_aw,
                                          cfg.m_count, cfg.channel, rng)
        self._sum_r_b = 0.0
        self._sum_r_c = 0.0
        self._avg_r_b = 0.0
        self._avg_r_c = 0.0
        self._done = False
        return self._state_vector()

    def _state_vector(self) -> np.ndarray:
        cs = self._channels
        scalars = np.array([cs.h_ab, cs.h_ac, cs.h_aw])
        return np.concatenate([
            [float(self._t)],
            _interleave(scalars),
            _interleave(cs.h_af), _interleave(cs.h_fb),
            _interleave(cs.h_fc), _interleave(cs.h_fw),
            self._uav_a.position, self._uav_b.position,
            [self._avg_r_b, self._avg_r_c]])

    def step(self, action) -> tuple[np.ndarray, float, bool, dict]:
        if self._done:
            raise EpisodeFinished("episode is over; call reset")
        cfg = self.cfg
        m = cfg.m_count
        a = np.asarray(action, dtype=float)
        if a.shape != (self.action_dim,):
            raise DimensionMismatch(
                f"action length {a.size}, expected {self.action_dim}")

        self._t += 1
        s_a, flags_a = step_kinematics(self._uav_a, a[0], a[2], a[4], cfg.kinematics)
        s_b, flags_b = step_kinematics(self._uav_b, a[1], a[3], a[5], cfg.kinematics)
        s_a, s_b, separated = enforce_separation(s_a, s_b, cfg.kinematics)

        beta = float(min(max(a[6], BETA_MIN), BETA_MAX))
        beta_projected = bool(beta != a[6])

        bends_h = np.clip(a[7 + m:7 + 2 * m], -90.0, 90.0)
        bends_v = np.clip(a[7 + 2 * m:7 + 3 * m], -90.0, 90.0)
        bend_clamped = bool(np.any(bends_h != a[7 + m:7 + 2 * m])
                            or np.any(bends_v != a[7 + 2 * m:7 + 3 * m]))
        incident, incident_flags = effective_incident_angles(
            bends_h, bends_v, self._elements, s_a.position,
            self._axis, self._normal, self._frame)
        ris_cfg, ris_flags = assemble_configuration(
            a[7:7 + m], bends_h, bends_v, incident, cfg.fit, cfg.phase_bits)
        if self.amplitude_override is None:
            theta = ris_cfg.amplitudes * np.exp(1j * ris_cfg.phases)
        else:
            theta = self.amplitude_override * np.exp(1j * ris_cfg.phases)

        rng = np.random.default_rng([self._seed, self._t])
        cs = draw_channel_set(self._geometry(s_a.position, s_b.position),
                              self._g_bar_ac, self._g_bar_aw, m, cfg.channel, rng)
        compose(cs, theta)

        np_ = NomaParams(beta=beta, power_w=cfg.power_w, noise_w=cfg.channel.noise_w)
        r_b = rate_bob(np_, abs(cs.h_b) ** 2)
        r_c = rate_carol(np_, abs(cs.h_c) ** 2)
        stats = covert_stats(np_, abs(cs.h_w) ** 2, cfg.eps)

        self._sum_r_b += r_b
        self._sum_r_c += r_c
        self._avg_r_b = self._sum_r_b / self._t
        self._avg_r_c = self._sum_r_c / self._t

        rwd = reward(self._avg_r_b, self._avg_r_c, stats.c1_ok, cfg)
        done = self._t >= cfg.episode_slots
        self._done = done
        self._uav_a, self._uav_b = s_a, s_b
        self._channels = cs

        info = {
            "slot": self._t,
            "rates": {"r_b": r_b, "r_c": r_c,
                      "avg_r_b": self._avg_r_b, "avg_r_c": self._avg_r_c},
            "covert": {"lambda0": stats.lambda0, "lambda1": stats.lambda1,
                       "kl_01": stats.kl_01, "kl_10": stats.kl_10,
                       # null when the warden's two hypotheses coincide
                       "tau_star": (stats.tau_star
                                    if math.isfinite(stats.tau_star) else None),
                       "xi_star": stats.xi_star,
                       "c1_ok": stats.c1_ok},
            "constraints": {"public_ok": bool(self._avg_r_c >= cfg.eps_c),
                            "c1_ok": stats.c1_ok},
            "beta": beta,
            "clamps": {"uav_a": flags_a, "uav_b": flags_b,
                       "separation_adjusted": separated,
                       "beta_projected": beta_projected,
                       "bend_clamped": bend_clamped,
                       "incident_projected": bool(np.any(incident_flags)),
                       "amplitude_clamped": ris_flags["amplitude_clamped"]},
        }
        return self._state_vector(), rwd, done, info

    def uav_states(self):
        """Current (alice, bob) kinematic states; episode must be live."""
        if self._t < 0:
            raise EpisodeFinished("no episode; call reset")
        return self._uav_a, self._uav_b

    def phases_to_action(self, indices) -> np.ndarray:
        """Embed codebook indices into a zeroed action vector (diagnostics)."""
        m = self.cfg.m_count
        a = np.zeros(self.action_dim)
        a[4:6] = math.pi / 2
        a[6] = 0.5
        a[7:7 + m] = 2 * math.pi * np.asarray(indices) / (1 << self.cfg.phase_bits)
        return a


def episode_metrics(trace: list[dict]) -> dict:
    """Aggregate a completed episode's info records."""
    if not trace:
        return {"slots": 0, "avg_covert_rate": 0.0, "avg_public_rate": 0.0,
                "c1_fraction": 0.0, "c1_violations": 0, "public_violations": 0}
    r_b = [rec["rates"]["r_b"] for rec in trace]
    r_c = [rec["rates"]["r_c"] for rec in trace]
    c1 = [rec["covert"]["c1_ok"] for rec in trace]
    pub = [rec["constraints"]["public_ok"] for rec in trace]
    n = len(trace)
    return {
        "slots": n,
        "avg_covert_rate": sum(r_b) / n,
        "avg_public_rate": sum(r_c) / n,
        "c1_fraction": sum(c1) / n,
        "c1_violations": n - sum(c1),
        "public_violations": n - sum(pub),
    }


@dataclass
class EpisodeTrace:
    """Convenience bundle for optimizer runs."""

    rewards: list[float]
    infos: list[dict]

    @property
    def total(self) -> float:
        return float(sum(self.rewards))

    @property
    def final_reward(self) -> float:
        return self.rewards[-1] if self.rewards else 0.0


def run_episode(env: CovertEnv, policy, seed: int | None = None) -> EpisodeTrace:
    """Roll one episode; policy maps (state, slot) -> action vector."""
    state = env.reset(seed)
    rewards, infos = [], []
    done = False
    t = 0
    while not done:
        state, rwd, done, info = env.step(policy(state, t))
        rewards.append(rwd)
        infos.append(info)
        t += 1
    return EpisodeTrace(rewards, infos)
