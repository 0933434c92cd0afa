"""Derivative-free baselines: random search, cross-entropy, greedy phase picks.

Policies are open-loop schedules compressed into a flat parameter vector:
one NOMA split, surface phases, one shared bend pair (or per-element pairs),
and piecewise-constant kinematic commands over a fixed number of segments.
Surface phases come in three parameterizations: "per-element" (one entry
each, fully general), "ramp" (offset plus linear progression across the
array, two entries total - the shape aligning to any steering direction
takes, so the search dimension stays flat in the element count; from_env
anchors the ramp at the progression canceling the line-of-sight cascade
phases of the starting geometry, putting the coherence peak at the center
of the search box instead of on an O(1/M)-wide ridge), and "external"
(no phase entries; the caller substitutes them, typically with the per-slot
greedy alignment, turning the schedule into a state-feedback hybrid).
All optimizers are pure functions of (config, seed); candidate evaluation
reuses common episode seeds so that population comparisons are not washed
out by channel noise.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from .channel import ChannelSet, cascaded_channel
from .em import DEFAULT_FIT, FitCoefficients, fitted_amplitudes, phase_codebook
from .env import CovertEnv, state_slices
from .errors import ConfigError

__all__ = ["PolicySpec", "episode_objective", "random_search", "cem_optimize",
           "cem_search", "greedy_phase_align", "exhaustive_phase_search",
           "steering_alignment", "channels_from_state", "feedback_policy"]


@dataclass(frozen=True)
class PolicySpec:
    """Layout and box bounds of the flat policy vector."""

    m_count: int
    episode_slots: int
    segments: int = 5
    ac_max: float = 2.0
    uniform_bend: bool = True
    phase_mode: str = "per-element"
    phase_base: tuple[float, ...] | None = None
    pitch_half_range: float = 0.6
    bend_limit_deg: float = 90.0
    beta_lo: float = 0.02
    beta_hi: float = 0.98

    def __post_init__(self):
        if self.segments < 1:
            raise ConfigError("segments", "need at least one segment")
        if not 1 <= self.episode_slots:
            raise ConfigError("episode_slots", "need at least one slot")
        if self.phase_mode not in ("per-element", "ramp", "external"):
            raise ConfigError("phase_mode",
                              "must be 'per-element', 'ramp' or 'external'")
        if self.phase_base is not None and len(self.phase_base) != self.m_count:
            raise ConfigError("phase_base", "need one anchor phase per element")

    @property
    def n_phase(self) -> int:
        if self.phase_mode == "per-element":
            return self.m_count
        return 0 if self.phase_mode == "external" else 2

    @property
    def n_bend(self) -> int:
        return 2 if self.uniform_bend else 2 * self.m_count

    @property
    def dim(self) -> int:
        return 1 + self.n_phase + self.n_bend + 6 * self.segments

    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        s = self.segments
        lo = np.empty(self.dim)
        hi = np.empty(self.dim)
        lo[0], hi[0] = self.beta_lo, self.beta_hi
        if self.phase_mode == "per-element":
            lo[1:1 + self.n_phase], hi[1:1 + self.n_phase] = 0.0, 2 * math.pi
        elif self.phase_mode == "ramp":
            # centered so the anchored alignment sits at the box midpoint
            lo[1], hi[1] = -math.pi, math.pi     # offset
            lo[2], hi[2] = -math.pi, math.pi     # per-element increment
        b = 1 + self.n_phase
        lo[b:b + self.n_bend] = -self.bend_limit_deg
        hi[b:b + self.n_bend] = self.bend_limit_deg
        k = b + self.n_bend
        for seg in range(s):
            j = k + 6 * seg
            lo[j:j + 2], hi[j:j + 2] = -self.ac_max, self.ac_max
            lo[j + 2:j + 4], hi[j + 2:j + 4] = 0.0, 2 * math.pi
            lo[j + 4:j + 6] = math.pi / 2 - self.pitch_half_range
            hi[j + 4:j + 6] = math.pi / 2 + self.pitch_half_range
        return lo, hi

    def action(self, params: np.ndarray, t: int) -> np.ndarray:
        """Expand the parameter vector into the slot-t action."""
        m = self.m_count
        seg = min(t * self.segments // self.episode_slots, self.segments - 1)
        k = 1 + self.n_phase + self.n_bend
        cmd = params[k + 6 * seg:k + 6 * seg + 6]
        a = np.empty(7 + 3 * m)
        a[0:2] = cmd[0:2]
        a[2:4] = cmd[2:4]
        a[4:6] = cmd[4:6]
        a[6] = params[0]
        if self.phase_mode == "per-element":
            a[7:7 + m] = params[1:1 + m]
        elif self.phase_mode == "ramp":
            base = (np.asarray(self.phase_base)
                    if self.phase_base is not None else 0.0)
            a[7:7 + m] = (base + params[1]
                          + params[2] * np.arange(m)) % (2 * math.pi)
        else:
            a[7:7 + m] = 0.0            # external: caller substitutes phases
        b = 1 + self.n_phase
        if self.uniform_bend:
            a[7 + m:7 + 2 * m] = params[b]
            a[7 + 2 * m:] = params[b + 1]
        else:
            a[7 + m:] = params[b:b + 2 * m]
        return a

    @classmethod
    def from_env(cls, env: CovertEnv, **kw) -> "PolicySpec":
        if kw.get("phase_mode") == "ramp" and "phase_base" not in kw:
            kw["phase_base"] = steering_alignment(env)
        return cls(m_count=env.cfg.m_count, episode_slots=env.cfg.episode_slots,
                   ac_max=env.cfg.kinematics.ac_max, **kw)


def steering_alignment(env: CovertEnv) -> tuple[float, ...]:
    """Per-element phases canceling the start-geometry cascade progression.

    The composite is h_ab + sum conj(h_fb) theta h_af, and each relay link
    carries e^(-j pi (m-1) sin iota), so the cascade progression runs at
    sin iota_fb - sin iota_af and the coherent choice ramps the other way.
    """
    geo = env.initial_geometry()
    s = (math.sin(math.radians(geo.iota_af_deg))
         - math.sin(math.radians(geo.iota_fb_deg)))
    return tuple((math.pi * s * i) % (2 * math.pi)
                 for i in range(env.cfg.m_count))


def channels_from_state(state: np.ndarray, m_count: int) -> ChannelSet:
    """Rebuild the slot's channel snapshot from the interleaved observation."""
    sl = state_slices(m_count)

    def block(name):
        v = state[sl[name]]
        return v[0::2] + 1j * v[1::2]

    return ChannelSet(h_ab=complex(*state[sl["h_ab"]]),
                      h_ac=complex(*state[sl["h_ac"]]),
                      h_aw=complex(*state[sl["h_aw"]]),
                      h_af=block("h_af"), h_fb=block("h_fb"),
                      h_fc=block("h_fc"), h_fw=block("h_fw"))


def feedback_policy(env: CovertEnv, spec: PolicySpec, params: np.ndarray):
    """Parameter schedule with per-slot greedy phase feedback spliced in.

    A fixed open-loop ramp dephases as the platforms move, so instead the
    codewords are re-picked each slot from the observed channels; the flat
    vector keeps only what feedback cannot supply (split, bends, kinematics).
    """
    cfg = env.cfg
    book = phase_codebook(cfg.phase_bits)

    def policy(state, t):
        a = spec.action(params, t)
        cs = channels_from_state(state, cfg.m_count)
        idx = greedy_phase_align(cs, cfg.fit, cfg.phase_bits)
        a[7:7 + cfg.m_count] = book[idx]
        return a

    return policy


def episode_objective(env: CovertEnv, spec: PolicySpec, params: np.ndarray,
                      seed: int, phase_feedback: bool = False) -> float:
    """Mean per-slot penalized reward of one episode under the schedule."""
    if phase_feedback:
        policy = feedback_policy(env, spec, params)
    else:
        policy = lambda state, t: spec.action(params, t)
    state = env.reset(seed)
    total = 0.0
    t = 0
    done = False
    while not done:
        state, rwd, done, _ = env.step(policy(state, t))
        total += rwd
        t += 1
    return total / t


def _mean_objective(env, spec, params, eval_seeds, phase_feedback=False) -> float:
    return float(np.mean([episode_objective(env, spec, params, s, phase_feedback)
                          for s in eval_seeds]))


def random_search(env_factory, budget: int, seed: int,
                  spec: PolicySpec | None = None,
                  eval_seeds=(0,),
                  phase_feedback: bool = False) -> tuple[np.ndarray, float]:
    """Uniform sampling in the policy box; returns the running best."""
    if budget < 1:
        raise ConfigError("budget", "need at least one episode")
    env = env_factory()
    spec = spec or PolicySpec.from_env(env)
    lo, hi = spec.bounds()
    rng = np.random.default_rng(seed)
    best_p, best_v = None, -math.inf
    for _ in range(budget):
        p = rng.uniform(lo, hi)
        v = _mean_objective(env, spec, p, eval_seeds, phase_feedback)
        if v > best_v:
            best_p, best_v = p, v
    return best_p, best_v


@dataclass
class CemHistory:
    elite_mean: list[float] = field(default_factory=list)
    best_so_far: list[float] = field(default_factory=list)
    std_mean: list[float] = field(default_factory=list)


def cem_search(objective, lo: np.ndarray, hi: np.ndarray, population: int,
               elite_frac: float, iterations: int,
               rng: np.random.Generator) -> tuple[np.ndarray, float, CemHistory]:
    """Cross-entropy engine over a box; objective maps params -> scalar."""
    if population < 4:
        raise ConfigError("population", "need at least 4")
    if not 0 < elite_frac <= 0.5:
        raise ConfigError("elite_frac", "must lie in (0, 0.5]")
    n_elite = max(1, int(math.ceil(population * elite_frac)))
    mean = (lo + hi) / 2.0
    std = (hi - lo) / 2.0
    best_p, best_v = mean.copy(), -math.inf
    hist = CemHistory()
    for _ in range(iterations):
        samples = rng.normal(mean, std, size=(population, len(lo)))
        np.clip(samples, lo, hi, out=samples)
        values = np.array([objective(p) for p in samples])
        order = np.argsort(values)[::-1]
        elites = samples[order[:n_elite]]
        elite_values = values[order[:n_elite]]
        if elite_values[0] > best_v:
            best_v = float(elite_values[0])
            best_p = samples[order[0]].copy()
        mean = elites.mean(axis=0)
        # smoothed refit; never grows while the elite cloud is tighter
        std = 0.7 * elites.std(axis=0) + 0.3 * std
        std = np.maximum(std, 1e-9)
        hist.elite_mean.append(float(elite_values.mean()))
        hist.best_so_far.append(best_v)
        hist.std_mean.append(float(std.mean()))
    return best_p, best_v, hist


def cem_optimize(env_factory, population: int, elite_frac: float,
                 iterations: int, seed: int, spec: PolicySpec | None = None,
                 eval_seeds=(0,),
                 phase_feedback: bool = False) -> tuple[np.ndarray, float,
                                                        CemHistory]:
    env = env_factory()
    spec = spec or PolicySpec.from_env(env)
    lo, hi = spec.bounds()
    rng = np.random.default_rng(seed)
    return cem_search(lambda p: _mean_objective(env, spec, p, eval_seeds,
                                                phase_feedback),
                      lo, hi, population, elite_frac, iterations, rng)


def _phase_terms(cs: ChannelSet, p: FitCoefficients, bits: int,
                 incident_deg) -> np.ndarray:
    """(M, K) complex contribution of each codeword at each element."""
    m = len(cs.h_af)
    book = phase_codebook(bits)
    iotas = np.zeros(m) if incident_deg is None else np.asarray(incident_deg, float)
    thetas = np.broadcast_to(book, (m, len(book)))
    amps, _ = fitted_amplitudes(thetas.ravel(),
                                np.repeat(iotas, len(book)), p)
    gains = amps.reshape(m, len(book)) * np.exp(1j * book)[None, :]
    return np.conj(cs.h_fb)[:, None] * cs.h_af[:, None] * gains


def greedy_phase_align(cs: ChannelSet, p: FitCoefficients = DEFAULT_FIT,
                       bits: int = 2, incident_deg=None,
                       sweep_trace: list | None = None) -> np.ndarray:
    """Coordinate-ascent codeword choice maximizing |h_ab + surface sum|.

    Sweeps elements in index order, re-sweeping until a full pass changes
    nothing, with a hard cap of 10 sweeps. Deterministic. sweep_trace, when
    given, collects the objective after every sweep.
    """
    terms = _phase_terms(cs, p, bits, incident_deg)
    m = terms.shape[0]
    idx = np.zeros(m, dtype=int)
    # first pass builds the sum element by element on top of the direct path
    total = cs.h_ab
    for i in range(m):
        k = int(np.argmax(np.abs(total + terms[i])))
        idx[i] = k
        total = total + terms[i, k]
    if sweep_trace is not None:
        sweep_trace.append(abs(total))
    for _ in range(9):
        changed = False
        for i in range(m):
            base = total - terms[i, idx[i]]
            cand = np.abs(base + terms[i])
            k = int(np.argmax(cand))
            if k != idx[i]:
                idx[i] = k
                changed = True
            total = base + terms[i, k]
        if sweep_trace is not None:
            sweep_trace.append(abs(total))
        if not changed:
            break
    return idx


def exhaustive_phase_search(cs: ChannelSet, p: FitCoefficients = DEFAULT_FIT,
                            bits: int = 2, incident_deg=None) -> np.ndarray:
    """Brute force over all codeword tuples; oracle-sized surfaces only."""
    terms = _phase_terms(cs, p, bits, incident_deg)
    m, k = terms.shape
    if k ** m > 300_000:
        raise ConfigError("m_count", "exhaustive search too large")
    best_idx, best_val = None, -math.inf
    idx = np.zeros(m, dtype=int)
    while True:
        val = abs(cs.h_ab + terms[np.arange(m), idx].sum())
        if val > best_val:
            best_val, best_idx = val, idx.copy()
        j = 0
        while j < m:
            idx[j] += 1
            if idx[j] < k:
                break
            idx[j] = 0
            j += 1
        if j == m:
            return best_idx


def surface_gain(cs: ChannelSet, idx: np.ndarray, p: FitCoefficients = DEFAULT_FIT,
                 bits: int = 2, incident_deg=None) -> float:
    """|h_b| for a codeword choice; shared yardstick for the tests and CLI."""
    book = phase_codebook(bits)
    iotas = np.zeros(len(idx)) if incident_deg is None else np.asarray(incident_deg)
    amps, _ = fitted_amplitudes(book[idx], iotas, p)
    theta = amps * np.exp(1j * book[idx])
    return abs(cascaded_channel(cs.h_ab, cs.h_fb, theta, cs.h_af))
