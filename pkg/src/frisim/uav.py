"""UAV point-mass kinematics with projection-based constraint handling.

Commands are projected into the feasible set rather than rejected: every
clamp is reported through the flags dict so the environment can penalize
infeasible actions without terminating the episode.
"""
from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import ConfigError

__all__ = [
    "UavState",
    "KinematicLimits",
    "step_kinematics",
    "check_separation",
    "enforce_separation",
]


@dataclass(frozen=True, eq=False)
class UavState:
    """Position (m), speed (m/s) and the last commanded attitude angles."""

    position: np.ndarray
    speed: float
    heading: float = 0.0
    pitch: float = math.pi / 2

    def __post_init__(self):
        object.__setattr__(self, "position", np.asarray(self.position, dtype=float))
        if self.position.shape != (3,):
            raise ConfigError("position", "must be a 3-vector")


@dataclass(frozen=True)
class KinematicLimits:
    v_max: float = 5.0
    ac_max: float = 2.0
    alt_min: float = 35.0
    alt_max: float = 60.0
    d_min: float = 60.0
    dt: float = 1.0

    def __post_init__(self):
        for name in ("v_max", "ac_max", "d_min", "dt"):
            if getattr(self, name) <= 0:
                raise ConfigError(name, "must be positive")
        if not 0 < self.alt_min < self.alt_max:
            raise ConfigError("alt_min", "need 0 < alt_min < alt_max")


def _direction(heading: float, pitch: float) -> np.ndarray:
    # pitch is measured from straight down, so pi/2 is level flight
    sp = math.sin(pitch)
    return np.array([sp * math.cos(heading), sp * math.sin(heading), -math.cos(pitch)])


def step_kinematics(s: UavState, ac: float, heading: float, pitch: float,
                    lim: KinematicLimits) -> tuple[UavState, dict[str, bool]]:
    """Advance one slot. Signed acceleration; all clamps flagged, never raised."""
    flags = {"accel_clamped": False, "speed_clamped": False,
             "pitch_clamped": False, "altitude_clamped": False}

    if abs(ac) > lim.ac_max:
        ac = math.copysign(lim.ac_max, ac)
        flags["accel_clamped"] = True

    heading = heading % (2 * math.pi)
    if not 0 <= pitch < math.pi:
        pitch = min(max(pitch, 0.0), math.nextafter(math.pi, 0.0))
        flags["pitch_clamped"] = True

    v_new = s.speed + ac * lim.dt
    if not 0 <= v_new <= lim.v_max:
        v_new = min(max(v_new, 0.0), lim.v_max)
        flags["speed_clamped"] = True

    # trapezoidal displacement keeps the step dt-additive for constant commands
    q = s.position + 0.5 * (s.speed + v_new) * lim.dt * _direction(heading, pitch)
    if not lim.alt_min <= q[2] <= lim.alt_max:
        q[2] = min(max(q[2], lim.alt_min), lim.alt_max)
        flags["altitude_clamped"] = True

    return UavState(q, v_new, heading, pitch), flags


def check_separation(q_a: np.ndarray, q_b: np.ndarray,
                     d_min: float) -> tuple[bool, float]:
    """Boundary inclusive: exactly d_min apart counts as safe."""
    dist = float(np.linalg.norm(np.asarray(q_a, float) - np.asarray(q_b, float)))
    return dist >= d_min, dist


def _push_apart(q_a, q_b, axis, target):
    mid = 0.5 * (q_a + q_b)
    return mid + 0.5 * target * axis, mid - 0.5 * target * axis


def enforce_separation(s_a: UavState, s_b: UavState,
                       lim: KinematicLimits) -> tuple[UavState, UavState, bool]:
    """Project both UAVs to at least d_min apart without leaving the altitude band.

    Symmetric push along the inter-UAV axis; if re-clamping the altitudes
    undoes the separation, fall back to a horizontal-only push, which always
    succeeds because the vertical gap is then below d_min.
    """
    ok, dist = check_separation(s_a.position, s_b.position, lim.d_min)
    if ok:
        return s_a, s_b, False

    q_a, q_b = s_a.position.copy(), s_b.position.copy()
    if dist < 1e-9:
        axis = np.array([1.0, 0.0, 0.0])
    else:
        axis = (q_a - q_b) / dist

    target = lim.d_min
    for _ in range(8):
        p_a, p_b = _push_apart(q_a, q_b, axis, target)
        p_a[2] = min(max(p_a[2], lim.alt_min), lim.alt_max)
        p_b[2] = min(max(p_b[2], lim.alt_min), lim.alt_max)
        if check_separation(p_a, p_b, lim.d_min)[0]:
            break
        dz = p_a[2] - p_b[2]
        horiz = q_a[:2] - q_b[:2]
        hnorm = float(np.linalg.norm(horiz))
        haxis = horiz / hnorm if hnorm > 1e-9 else np.array([1.0, 0.0])
        hsep = math.sqrt(max(target ** 2 - dz * dz, 0.0))
        mid = 0.5 * (q_a[:2] + q_b[:2])
        p_a = np.array([*(mid + 0.5 * hsep * haxis), p_a[2]])
        p_b = np.array([*(mid - 0.5 * hsep * haxis), p_b[2]])
        if check_separation(p_a, p_b, lim.d_min)[0]:
            break
        # rounding landed a hair short; widen the push and retry
        target *= 1 + 1e-12
    return (UavState(p_a, s_a.speed, s_a.heading, s_a.pitch),
            UavState(p_b, s_b.speed, s_b.heading, s_b.pitch), True)
