"""Scenario configuration: defaults, TOML loading, overrides, provenance.

Every default carries a provenance label. "model" marks values fixed by the
underlying system model; "assumed" marks defaults this artifact had to choose
(placements, episode length, reward weights); anything touched by the user is
relabeled "user" in the resolved dump.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

try:
    import tomllib
except ModuleNotFoundError:
    import tomli as tomllib

from .channel import ChannelParams
from .em import C_LIGHT, DEFAULT_FIT, CircuitParams, FitCoefficients
from .errors import ConfigError
from .uav import KinematicLimits, UavState

__all__ = ["ScenarioConfig", "load_config", "load_doc", "config_from_dict",
           "apply_overrides", "config_digest", "dump_resolved", "PROVENANCE"]


@dataclass(frozen=True)
class UavInit:
    position: tuple[float, float, float]
    speed: float = 0.0
    heading: float = 0.0
    pitch: float = math.pi / 2


@dataclass(frozen=True)
class ScenarioConfig:
    channel: ChannelParams = field(default_factory=ChannelParams)
    kinematics: KinematicLimits = field(default_factory=KinematicLimits)
    circuit: CircuitParams = field(default_factory=CircuitParams)
    fit: FitCoefficients = DEFAULT_FIT
    m_count: int = 64
    phase_bits: int = 2
    power_w: float = 0.2
    eps: float = 0.1
    eps_c: float = 3.3
    nu1: float = 1.0
    nu2: float = 1.0
    episode_slots: int = 100
    reward_rate_source: str = "bob"
    carol: tuple[float, float, float] = (0.0, 0.0, 0.0)
    willie: tuple[float, float, float] = (200.0, 0.0, 0.0)
    fris_center: tuple[float, float, float] = (100.0, 0.0, 20.0)
    fris_axis: tuple[float, float, float] = (1.0, 0.0, 0.0)
    fris_normal: tuple[float, float, float] = (0.0, 0.0, 1.0)
    element_spacing: float | None = None
    uav_a: UavInit = UavInit((60.0, -30.0, 45.0))
    uav_b: UavInit = UavInit((140.0, 30.0, 45.0))
    seed: int = 0

    def __post_init__(self):
        if self.m_count < 1:
            raise ConfigError("m_count", "need at least one element")
        if self.phase_bits not in (1, 2, 3):
            raise ConfigError("phase_bits", "supported resolutions are 1..3 bits")
        for name in ("power_w", "eps_c", "nu1", "nu2"):
            if getattr(self, name) <= 0:
                raise ConfigError(name, "must be positive")
        if not 0 <= self.eps <= 1:
            raise ConfigError("eps", "must lie in [0, 1]")
        if self.episode_slots < 1:
            raise ConfigError("episode_slots", "need at least one slot")
        if self.reward_rate_source not in ("bob", "carol"):
            raise ConfigError("reward_rate_source", "must be 'bob' or 'carol'")
        if self.element_spacing is not None and self.element_spacing <= 0:
            raise ConfigError("element_spacing", "must be positive")
        for name in ("uav_a", "uav_b"):
            init = getattr(self, name)
            lim = self.kinematics
            if not 0 <= init.speed <= lim.v_max:
                raise ConfigError(f"{name}.speed", "outside [0, v_max]")
            if not lim.alt_min <= init.position[2] <= lim.alt_max:
                raise ConfigError(f"{name}.position", "altitude outside band")
        sep = np.linalg.norm(np.subtract(self.uav_a.position, self.uav_b.position))
        if sep < self.kinematics.d_min:
            raise ConfigError("uav_b.position", "initial UAVs closer than d_min")

    @property
    def spacing(self) -> float:
        if self.element_spacing is not None:
            return self.element_spacing
        return C_LIGHT / self.channel.carrier_hz / 2

    def initial_state(self, name: str) -> UavState:
        init = getattr(self, name)
        return UavState(np.array(init.position), init.speed, init.heading, init.pitch)

    def state_dim(self) -> int:
        return 8 * self.m_count + 15

    def action_dim(self) -> int:
        return 7 + 3 * self.m_count


PROVENANCE = {
    "channel.gamma0": "model", "channel.kappa": "model",
    "channel.alpha_los": "model", "channel.alpha_nlos": "model",
    "channel.noise_w": "model", "channel.carrier_hz": "model",
    "channel.gamma0_in_rician": "assumed",
    "kinematics.v_max": "model", "kinematics.ac_max": "model",
    "kinematics.alt_min": "model", "kinematics.alt_max": "model",
    "kinematics.d_min": "model", "kinematics.dt": "assumed",
    "circuit.l_bottom": "model", "circuit.l_top": "model",
    "circuit.r_top": "model", "circuit.c_top": "model",
    "circuit.c_var_min": "model", "circuit.c_var_max": "model",
    "circuit.freq": "model", "circuit.eps_r": "model",
    "circuit.substrate_height": "model",
    "fit.p": "model",
    "scenario.m_count": "model", "scenario.phase_bits": "assumed",
    "scenario.power_w": "model", "scenario.eps": "model",
    "scenario.eps_c": "model", "scenario.nu1": "assumed",
    "scenario.nu2": "assumed", "scenario.episode_slots": "assumed",
    "scenario.reward_rate_source": "assumed", "scenario.carol": "assumed",
    "scenario.willie": "assumed", "scenario.fris_center": "assumed",
    "scenario.fris_axis": "assumed", "scenario.fris_normal": "assumed",
    "scenario.element_spacing": "assumed", "scenario.seed": "assumed",
    "uav_a.position": "assumed", "uav_a.speed": "assumed",
    "uav_a.heading": "assumed", "uav_a.pitch": "assumed",
    "uav_b.position": "assumed", "uav_b.speed": "assumed",
    "uav_b.heading": "assumed", "uav_b.pitch": "assumed",
}

_SECTION_FIELDS = {
    "channel": ("gamma0", "kappa", "alpha_los", "alpha_nlos", "noise_w",
                "carrier_hz", "gamma0_in_rician"),
    "kinematics": ("v_max", "ac_max", "alt_min", "alt_max", "d_min", "dt"),
    "circuit": ("l_bottom", "l_top", "r_top", "c_top", "c_var_min",
                "c_var_max", "freq", "eps_r", "substrate_height"),
    "fit": ("p",),
    "scenario": ("m_count", "phase_bits", "power_w", "eps", "eps_c", "nu1",
                 "nu2", "episode_slots", "reward_rate_source", "carol",
                 "willie", "fris_center", "fris_axis", "fris_normal",
                 "element_spacing", "seed"),
    "uav_a": ("position", "speed", "heading", "pitch"),
    "uav_b": ("position", "speed", "heading", "pitch"),
}

_VEC3 = ("carol", "willie", "fris_center", "fris_axis", "fris_normal", "position")


def _check_section(name: str, table: dict):
    if not isinstance(table, dict):
        raise ConfigError(name, "expected a table")
    for key in table:
        if key not in _SECTION_FIELDS[name]:
            raise ConfigError(f"{name}.{key}", "unknown field")
    for key in _VEC3:
        if key in table:
            v = table[key]
            if not (isinstance(v, (list, tuple)) and len(v) == 3
                    and all(isinstance(x, (int, float)) for x in v)):
                raise ConfigError(f"{name}.{key}", "expected a 3-vector")
            table[key] = tuple(float(x) for x in v)


def config_from_dict(doc: dict) -> ScenarioConfig:
    doc = {k: dict(v) if isinstance(v, dict) else v for k, v in doc.items()}
    for key in doc:
        if key not in _SECTION_FIELDS:
            raise ConfigError(key, "unknown section")
    for name in doc:
        _check_section(name, doc[name])

    kwargs = {}
    try:
        if "channel" in doc:
            kwargs["channel"] = ChannelParams(**doc["channel"])
        if "kinematics" in doc:
            kwargs["kinematics"] = KinematicLimits(**doc["kinematics"])
        if "circuit" in doc:
            kwargs["circuit"] = CircuitParams(**doc["circuit"])
        if "fit" in doc:
            p = doc["fit"]["p"]
            if len(p) != 7:
                raise ConfigError("fit.p", "expected 7 coefficients")
            kwargs["fit"] = FitCoefficients(*p)
        for name in ("uav_a", "uav_b"):
            if name in doc:
                kwargs[name] = UavInit(**doc[name])
        kwargs.update(doc.get("scenario", {}))
        return ScenarioConfig(**kwargs)
    except TypeError as exc:
        raise ConfigError("config", str(exc)) from exc


def load_doc(path: str) -> dict:
    """Raw TOML document, before overrides and validation."""
    try:
        with open(path, "rb") as fh:
            return tomllib.load(fh)
    except FileNotFoundError:
        raise ConfigError("config", f"no such file: {path}")
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError("config", f"{path}: {exc}")


def load_config(path: str) -> ScenarioConfig:
    return config_from_dict(load_doc(path))


def _parse_literal(text: str):
    try:
        return tomllib.loads(f"v = {text}")["v"]
    except tomllib.TOMLDecodeError:
        return text


def apply_overrides(doc: dict, assignments: list[str]) -> list[str]:
    """Mutate a config dict with dotted `section.key=value` assignments.

    Returns the touched dotted paths so the dump can relabel them "user".
    """
    touched = []
    for item in assignments:
        if "=" not in item:
            raise ConfigError("override", f"expected key=value, got {item!r}")
        path, raw = item.split("=", 1)
        parts = path.strip().split(".")
        if len(parts) != 2:
            raise ConfigError("override", f"expected section.key, got {path!r}")
        section, key = parts
        if section not in _SECTION_FIELDS or key not in _SECTION_FIELDS[section]:
            raise ConfigError(path.strip(), "unknown config field")
        doc.setdefault(section, {})[key] = _parse_literal(raw.strip())
        touched.append(path.strip())
    return touched


def _resolved_doc(cfg: ScenarioConfig) -> dict:
    return {
        "channel": {k: getattr(cfg.channel, k) for k in _SECTION_FIELDS["channel"]},
        "kinematics": {k: getattr(cfg.kinematics, k)
                       for k in _SECTION_FIELDS["kinematics"]},
        "circuit": {k: getattr(cfg.circuit, k) for k in _SECTION_FIELDS["circuit"]},
        "fit": {"p": list(cfg.fit.p)},
        "scenario": {k: getattr(cfg, k) for k in _SECTION_FIELDS["scenario"]},
        "uav_a": {k: getattr(cfg.uav_a, k) for k in _SECTION_FIELDS["uav_a"]},
        "uav_b": {k: getattr(cfg.uav_b, k) for k in _SECTION_FIELDS["uav_b"]},
    }


def _canonical(value):
    if isinstance(value, float):
        return float(f"{value:.17g}")
    if isinstance(value, (list, tuple)):
        return [_canonical(v) for v in value]
    if isinstance(value, dict):
        return {k: _canonical(v) for k, v in sorted(value.items())}
    return value


def config_digest(cfg: ScenarioConfig) -> str:
    doc = _canonical(_resolved_doc(cfg))
    blob = json.dumps(doc, sort_keys=True, separators=(",", ":")).encode()
    return hashlib.sha256(blob).hexdigest()


def _toml_value(v) -> str:
    if isinstance(v, bool):
        return "true" if v else "false"
    if isinstance(v, (int, float)):
        return repr(v)
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple)):
        return "[" + ", ".join(_toml_value(x) for x in v) + "]"
    raise ConfigError("dump", f"cannot serialize {type(v).__name__}")


def dump_resolved(cfg: ScenarioConfig, user_paths: set[str] = frozenset()) -> str:
    """Resolved config as TOML, one provenance comment per value."""
    lines = [f"# resolved scenario, digest {config_digest(cfg)}"]
    doc = _resolved_doc(cfg)
    for section, table in doc.items():
        lines.append(f"\n[{section}]")
        for key, value in table.items():
            if value is None:
                continue
            path = f"{section}.{key}"
            prov_key = path if path in PROVENANCE else f"scenario.{key}"
            label = "user" if path in user_paths else PROVENANCE.get(prov_key, "assumed")
            lines.append(f"{key} = {_toml_value(value)}  # {label}")
    return "\n".join(lines) + "\n"


def with_scenario_values(cfg: ScenarioConfig, **kw) -> ScenarioConfig:
    return replace(cfg, **kw)
