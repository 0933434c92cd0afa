"""Covert UAV link simulator with a bendable reflecting surface.

Physics layers (surface electromagnetics, fading channels, NOMA rates,
detection statistics), UAV kinematics, a slot-stepped episode environment,
derivative-free baseline optimizers, and a newline-JSON wire protocol for
driving episodes from another process.
"""

__version__ = "0.1.0"

from .channel import (ChannelParams, ChannelSet, LinkGeometry, cascaded_channel,
                      compose, draw_channel_set, los_channel, los_phase,
                      rician_sample, ris_los_vector)
from .config import (ScenarioConfig, apply_overrides, config_digest,
                     config_from_dict, dump_resolved, load_config, load_doc)
from .covert import (CovertStats, c1_satisfied, covert_stats, kl_pair, lambdas,
                     optimal_radiometer, pinsker_bound)
from .em import (C_LIGHT, DEFAULT_FIT, ETA0, CircuitParams, FitCoefficients,
                 RisConfiguration, SurfaceParams, assemble_configuration,
                 bent_normals, effective_incident_angles, element_positions,
                 fitted_amplitude, phase_codebook, quantize_phase,
                 reflection_matrix, rt_from_surface_params,
                 tm_surface_synthesis, unit_cell_gamma)
from .env import CovertEnv, episode_metrics, run_episode, state_slices
from .errors import (ConfigError, DegenerateGeometry, DimensionMismatch,
                     DomainError, EpisodeFinished, FrisimError, ProtocolError,
                     SingularSurface)
from .noma import NomaParams, rate_bob, rate_carol
from .optim import (PolicySpec, cem_optimize, cem_search, episode_objective,
                    exhaustive_phase_search, greedy_phase_align, random_search,
                    surface_gain)
from .uav import (KinematicLimits, UavState, check_separation,
                  enforce_separation, step_kinematics)

__all__ = [
    "__version__",
    "ChannelParams", "ChannelSet", "LinkGeometry", "cascaded_channel",
    "compose", "draw_channel_set", "los_channel", "los_phase",
    "rician_sample", "ris_los_vector",
    "ScenarioConfig", "apply_overrides", "config_digest", "config_from_dict",
    "dump_resolved", "load_config", "load_doc",
    "CovertStats", "c1_satisfied", "covert_stats", "kl_pair", "lambdas",
    "optimal_radiometer", "pinsker_bound",
    "C_LIGHT", "DEFAULT_FIT", "ETA0", "CircuitParams", "FitCoefficients",
    "RisConfiguration", "SurfaceParams", "assemble_configuration",
    "bent_normals", "effective_incident_angles", "element_positions",
    "fitted_amplitude", "phase_codebook", "quantize_phase",
    "reflection_matrix", "rt_from_surface_params", "tm_surface_synthesis",
    "unit_cell_gamma",
    "CovertEnv", "episode_metrics", "run_episode", "state_slices",
    "ConfigError", "DegenerateGeometry", "DimensionMismatch", "DomainError",
    "EpisodeFinished", "FrisimError", "ProtocolError", "SingularSurface",
    "NomaParams", "rate_bob", "rate_carol",
    "PolicySpec", "cem_optimize", "cem_search", "episode_objective",
    "exhaustive_phase_search", "greedy_phase_align", "random_search",
    "surface_gain",
    "KinematicLimits", "UavState", "check_separation", "enforce_separation",
    "step_kinematics",
]
