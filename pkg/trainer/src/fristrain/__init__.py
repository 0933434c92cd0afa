"""Distributional soft actor-critic trainer for frisim/1 environments."""

from .client import ActionBox, BridgeClient, BridgeError, PROTOCOL_VERSION
from .dsac import (DsacTrainer, TargetNets, TrainerConfig, TrainingDiverged,
                   actor_loss, critic_loss, critic_target, random_baseline,
                   soft_update, train)
from .nets import GaussianActor, ReturnCritic
from .replay import ReplayBuffer

__all__ = [
    "PROTOCOL_VERSION", "ActionBox", "BridgeClient", "BridgeError",
    "ReplayBuffer", "GaussianActor", "ReturnCritic",
    "TrainerConfig", "TargetNets", "DsacTrainer", "TrainingDiverged",
    "critic_target", "critic_loss", "actor_loss", "soft_update",
    "train", "random_baseline",
]
