"""Distributional soft actor-critic over the wire protocol.

The critic models the soft return as a Gaussian and is fit by maximum
likelihood against sampled one-step backups; the actor maximizes the
critic mean plus policy entropy through the reparameterization trick.
Target copies of both networks, refreshed by soft blending, supply the
backup samples. The trainer owns no simulator code: every transition
comes through a BridgeClient, so anything speaking the same line protocol
can be trained against.
"""
from __future__ import annotations

import copy
import csv
import math
from dataclasses import asdict, dataclass
from pathlib import Path

import numpy as np
import torch

from .client import ActionBox, BridgeClient
from .nets import GaussianActor, ReturnCritic
from .replay import ReplayBuffer

__all__ = ["TrainerConfig", "TargetNets", "TrainingDiverged", "DsacTrainer",
           "critic_target", "critic_loss", "actor_loss", "soft_update",
           "episode_seed", "train", "random_baseline"]


class TrainingDiverged(RuntimeError):
    """Raised when a loss or network output stops being finite."""


@dataclass
class TrainerConfig:
    episodes: int = 200
    seed: int = 0
    discount: float = 0.99
    entropy_weight: float = 0.2
    sigma_min: float = 1e-3
    clip_radius: float = 10.0
    hidden: tuple[int, ...] = (256, 256)
    actor_lr: float = 3e-4
    critic_lr: float = 3e-4
    batch_size: int = 64
    buffer_capacity: int = 100_000
    warmup_steps: int = 400
    updates_per_step: int = 1
    target_blend: float = 0.005
    # assumed action-box limits; the server projects violations regardless
    ac_max: float = 2.0
    bend_limit_deg: float = 90.0


@dataclass
class TargetNets:
    """Slow copies used for backup computation only."""
    actor: GaussianActor
    critic: ReturnCritic


def soft_update(target: torch.nn.Module, online: torch.nn.Module,
                coeff: float) -> None:
    """Blend parameters: theta' <- coeff*theta + (1-coeff)*theta'.

    coeff=1 copies the online network exactly; coeff=0 is a no-op.
    """
    if not 0.0 <= coeff <= 1.0:
        raise ValueError("blend coefficient must lie in [0, 1]")
    with torch.no_grad():
        for tp, op in zip(target.parameters(), online.parameters()):
            tp.mul_(1.0 - coeff).add_(op, alpha=coeff)


def critic_target(reward, next_state, next_action, targets: TargetNets,
                  discount: float, entropy_weight: float, done=False,
                  noise=None, clip_center=None, clip_radius: float = 10.0):
    """One sampled soft backup: r + discount*(G' - entropy_weight*log pi').

    G' is a draw from the target critic's return distribution at the next
    pair and log pi' the target actor's density of the supplied next
    action. The bracket vanishes at terminal transitions. When clip_center
    is given, the result is clamped into clip_center +- clip_radius.
    """
    dt = (next_state.dtype if torch.is_tensor(next_state)
          else torch.get_default_dtype())
    reward = torch.as_tensor(reward, dtype=dt)
    live = 1.0 - torch.as_tensor(done, dtype=dt)
    with torch.no_grad():
        ret = targets.critic.sample(next_state, next_action, noise=noise)
        logp = targets.actor.log_prob(next_state, next_action)
    target = reward + discount * live * (ret - entropy_weight * logp)
    if clip_center is not None:
        center = torch.as_tensor(clip_center, dtype=dt)
        target = torch.maximum(torch.minimum(target, center + clip_radius),
                               center - clip_radius)
    return target


def critic_loss(critic: ReturnCritic, states, actions, target) -> torch.Tensor:
    """Gaussian negative log-likelihood of backup samples under the head."""
    mean, sigma = critic(states, actions)
    t = target.detach()
    return (torch.log(sigma) + 0.5 * ((t - mean) / sigma) ** 2).mean()


def actor_loss(actor: GaussianActor, critic: ReturnCritic, states,
               entropy_weight: float, noise=None) -> torch.Tensor:
    """Reparameterized policy objective: minimize E[alpha*log pi - J]."""
    actions, logp = actor.sample(states, noise=noise)
    j, _ = critic(states, actions)
    return (entropy_weight * logp - j).mean()


def episode_seed(seed: int, episode: int) -> int:
    return (seed * 1_000_003 + episode) % (2 ** 63)


class DsacTrainer:
    """Networks, buffer, and update rule; episode driving lives in train()."""

    def __init__(self, state_dim: int, action_dim: int, cfg: TrainerConfig):
        torch.manual_seed(cfg.seed)
        self.cfg = cfg
        self.rng = np.random.default_rng(cfg.seed)
        self.box = ActionBox.from_dims(action_dim, cfg.ac_max,
                                       cfg.bend_limit_deg)
        hidden = tuple(cfg.hidden)
        self.actor = GaussianActor(state_dim, action_dim,
                                   self.box.low, self.box.high, hidden)
        self.critic = ReturnCritic(state_dim, action_dim, hidden,
                                   cfg.sigma_min)
        self.targets = TargetNets(copy.deepcopy(self.actor),
                                  copy.deepcopy(self.critic))
        for net in (self.targets.actor, self.targets.critic):
            for p in net.parameters():
                p.requires_grad_(False)
        self.buffer = ReplayBuffer(cfg.buffer_capacity, state_dim, action_dim)
        self.opt_actor = torch.optim.Adam(self.actor.parameters(),
                                          lr=cfg.actor_lr)
        self.opt_critic = torch.optim.Adam(self.critic.parameters(),
                                           lr=cfg.critic_lr)
        self.total_steps = 0
        self.updates_done = 0

    def act(self, state: np.ndarray) -> np.ndarray:
        """Box-uniform during warmup, then a stochastic policy draw."""
        if self.total_steps < self.cfg.warmup_steps:
            return self.box.sample(self.rng)
        with torch.no_grad():
            s = torch.as_tensor(state, dtype=torch.get_default_dtype())
            action, _ = self.actor.sample(s.unsqueeze(0))
        a = action.squeeze(0).cpu().numpy().astype(float)
        if not np.all(np.isfinite(a)):
            raise TrainingDiverged("actor produced a non-finite action")
        return a

    def observe(self, state, action, reward, next_state, done) -> None:
        self.buffer.push(state, action, reward, next_state, done)
        self.total_steps += 1

    def ready(self) -> bool:
        return (self.total_steps >= self.cfg.warmup_steps
                and len(self.buffer) >= self.cfg.batch_size)

    def update(self) -> tuple[float, float]:
        """One minibatch step of critic and actor; returns both losses."""
        cfg = self.cfg
        s, a, r, s2, d = self.buffer.sample(cfg.batch_size, self.rng)
        dt = torch.get_default_dtype()
        states = torch.as_tensor(s, dtype=dt)
        actions = torch.as_tensor(a, dtype=dt)
        rewards = torch.as_tensor(r, dtype=dt)
        states2 = torch.as_tensor(s2, dtype=dt)
        dones = torch.as_tensor(d, dtype=dt)
        with torch.no_grad():
            next_actions, _ = self.targets.actor.sample(states2)
            j_now, _ = self.critic(states, actions)
        backup = critic_target(rewards, states2, next_actions, self.targets,
                               cfg.discount, cfg.entropy_weight, done=dones,
                               clip_center=j_now, clip_radius=cfg.clip_radius)
        c_loss = critic_loss(self.critic, states, actions, backup)
        self.opt_critic.zero_grad()
        c_loss.backward()
        self.opt_critic.step()
        a_loss = actor_loss(self.actor, self.critic, states,
                            cfg.entropy_weight)
        self.opt_actor.zero_grad()
        a_loss.backward()
        self.opt_actor.step()
        soft_update(self.targets.actor, self.actor, cfg.target_blend)
        soft_update(self.targets.critic, self.critic, cfg.target_blend)
        self.updates_done += 1
        return float(c_loss.detach()), float(a_loss.detach())

    def checkpoint(self) -> dict:
        return {"actor": self.actor.state_dict(),
                "critic": self.critic.state_dict(),
                "target_actor": self.targets.actor.state_dict(),
                "target_critic": self.targets.critic.state_dict(),
                "config": asdict(self.cfg),
                "total_steps": self.total_steps,
                "updates_done": self.updates_done}


def _dump_state(trainer: DsacTrainer, out_dir: Path,
                c_loss: float, a_loss: float) -> Path:
    path = out_dir / "diverged_state.pt"
    dump = trainer.checkpoint()
    dump["critic_loss"] = c_loss
    dump["actor_loss"] = a_loss
    torch.save(dump, path)
    return path


def _run_episode(trainer: DsacTrainer, client: BridgeClient, seed: int,
                 out_dir: Path) -> dict:
    state = client.reset(seed)
    done = False
    rewards: list[float] = []
    c1_hits = 0
    last_info: dict = {}
    while not done:
        action = trainer.act(state)
        nxt, rwd, done, info = client.step(action)
        trainer.observe(state, action, rwd, nxt, done)
        if trainer.ready():
            for _ in range(trainer.cfg.updates_per_step):
                c_loss, a_loss = trainer.update()
                if not (math.isfinite(c_loss) and math.isfinite(a_loss)):
                    dump = _dump_state(trainer, out_dir, c_loss, a_loss)
                    raise TrainingDiverged(
                        f"non-finite loss (critic={c_loss}, actor={a_loss}); "
                        f"state dumped to {dump}")
        rewards.append(rwd)
        c1_hits += bool(info.get("constraints", {}).get("c1_ok", False))
        last_info = info
        state = nxt
    rates = last_info.get("rates", {})
    return {"mean_reward": float(np.mean(rewards)),
            "avg_R_b": float(rates.get("avg_r_b", math.nan)),
            "avg_R_c": float(rates.get("avg_r_c", math.nan)),
            "c1_frac": c1_hits / max(len(rewards), 1)}


def train(client: BridgeClient, cfg: TrainerConfig,
          out_dir) -> tuple[DsacTrainer, list[dict]]:
    """Run the act/store/update loop; writes learning_curve.csv + checkpoint."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    trainer = DsacTrainer(client.state_dim, client.action_dim, cfg)
    rows: list[dict] = []
    with (out / "learning_curve.csv").open("w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["episode", "mean_reward", "avg_R_b", "avg_R_c",
                         "c1_frac"])
        for ep in range(cfg.episodes):
            stats = _run_episode(trainer, client, episode_seed(cfg.seed, ep),
                                 out)
            rows.append(stats)
            writer.writerow([ep, f"{stats['mean_reward']:.10g}",
                             f"{stats['avg_R_b']:.10g}",
                             f"{stats['avg_R_c']:.10g}",
                             f"{stats['c1_frac']:.10g}"])
            fh.flush()
    torch.save(trainer.checkpoint(), out / "checkpoint.pt")
    return trainer, rows


def random_baseline(client: BridgeClient, episodes: int, seed: int,
                    ac_max: float = 2.0,
                    bend_limit_deg: float = 90.0) -> list[float]:
    """Mean per-slot reward of box-uniform actions, one entry per episode.

    Episode seeds match train() so paired comparisons see the same channels.
    """
    box = ActionBox.from_dims(client.action_dim, ac_max, bend_limit_deg)
    rng = np.random.default_rng(seed)
    means: list[float] = []
    for ep in range(episodes):
        client.reset(episode_seed(seed, ep))
        done = False
        rewards: list[float] = []
        while not done:
            _, rwd, done, _ = client.step(box.sample(rng))
            rewards.append(rwd)
        means.append(float(np.mean(rewards)))
    return means
