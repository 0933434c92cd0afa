"""Command line front end: train a policy or run the random baseline."""
from __future__ import annotations

import argparse
import json
import sys
from pathlib import Path

import numpy as np

from .client import BridgeClient
from .dsac import TrainerConfig, random_baseline, train

__all__ = ["main"]


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="fristrain",
        description="Soft actor-critic training against a frisim/1 server")
    sub = ap.add_subparsers(dest="verb", required=True)

    tr = sub.add_parser("train", help="run the act/store/update loop")
    tr.add_argument("--env-cmd", required=True,
                    help="command line that starts a frisim/1 stdio server")
    tr.add_argument("--episodes", type=int, default=200)
    tr.add_argument("--seed", type=int, default=0)
    tr.add_argument("--out", required=True, help="output directory")
    tr.add_argument("--batch-size", type=int, default=64)
    tr.add_argument("--warmup-steps", type=int, default=400)
    tr.add_argument("--discount", type=float, default=0.99)
    tr.add_argument("--entropy-weight", type=float, default=0.2)
    tr.add_argument("--sigma-min", type=float, default=1e-3)
    tr.add_argument("--clip-radius", type=float, default=10.0)
    tr.add_argument("--actor-lr", type=float, default=3e-4)
    tr.add_argument("--critic-lr", type=float, default=3e-4)
    tr.add_argument("--buffer-capacity", type=int, default=100_000)
    tr.add_argument("--updates-per-step", type=int, default=1)
    tr.add_argument("--target-blend", type=float, default=0.005)
    tr.add_argument("--hidden", default="256,256",
                    help="comma-separated hidden layer widths")
    tr.add_argument("--ac-max", type=float, default=2.0)
    tr.add_argument("--bend-limit-deg", type=float, default=90.0)

    rb = sub.add_parser("baseline", help="box-uniform random policy rollouts")
    rb.add_argument("--env-cmd", required=True)
    rb.add_argument("--episodes", type=int, default=200)
    rb.add_argument("--seed", type=int, default=0)
    rb.add_argument("--out", help="optional directory for baseline.csv")
    rb.add_argument("--ac-max", type=float, default=2.0)
    rb.add_argument("--bend-limit-deg", type=float, default=90.0)
    return ap


def _cmd_train(args) -> int:
    hidden = tuple(int(w) for w in args.hidden.split(",") if w)
    cfg = TrainerConfig(
        episodes=args.episodes, seed=args.seed, discount=args.discount,
        entropy_weight=args.entropy_weight, sigma_min=args.sigma_min,
        clip_radius=args.clip_radius, hidden=hidden,
        actor_lr=args.actor_lr, critic_lr=args.critic_lr,
        batch_size=args.batch_size, buffer_capacity=args.buffer_capacity,
        warmup_steps=args.warmup_steps, updates_per_step=args.updates_per_step,
        target_blend=args.target_blend, ac_max=args.ac_max,
        bend_limit_deg=args.bend_limit_deg)
    with BridgeClient.spawn(args.env_cmd) as client:
        _, rows = train(client, cfg, args.out)
    tail = rows[-min(20, len(rows)):]
    summary = {"episodes": len(rows),
               "final_20_mean_reward": float(np.mean(
                   [r["mean_reward"] for r in tail])),
               "out": str(Path(args.out))}
    print(json.dumps(summary))
    return 0


def _cmd_baseline(args) -> int:
    with BridgeClient.spawn(args.env_cmd) as client:
        means = random_baseline(client, args.episodes, args.seed,
                                args.ac_max, args.bend_limit_deg)
    if args.out:
        out = Path(args.out)
        out.mkdir(parents=True, exist_ok=True)
        with (out / "baseline.csv").open("w") as fh:
            fh.write("episode,mean_reward\n")
            for ep, m in enumerate(means):
                fh.write(f"{ep},{m:.10g}\n")
    print(json.dumps({"episodes": len(means),
                      "mean_reward": float(np.mean(means))}))
    return 0


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    if args.verb == "train":
        return _cmd_train(args)
    return _cmd_baseline(args)


if __name__ == "__main__":
    sys.exit(main())
