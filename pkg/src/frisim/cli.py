"""Experiment runner: episodes, parameter sweeps, wire service, config checks.

Verbs:
    run              optimize (or not, for greedy) and write one episode
    sweep            grid over one config path, optimizer re-run per point
    serve            expose an environment over the newline-JSON protocol
    validate-config  parse, validate, and dump the resolved scenario

All artifacts are plain CSV/JSON/TOML and byte-reproducible from
(config, seed, package version). Exit codes: 0 ok, 2 config problem,
3 failed trend assertion, 1 anything else.
"""
from __future__ import annotations

import argparse
import json
import math
import os
import sys
from concurrent.futures import ProcessPoolExecutor

import numpy as np

from . import __version__
from .bridge import serve_stdio, serve_tcp
from .config import (apply_overrides, config_digest, config_from_dict,
                     dump_resolved, load_doc)
from .env import CovertEnv, run_episode
from .errors import ConfigError, FrisimError
from .optim import (PolicySpec, cem_optimize, channels_from_state,
                    feedback_policy, greedy_phase_align, random_search)

__all__ = ["main"]

EVAL_SEED_BASE = 10_000
ELITE_FRAC = 0.125


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(int(v))
    if isinstance(v, float):
        return repr(v)
    return str(v)


def _write_text(path: str, text: str):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _write_json(path: str, obj: dict):
    _write_text(path, json.dumps(obj, sort_keys=True, indent=2) + "\n")


def _load(args) -> tuple[dict, list[str]]:
    """Config document with --set/--seed folded in; returns (doc, user paths)."""
    doc = load_doc(args.config)
    touched = apply_overrides(doc, args.set or [])
    if args.seed is not None:
        touched += apply_overrides(doc, [f"scenario.seed={args.seed}"])
    return doc, touched


def _greedy_policy(env: CovertEnv):
    """Hover-and-align baseline: codewords from the last observed channels."""
    cfg = env.cfg

    def policy(state, t):
        cs = channels_from_state(state, cfg.m_count)
        idx = greedy_phase_align(cs, cfg.fit, cfg.phase_bits)
        return env.phases_to_action(idx)

    return policy


def _fit_policy(env: CovertEnv, optimizer: str, budget: int, population: int,
                seed: int, phase_mode: str = "feedback"):
    """Run the chosen search; returns (policy, best objective, cem history)."""
    if optimizer == "greedy":
        return _greedy_policy(env), None, None
    feedback = phase_mode == "feedback"
    spec = PolicySpec.from_env(
        env, phase_mode="external" if feedback else phase_mode)
    hist = None
    if optimizer == "random":
        params, value = random_search(lambda: env, budget, seed, spec,
                                      phase_feedback=feedback)
    else:
        iterations = max(1, budget // population)
        params, value, hist = cem_optimize(lambda: env, population,
                                           ELITE_FRAC, iterations, seed, spec,
                                           phase_feedback=feedback)
    if feedback:
        return feedback_policy(env, spec, params), value, hist
    return (lambda state, t: spec.action(params, t)), value, hist


def _episode_rows(trace) -> list[str]:
    rows = ["slot,R_b,R_c,xi_star,c1_ok,reward"]
    for rwd, info in zip(trace.rewards, trace.infos):
        rows.append(",".join([
            str(info["slot"]),
            _fmt(info["rates"]["r_b"]),
            _fmt(info["rates"]["r_c"]),
            _fmt(info["covert"]["xi_star"]),
            _fmt(info["covert"]["c1_ok"]),
            _fmt(rwd),
        ]))
    return rows


def _cmd_run(args) -> int:
    doc, touched = _load(args)
    cfg = config_from_dict(doc)
    env = CovertEnv(cfg)
    policy, objective, hist = _fit_policy(env, args.optimizer, args.budget,
                                          args.population, cfg.seed,
                                          args.phase_mode)
    trace = run_episode(env, policy, cfg.seed)

    os.makedirs(args.out, exist_ok=True)
    _write_text(os.path.join(args.out, "episode.csv"),
                "\n".join(_episode_rows(trace)) + "\n")
    if hist is not None:
        rows = ["iteration,elite_mean,best_so_far,std_mean"]
        for i, (em, bf, sm) in enumerate(zip(hist.elite_mean,
                                             hist.best_so_far, hist.std_mean)):
            rows.append(f"{i},{_fmt(em)},{_fmt(bf)},{_fmt(sm)}")
        _write_text(os.path.join(args.out, "history.csv"),
                    "\n".join(rows) + "\n")

    n = len(trace.infos)
    last = trace.infos[-1]
    summary = {
        "version": __version__,
        "config_digest": config_digest(cfg),
        "seed": cfg.seed,
        "optimizer": args.optimizer,
        "budget": None if args.optimizer == "greedy" else args.budget,
        "objective": objective,
        "slots": n,
        "mean_r_b": sum(i["rates"]["r_b"] for i in trace.infos) / n,
        "mean_r_c": sum(i["rates"]["r_c"] for i in trace.infos) / n,
        "mean_xi_star": sum(i["covert"]["xi_star"] for i in trace.infos) / n,
        "mean_reward": sum(trace.rewards) / n,
        "c1_fraction": sum(i["covert"]["c1_ok"] for i in trace.infos) / n,
        "final_avg_r_b": last["rates"]["avg_r_b"],
        "final_avg_r_c": last["rates"]["avg_r_c"],
    }
    _write_json(os.path.join(args.out, "summary.json"), summary)
    _write_text(os.path.join(args.out, "resolved.toml"),
                dump_resolved(cfg, set(touched)))
    return 0


def _sweep_point(task: dict) -> dict:
    """One (value, seed) sweep cell; runs in a worker process."""
    doc = {k: dict(v) for k, v in task["doc"].items()}
    section, key = task["param"].split(".")
    doc.setdefault(section, {})[key] = task["value"]
    env = CovertEnv(config_from_dict(doc))
    policy, _, _ = _fit_policy(env, task["optimizer"], task["budget"],
                               task["population"], task["seed"],
                               task["phase_mode"])

    covert, public, ok_slots, total_slots = [], [], 0, 0
    for j in range(task["eval_episodes"]):
        trace = run_episode(env, policy, EVAL_SEED_BASE + j)
        r_b = [i["rates"]["r_b"] for i in trace.infos]
        r_c = [i["rates"]["r_c"] for i in trace.infos]
        covert.append(sum(r_b) / len(r_b))
        public.append(sum(r_c) / len(r_c))
        ok_slots += sum(i["constraints"]["public_ok"]
                        and i["constraints"]["c1_ok"] for i in trace.infos)
        total_slots += len(trace.infos)

    n = len(covert)
    mean = sum(covert) / n
    ci95 = 0.0 if n < 2 else 1.96 * float(np.std(covert, ddof=1)) / math.sqrt(n)
    return {"value": task["value"], "seed": task["seed"],
            "mean_covert_rate": mean, "ci95": ci95,
            "public_rate": sum(public) / n,
            "feasible_frac": ok_slots / total_slots}


def _check_trend(means: list[float], mode: str) -> bool:
    pairs = zip(means, means[1:])
    if mode == "non-decreasing":
        return all(b >= a for a, b in pairs)
    return all(b <= a for a, b in pairs)


def _cmd_sweep(args) -> int:
    doc, touched = _load(args)
    cfg = config_from_dict(doc)

    values = [v.strip() for v in args.values.split(",") if v.strip()]
    if not values:
        raise ConfigError("values", "need at least one sweep value")
    # dry-run each assignment so bad paths fail before any work is queued
    parsed = []
    for text in values:
        probe = {k: dict(v) for k, v in doc.items()}
        apply_overrides(probe, [f"{args.param}={text}"])
        config_from_dict(probe)
        parsed.append(probe[args.param.split(".")[0]][args.param.split(".")[1]])

    base_seed = cfg.seed
    tasks = [{"doc": doc, "param": args.param, "value": val,
              "seed": base_seed + s, "optimizer": args.optimizer,
              "budget": args.budget, "population": args.population,
              "phase_mode": args.phase_mode,
              "eval_episodes": args.eval_episodes}
             for val in parsed for s in range(args.seeds)]

    if args.workers > 1:
        with ProcessPoolExecutor(max_workers=args.workers) as pool:
            rows = list(pool.map(_sweep_point, tasks))
    else:
        rows = [_sweep_point(t) for t in tasks]

    os.makedirs(args.out, exist_ok=True)
    lines = ["param,mean_covert_rate,ci95,public_rate,feasible_frac"]
    for row in rows:
        lines.append(",".join([
            _fmt(row["value"]), _fmt(row["mean_covert_rate"]),
            _fmt(row["ci95"]), _fmt(row["public_rate"]),
            _fmt(row["feasible_frac"])]))
    _write_text(os.path.join(args.out, "sweep.csv"), "\n".join(lines) + "\n")

    # seed-averaged means, one per sweep value, in flag order
    seed_means = []
    for i, val in enumerate(parsed):
        chunk = rows[i * args.seeds:(i + 1) * args.seeds]
        seed_means.append(sum(r["mean_covert_rate"] for r in chunk) / args.seeds)
    _write_json(os.path.join(args.out, "sweep.json"), {
        "version": __version__,
        "config_digest": config_digest(cfg),
        "param": args.param,
        "values": parsed,
        "seeds": args.seeds,
        "optimizer": args.optimizer,
        "budget": args.budget,
        "eval_episodes": args.eval_episodes,
        "seed_averaged_covert_rate": seed_means,
        "rows": rows,
    })
    _write_text(os.path.join(args.out, "resolved.toml"),
                dump_resolved(cfg, set(touched)))

    if args.assert_trend:
        if not _check_trend(seed_means, args.assert_trend):
            print(f"trend violation: {args.param} means {seed_means} "
                  f"are not {args.assert_trend}", file=sys.stderr)
            return 3
    return 0


def _cmd_serve(args) -> int:
    doc, _ = _load(args)
    env = CovertEnv(config_from_dict(doc))
    try:
        if args.tcp is not None:
            summary = serve_tcp(env, port=args.tcp,
                                announce=lambda p: print(
                                    f"listening on {p}", file=sys.stderr,
                                    flush=True))
        else:
            summary = serve_stdio(env)
    except KeyboardInterrupt:
        summary = {"interrupted": True}
    print(json.dumps(summary, sort_keys=True), file=sys.stderr)
    return 0


def _cmd_validate(args) -> int:
    doc, touched = _load(args)
    cfg = config_from_dict(doc)
    text = dump_resolved(cfg, set(touched))
    if args.out:
        _write_text(args.out, text)
    else:
        sys.stdout.write(text)
    return 0


def _parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="frisim")
    ap.add_argument("--version", action="version", version=__version__)
    sub = ap.add_subparsers(dest="verb", required=True)

    def common(p):
        p.add_argument("--config", required=True)
        p.add_argument("--set", action="append", metavar="SECTION.KEY=VALUE")
        p.add_argument("--seed", type=int, default=None)

    def optimizer(p):
        p.add_argument("--optimizer", choices=("random", "cem", "greedy"),
                       default="greedy")
        p.add_argument("--budget", type=int, default=200,
                       help="search episodes (random/cem)")
        p.add_argument("--population", type=int, default=40,
                       help="candidates per cem generation")
        p.add_argument("--phase-mode",
                       choices=("feedback", "ramp", "per-element"),
                       default="feedback",
                       help="surface phases: greedy per-slot feedback, or "
                            "searched as a ramp / per-element schedule")

    p = sub.add_parser("run", help="optimize and write one episode")
    common(p)
    optimizer(p)
    p.add_argument("--out", default="out")
    p.set_defaults(fn=_cmd_run)

    p = sub.add_parser("sweep", help="grid over one config path")
    common(p)
    optimizer(p)
    p.add_argument("--param", required=True, metavar="SECTION.KEY")
    p.add_argument("--values", required=True, help="comma-separated TOML literals")
    p.add_argument("--seeds", type=int, default=1,
                   help="optimizer seeds per value, numbered from scenario seed")
    p.add_argument("--eval-episodes", type=int, default=5)
    p.add_argument("--workers", type=int,
                   default=max(1, min(4, os.cpu_count() or 1)))
    p.add_argument("--assert-trend", choices=("non-decreasing", "non-increasing"),
                   default=None)
    p.add_argument("--out", default="out")
    p.set_defaults(fn=_cmd_sweep)

    p = sub.add_parser("serve", help="speak the wire protocol")
    common(p)
    group = p.add_mutually_exclusive_group()
    group.add_argument("--stdio", action="store_true", default=True)
    group.add_argument("--tcp", type=int, default=None, metavar="PORT")
    p.set_defaults(fn=_cmd_serve)

    p = sub.add_parser("validate-config", help="check and dump the scenario")
    common(p)
    p.add_argument("--out", default=None)
    p.set_defaults(fn=_cmd_validate)
    return ap


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        return args.fn(args)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return 2
    except FrisimError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except OSError as exc:
        print(f"io error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
