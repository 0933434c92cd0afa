#!/usr/bin/env python3
"""Regenerate the bridge golden transcript under tests/data/.

The transcript freezes the wire format: requests on one file, the exact
reply bytes on the other. Any change to float formatting, field order, or
episode semantics shows up as a byte diff in the replay test.
"""
from __future__ import annotations

import pathlib
import sys

import numpy as np

sys.path.insert(0, str(pathlib.Path(__file__).resolve().parents[1] / "src"))

from frisim.bridge import BridgeSession, encode
from frisim.config import ScenarioConfig
from frisim.env import CovertEnv

OUT = pathlib.Path(__file__).resolve().parents[1] / "tests" / "data"


def golden_config() -> ScenarioConfig:
    return ScenarioConfig(m_count=3, episode_slots=3, seed=0)


def golden_requests() -> list[dict]:
    cfg = golden_config()
    rng = np.random.default_rng(2024)
    d_a = cfg.action_dim()
    reqs = [
        {"seq": 1, "cmd": "hello"},
        {"seq": 2, "cmd": "reset", "seed": 42},
        {"seq": 3, "cmd": "step", "action": rng.uniform(-1, 1, d_a).tolist()},
        {"seq": 4, "cmd": "step", "action": [0.25] * 3},  # dim error
        {"seq": 5, "cmd": "step", "action": rng.uniform(-1, 1, d_a).tolist()},
        {"seq": 6, "cmd": "step", "action": rng.uniform(-1, 1, d_a).tolist()},
        {"seq": 7, "cmd": "step", "action": rng.uniform(-1, 1, d_a).tolist()},
        {"seq": 8, "cmd": "reset", "seed": 7},
        {"seq": 9, "cmd": "step", "action": rng.uniform(-1, 1, d_a).tolist()},
        {"seq": 10, "cmd": "close"},
    ]
    return reqs


def main() -> None:
    OUT.mkdir(parents=True, exist_ok=True)
    session = BridgeSession(CovertEnv(golden_config()))
    req_path = OUT / "golden_requests.jsonl"
    rep_path = OUT / "golden_replies.jsonl"
    with open(req_path, "wb") as rq, open(rep_path, "wb") as rp:
        for msg in golden_requests():
            line = encode(msg)
            rq.write(line)
            rp.write(session.handle_line(line.rstrip(b"\n")))
    print(f"wrote {req_path} and {rep_path}")


if __name__ == "__main__":
    main()
