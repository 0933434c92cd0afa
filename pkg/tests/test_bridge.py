from __future__ import annotations

import io
import json
import math
import pathlib
import string

import numpy as np
import pytest

from frisim.bridge import (PROTOCOL_VERSION, BridgeSession, decode, encode,
                           serve)
from frisim.config import ScenarioConfig, config_digest
from frisim.env import CovertEnv
from frisim.errors import ProtocolError

DATA = pathlib.Path(__file__).parent / "data"


def small_env(**kw) -> CovertEnv:
    base = dict(m_count=3, episode_slots=3, seed=0)
    base.update(kw)
    return CovertEnv(ScenarioConfig(**base))


def test_encode_canonical_floats():
    assert encode({"x": 0.1}) == b'{"x":0.10000000000000001}\n'
    assert encode({"n": 7, "b": True, "z": None}) == b'{"n":7,"b":true,"z":null}\n'
    assert encode({"v": [1.5, -2]}) == b'{"v":[1.5,-2]}\n'


def test_encode_rejects_non_finite():
    with pytest.raises(ProtocolError):
        encode({"reward": math.nan})
    with pytest.raises(ProtocolError):
        encode({"reward": math.inf})
    with pytest.raises(ProtocolError):
        encode({"deep": {"list": [1.0, -math.inf]}})


def test_decode_reports_byte_offset():
    with pytest.raises(ProtocolError) as err:
        decode(b'{"seq": 3, bad}')
    assert err.value.code == "parse"
    assert "byte offset" in str(err.value)
    with pytest.raises(ProtocolError):
        decode(b'[1, 2, 3]')


def _random_value(rng, depth):
    kinds = ["int", "float", "str", "bool", "null"]
    if depth < 2:
        kinds += ["list", "dict"]
    kind = kinds[rng.integers(len(kinds))]
    if kind == "int":
        return int(rng.integers(-10**9, 10**9))
    if kind == "float":
        return float(rng.normal() * 10.0 ** rng.integers(-12, 12))
    if kind == "str":
        alphabet = string.ascii_letters + string.digits + ' _"\\/\n\t'
        return "".join(rng.choice(list(alphabet))
                       for _ in range(rng.integers(0, 12)))
    if kind == "bool":
        return bool(rng.integers(2))
    if kind == "null":
        return None
    if kind == "list":
        return [_random_value(rng, depth + 1) for _ in range(rng.integers(0, 5))]
    return {f"k{i}": _random_value(rng, depth + 1)
            for i in range(rng.integers(0, 5))}


def test_round_trip_identity_fuzz():
    rng = np.random.default_rng(0)
    for _ in range(10_000):
        msg = {f"f{i}": _random_value(rng, 0) for i in range(rng.integers(1, 4))}
        assert decode(encode(msg).rstrip(b"\n")) == msg


def test_empty_info_round_trips():
    assert decode(encode({"seq": 1, "info": {}}).rstrip(b"\n")) == \
        {"seq": 1, "info": {}}


def test_hello_reports_version_and_digest():
    env = small_env()
    session = BridgeSession(env)
    out = session.handle_request({"seq": 9, "cmd": "hello"})
    assert out["seq"] == 9
    assert out["version"] == PROTOCOL_VERSION
    assert out["config_digest"] == config_digest(env.cfg)
    assert out["dims"] == {"state": env.state_dim, "action": env.action_dim}


def test_reset_and_step_shapes():
    session = BridgeSession(small_env())
    out = session.handle_request({"seq": 1, "cmd": "reset", "seed": 5})
    assert len(out["state"]) == 39
    act = [0.0] * 16
    out = session.handle_request({"seq": 2, "cmd": "step", "action": act})
    assert out["seq"] == 2
    assert isinstance(out["reward"], float)
    assert out["done"] is False
    assert out["info"]["slot"] == 1


def test_step_errors_keep_session_alive():
    session = BridgeSession(small_env())
    out = session.handle_request({"seq": 1, "cmd": "step", "action": [0.0] * 16})
    assert out["error"]["code"] == "episode"
    session.handle_request({"seq": 2, "cmd": "reset", "seed": 1})
    out = session.handle_request({"seq": 3, "cmd": "step", "action": [0.0] * 4})
    assert out["error"]["code"] == "dim"
    # the failed step must not have consumed a slot
    out = session.handle_request({"seq": 4, "cmd": "step", "action": [0.0] * 16})
    assert out["info"]["slot"] == 1
    for seq in (5, 6):
        out = session.handle_request({"seq": seq, "cmd": "step",
                                      "action": [0.0] * 16})
    assert out["done"] is True
    out = session.handle_request({"seq": 7, "cmd": "step", "action": [0.0] * 16})
    assert out["error"]["code"] == "episode"


def test_parse_errors_and_seq_sentinel():
    session = BridgeSession(small_env())
    reply = json.loads(session.handle_line(b'{"seq": 3, bad'))
    assert reply["seq"] == -1
    assert reply["error"]["code"] == "parse"
    out = session.handle_request({"seq": 4, "cmd": "warp"})
    assert out["error"]["code"] == "parse"
    out = session.handle_request({"seq": 5, "cmd": "reset", "seed": "abc"})
    assert out["error"]["code"] == "parse"
    session.handle_request({"seq": 6, "cmd": "reset", "seed": 1})
    out = session.handle_request({"seq": 7, "cmd": "step",
                                  "action": [1.0, True, 0.0]})
    assert out["error"]["code"] == "parse"


def test_unknown_request_fields_ignored():
    session = BridgeSession(small_env())
    out = session.handle_request({"seq": 1, "cmd": "hello", "extra": [1, 2]})
    assert "extra" not in out
    assert out["version"] == PROTOCOL_VERSION


def test_serve_loop_and_close():
    env = small_env()
    lines = [
        encode({"seq": 1, "cmd": "hello"}),
        encode({"seq": 2, "cmd": "reset", "seed": 3}),
        encode({"seq": 3, "cmd": "close"}),
        encode({"seq": 4, "cmd": "hello"}),  # after close: must not be served
    ]
    reader = io.BytesIO(b"".join(lines))
    writer = io.BytesIO()
    summary = serve(env, reader, writer)
    replies = writer.getvalue().splitlines()
    assert len(replies) == 3
    assert json.loads(replies[-1]) == {"seq": 3, "ok": True}
    assert summary == {"requests": 3, "errors": 0}


def test_served_episode_matches_in_process():
    rng = np.random.default_rng(8)
    actions = [rng.uniform(-1, 1, 16).tolist() for _ in range(3)]

    session = BridgeSession(small_env())
    session.handle_request({"seq": 0, "cmd": "reset", "seed": 77})
    wire = [session.handle_request({"seq": i + 1, "cmd": "step", "action": a})
            for i, a in enumerate(actions)]

    env = small_env()
    env.reset(77)
    for got, a in zip(wire, actions):
        state, reward, done, info = env.step(np.asarray(a))
        assert got["state"] == state.tolist()
        assert got["reward"] == reward
        assert got["done"] == done
        assert got["info"]["covert"] == info["covert"]


def test_golden_transcript_replay():
    # byte-for-byte replay of the frozen session
    requests = (DATA / "golden_requests.jsonl").read_bytes().splitlines()
    expected = (DATA / "golden_replies.jsonl").read_bytes().splitlines()
    session = BridgeSession(small_env())
    got = [session.handle_line(line) for line in requests]
    assert len(got) == len(expected)
    for g, e in zip(got, expected):
        assert g.rstrip(b"\n") == e
