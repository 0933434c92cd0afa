"""Line-delimited JSON service exposing the environment to external trainers.

Protocol "frisim/1". One request, one response, strictly in order:

    {"seq": n, "cmd": "hello"}
        -> {"seq": n, "version": "frisim/1", "config_digest": "...",
            "dims": {"state": d_s, "action": d_a}}
    {"seq": n, "cmd": "reset", "seed": s}
        -> {"seq": n, "state": [...], "dims": {"state": d_s, "action": d_a}}
    {"seq": n, "cmd": "step", "action": [...]}
        -> {"seq": n, "state": [...], "reward": r, "done": b, "info": {...}}
    {"seq": n, "cmd": "close"}
        -> {"seq": n, "ok": true}   and the session ends

Errors keep the session alive: {"seq": n, "error": {"code": c, "msg": m}}
with code "parse" (bad JSON or shape; seq -1 when the request's seq is
unreadable), "dim" (wrong action length), or "episode" (step after done,
or before any reset). Floats are emitted with 17 significant digits, so a
replayed transcript is byte-identical; NaN and infinities are rejected at
encode time. Unknown request fields are ignored; responses never carry
fields beyond those listed.
"""
from __future__ import annotations

import json
import math
import socket

import numpy as np

from .config import config_digest
from .env import CovertEnv
from .errors import DimensionMismatch, EpisodeFinished, ProtocolError

__all__ = ["PROTOCOL_VERSION", "encode", "decode", "handle_request",
           "serve", "serve_stdio", "serve_tcp", "BridgeSession"]

PROTOCOL_VERSION = "frisim/1"


def _encode_value(v) -> str:
    if v is None:
        return "null"
    if isinstance(v, (bool, np.bool_)):
        return "true" if v else "false"
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        f = float(v)
        if math.isnan(f) or math.isinf(f):
            raise ProtocolError("encode", "non-finite float rejected")
        return f"{f:.17g}"
    if isinstance(v, str):
        return json.dumps(v)
    if isinstance(v, (list, tuple, np.ndarray)):
        return "[" + ",".join(_encode_value(x) for x in v) + "]"
    if isinstance(v, dict):
        parts = []
        for k, item in v.items():
            if not isinstance(k, str):
                raise ProtocolError("encode", f"non-string key {k!r}")
            parts.append(json.dumps(k) + ":" + _encode_value(item))
        return "{" + ",".join(parts) + "}"
    raise ProtocolError("encode", f"cannot serialize {type(v).__name__}")


def encode(msg: dict) -> bytes:
    """One message as a canonical JSON line (trailing newline included)."""
    return (_encode_value(msg) + "\n").encode("ascii")


def decode(line: bytes) -> dict:
    """Parse one request line; parse errors carry the byte offset."""
    try:
        text = line.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise ProtocolError("parse", "invalid utf-8", offset=exc.start)
    try:
        msg = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ProtocolError("parse", exc.msg, offset=exc.pos)
    if not isinstance(msg, dict):
        raise ProtocolError("parse", "request must be a JSON object")
    return msg


def _seq_of(msg: dict) -> int:
    seq = msg.get("seq", -1)
    if isinstance(seq, bool) or not isinstance(seq, int):
        return -1
    return seq


class BridgeSession:
    """Sequential request handler owning one environment instance."""

    def __init__(self, env: CovertEnv):
        self.env = env
        self.closed = False
        self.requests = 0
        self.errors = 0
        self._has_episode = False

    def _dims(self) -> dict:
        return {"state": self.env.state_dim, "action": self.env.action_dim}

    def handle_line(self, line: bytes) -> bytes:
        self.requests += 1
        try:
            msg = decode(line)
        except ProtocolError as exc:
            # request seq is unrecoverable from a broken line
            self.errors += 1
            return encode({"seq": -1,
                           "error": {"code": exc.code, "msg": str(exc)}})
        return encode(self.handle_request(msg))

    def handle_request(self, msg: dict) -> dict:
        seq = _seq_of(msg)
        cmd = msg.get("cmd")
        try:
            if cmd == "hello":
                return {"seq": seq, "version": PROTOCOL_VERSION,
                        "config_digest": config_digest(self.env.cfg),
                        "dims": self._dims()}
            if cmd == "reset":
                seed = msg.get("seed", None)
                if seed is not None and (isinstance(seed, bool)
                                         or not isinstance(seed, int)):
                    return self._error(seq, "parse", "seed must be an integer")
                state = self.env.reset(seed)
                self._has_episode = True
                return {"seq": seq, "state": state.tolist(),
                        "dims": self._dims()}
            if cmd == "step":
                if not self._has_episode:
                    return self._error(seq, "episode", "no episode; reset first")
                action = msg.get("action")
                if not isinstance(action, list) or not all(
                        isinstance(x, (int, float)) and not isinstance(x, bool)
                        for x in action):
                    return self._error(seq, "parse", "action must be a number list")
                try:
                    state, reward, done, info = self.env.step(
                        np.asarray(action, dtype=float))
                except DimensionMismatch as exc:
                    return self._error(seq, "dim", str(exc))
                except EpisodeFinished as exc:
                    return self._error(seq, "episode", str(exc))
                return {"seq": seq, "state": state.tolist(), "reward": reward,
                        "done": done, "info": info}
            if cmd == "close":
                self.closed = True
                return {"seq": seq, "ok": True}
            return self._error(seq, "parse", f"unknown cmd {cmd!r}")
        except ProtocolError as exc:
            return self._error(seq, exc.code, str(exc))

    def _error(self, seq: int, code: str, msg: str) -> dict:
        self.errors += 1
        return {"seq": seq, "error": {"code": code, "msg": msg}}

    def summary(self) -> dict:
        return {"requests": self.requests, "errors": self.errors}


def handle_request(env_or_session, msg: dict) -> dict:
    session = (env_or_session if isinstance(env_or_session, BridgeSession)
               else BridgeSession(env_or_session))
    return session.handle_request(msg)


def serve(env: CovertEnv, reader, writer) -> dict:
    """Pump newline-delimited requests until close or EOF; returns a summary."""
    session = BridgeSession(env)
    for line in reader:
        if isinstance(line, str):
            line = line.encode("utf-8")
        line = line.rstrip(b"\n").rstrip(b"\r")
        if not line:
            continue
        writer.write(session.handle_line(line))
        writer.flush()
        if session.closed:
            break
    return session.summary()


def serve_stdio(env: CovertEnv) -> dict:
    import sys
    return serve(env, sys.stdin.buffer, sys.stdout.buffer)


def serve_tcp(env: CovertEnv, host: str = "127.0.0.1", port: int = 0,
              announce=None) -> dict:
    """Accept one connection and serve it to completion."""
    with socket.create_server((host, port)) as srv:
        if announce is not None:
            announce(srv.getsockname()[1])
        conn, _ = srv.accept()
        with conn, conn.makefile("rb") as rd, conn.makefile("wb") as wr:
            return serve(env, rd, wr)
