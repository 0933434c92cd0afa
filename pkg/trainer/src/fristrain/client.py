"""Client side of the frisim/1 line protocol.

The trainer never imports the simulator. It talks to a server process over
newline-delimited JSON, strictly one reply per request, and raises
BridgeError on any error reply, sequence mismatch, or unreadable line,
with the offending request attached. Resynchronizing a sequenced stream
silently tends to corrupt whole training runs, so every fault is fatal.
"""
from __future__ import annotations

import json
import shlex
import subprocess
from dataclasses import dataclass

import numpy as np

__all__ = ["PROTOCOL_VERSION", "BridgeError", "ActionBox", "BridgeClient"]

PROTOCOL_VERSION = "frisim/1"


class BridgeError(RuntimeError):
    """Typed failure while talking to the environment server."""

    def __init__(self, code: str, msg: str, request=None, reply=None):
        detail = f"[{code}] {msg}"
        if request is not None:
            detail += f" (request: {request!r})"
        if reply is not None:
            detail += f" (reply: {reply!r})"
        super().__init__(detail)
        self.code = code
        self.msg = msg
        self.request = request
        self.reply = reply


@dataclass(frozen=True)
class ActionBox:
    """Per-coordinate bounds of the continuous action vector.

    Layout: two accelerations, two headings, two pitch angles, the power
    split, then one phase per element and two bend angles per element.
    The kinematic and bend limits are not carried by the protocol, so they
    are client-side assumptions with overridable defaults; out-of-box
    values are projected server-side anyway.
    """

    low: np.ndarray
    high: np.ndarray

    @staticmethod
    def from_dims(action_dim: int, ac_max: float = 2.0,
                  bend_limit_deg: float = 90.0) -> "ActionBox":
        m, rem = divmod(action_dim - 7, 3)
        if rem or m < 1:
            raise ValueError(f"action dim {action_dim} is not 7 + 3M")
        lo = np.empty(action_dim)
        hi = np.empty(action_dim)
        lo[0:2], hi[0:2] = -ac_max, ac_max
        lo[2:4], hi[2:4] = 0.0, 2.0 * np.pi
        lo[4:6], hi[4:6] = 0.0, np.pi
        lo[6], hi[6] = 1e-6, 1.0 - 1e-6
        lo[7:7 + m], hi[7:7 + m] = 0.0, 2.0 * np.pi
        lo[7 + m:], hi[7 + m:] = -bend_limit_deg, bend_limit_deg
        return ActionBox(low=lo, high=hi)

    @property
    def dim(self) -> int:
        return int(self.low.size)

    @property
    def element_count(self) -> int:
        return (self.dim - 7) // 3

    def sample(self, rng: np.random.Generator) -> np.ndarray:
        return rng.uniform(self.low, self.high)

    def contains(self, action: np.ndarray, tol: float = 0.0) -> bool:
        a = np.asarray(action, dtype=float)
        return bool(np.all(a >= self.low - tol) and np.all(a <= self.high + tol))


class BridgeClient:
    """One strictly sequential protocol session.

    Construct around an existing (reader, writer) byte-stream pair, or use
    spawn() to launch a server subprocess and attach to its stdio.
    """

    def __init__(self, reader, writer, proc: subprocess.Popen | None = None):
        self._rd = reader
        self._wr = writer
        self._proc = proc
        self._seq = 0
        self._closed = False
        self.state_dim: int | None = None
        self.action_dim: int | None = None
        self.config_digest: str | None = None

    @classmethod
    def spawn(cls, cmd: str | list[str]) -> "BridgeClient":
        """Launch `cmd`, attach to its stdio, and perform the hello handshake."""
        argv = shlex.split(cmd) if isinstance(cmd, str) else list(cmd)
        proc = subprocess.Popen(argv, stdin=subprocess.PIPE,
                                stdout=subprocess.PIPE)
        client = cls(proc.stdout, proc.stdin, proc=proc)
        try:
            client.hello()
        except Exception:
            client._reap()
            raise
        return client

    def _roundtrip(self, req: dict) -> dict:
        if self._closed:
            raise BridgeError("closed", "session already closed", request=req)
        self._seq += 1
        req = {"seq": self._seq, **req}
        try:
            line = json.dumps(req, allow_nan=False)
        except ValueError as exc:
            self._seq -= 1
            raise BridgeError("encode", f"unserializable request: {exc}",
                              request=req)
        self._wr.write((line + "\n").encode("ascii"))
        self._wr.flush()
        raw = self._rd.readline()
        if not raw:
            raise BridgeError("eof", "server closed the stream", request=req)
        try:
            reply = json.loads(raw)
        except json.JSONDecodeError as exc:
            raise BridgeError("parse", f"unreadable reply: {exc}", request=req)
        if not isinstance(reply, dict):
            raise BridgeError("parse", "reply is not an object",
                              request=req, reply=reply)
        err = reply.get("error")
        if err is not None:
            code = err.get("code", "unknown") if isinstance(err, dict) else "unknown"
            msg = err.get("msg", "") if isinstance(err, dict) else str(err)
            raise BridgeError(code, msg, request=req, reply=reply)
        if reply.get("seq") != self._seq:
            raise BridgeError("seq",
                              f"expected seq {self._seq}, got {reply.get('seq')}",
                              request=req, reply=reply)
        return reply

    def hello(self) -> dict:
        reply = self._roundtrip({"cmd": "hello"})
        version = reply.get("version")
        if version != PROTOCOL_VERSION:
            raise BridgeError("version",
                              f"server speaks {version!r}, need {PROTOCOL_VERSION!r}",
                              reply=reply)
        dims = reply.get("dims", {})
        self.state_dim = int(dims["state"])
        self.action_dim = int(dims["action"])
        self.config_digest = reply.get("config_digest")
        return reply

    def reset(self, seed: int | None = None) -> np.ndarray:
        req: dict = {"cmd": "reset"}
        if seed is not None:
            req["seed"] = int(seed)
        reply = self._roundtrip(req)
        return np.asarray(reply["state"], dtype=float)

    def step(self, action) -> tuple[np.ndarray, float, bool, dict]:
        arr = np.asarray(action, dtype=float)
        reply = self._roundtrip({"cmd": "step", "action": arr.tolist()})
        return (np.asarray(reply["state"], dtype=float),
                float(reply["reward"]), bool(reply["done"]), reply["info"])

    def close(self) -> None:
        if self._closed:
            return
        try:
            self._roundtrip({"cmd": "close"})
        finally:
            self._closed = True
            self._reap()

    def _reap(self) -> None:
        if self._proc is None:
            return
        try:
            self._proc.stdin.close()
        except OSError:
            pass
        try:
            self._proc.wait(timeout=10)
        except subprocess.TimeoutExpired:
            self._proc.kill()
            self._proc.wait()

    def __enter__(self) -> "BridgeClient":
        return self

    def __exit__(self, *exc) -> None:
        self.close()
