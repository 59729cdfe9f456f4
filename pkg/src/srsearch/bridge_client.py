"""Engine-side client for out-of-process generators and verifiers.

A bridge is a child process speaking newline-delimited JSON over
stdin/stdout: one object per line, ids strictly increasing per connection,
responses correlated by id. Audio crosses the boundary by file path.
The engine opens one connection per pipeline; a single connection is a
serial request channel.
"""

from __future__ import annotations

import json
import os
import select
import shlex
import subprocess
import tempfile
import threading
from dataclasses import dataclass
from pathlib import Path
from typing import Sequence

from .dsp import AudioBuffer, load_wav, save_wav
from .errors import BridgeProtocolError, BridgeUnavailableError
from .generators import Generator, GeneratorInfo, LatentNoise
from .hashing import digest_hex
from .verifiers import Condition, Direction, Score, Verifier, VerifierSpec

PROTOCOL_VERSION = 1
HANDSHAKE_TIMEOUT_S = 30.0
REQUEST_TIMEOUT_S = 300.0


@dataclass(frozen=True)
class BridgeVerifierInfo:
    name: str
    direction: Direction
    condition_kinds: tuple


@dataclass(frozen=True)
class BridgeCapabilities:
    noise_dim: int
    sample_rate_hz: int
    verifiers: tuple


class BridgeConnection:
    """One child bridge process plus its serial request pipeline."""

    def __init__(self, command: str | Sequence[str], handshake_timeout_s: float = HANDSHAKE_TIMEOUT_S,
                 request_timeout_s: float = REQUEST_TIMEOUT_S):
        argv = shlex.split(command) if isinstance(command, str) else list(command)
        if not argv:
            raise BridgeUnavailableError("empty bridge command")
        self.command = argv
        self.request_timeout_s = request_timeout_s
        self._next_id = 0
        self._buffer = b""
        self._pending: dict[int, dict] = {}
        # One connection is a serial pipeline; the lock lets parallel
        # engine workers share it safely (requests are serialized).
        self._lock = threading.Lock()
        try:
            self._proc = subprocess.Popen(
                argv,
                stdin=subprocess.PIPE,
                stdout=subprocess.PIPE,
                stderr=subprocess.DEVNULL,
            )
        except OSError as exc:
            raise BridgeUnavailableError(f"cannot launch bridge {argv!r}: {exc}") from exc
        self.capabilities = self._handshake(handshake_timeout_s)

    def _send(self, op: str, payload: dict) -> int:
        msg_id = self._next_id
        self._next_id += 1
        line = json.dumps({"op": op, "id": msg_id, "payload": payload}) + "\n"
        try:
            self._proc.stdin.write(line.encode("utf-8"))
            self._proc.stdin.flush()
        except (BrokenPipeError, OSError) as exc:
            raise BridgeProtocolError(f"bridge closed its stdin: {exc}") from exc
        return msg_id

    def _read_line(self, timeout_s: float) -> dict:
        stdout = self._proc.stdout
        while b"\n" not in self._buffer:
            ready, _, _ = select.select([stdout], [], [], timeout_s)
            if not ready:
                raise TimeoutError(f"no bridge response within {timeout_s} s")
            chunk = os.read(stdout.fileno(), 65536)
            if not chunk:
                raise BridgeProtocolError("bridge closed its stdout")
            self._buffer += chunk
        line, self._buffer = self._buffer.split(b"\n", 1)
        try:
            msg = json.loads(line.decode("utf-8"))
        except (UnicodeDecodeError, json.JSONDecodeError) as exc:
            raise BridgeProtocolError(f"malformed bridge line: {line[:200]!r}") from exc
        if not isinstance(msg, dict) or "op" not in msg or "id" not in msg:
            raise BridgeProtocolError(f"bridge message missing op/id: {msg!r}")
        return msg

    def _await_response(self, msg_id: int, timeout_s: float) -> dict:
        if msg_id in self._pending:
            return self._pending.pop(msg_id)
        while True:
            msg = self._read_line(timeout_s)
            if msg["id"] == msg_id:
                return msg
            self._pending[msg["id"]] = msg

    def _handshake(self, timeout_s: float) -> BridgeCapabilities:
        try:
            msg_id = self._send("hello", {"protocol_version": PROTOCOL_VERSION})
            reply = self._await_response(msg_id, timeout_s)
        except (TimeoutError, BridgeProtocolError) as exc:
            self.close()
            raise BridgeUnavailableError(f"bridge handshake failed: {exc}") from exc
        if reply["op"] == "error":
            self.close()
            raise BridgeUnavailableError(
                f"bridge rejected handshake: {reply.get('payload', {}).get('message')}"
            )
        if reply["op"] != "hello":
            self.close()
            raise BridgeUnavailableError(f"unexpected handshake op {reply['op']!r}")
        payload = reply.get("payload", {})
        try:
            verifiers = tuple(
                BridgeVerifierInfo(
                    name=v["name"],
                    direction=Direction(v["direction"]),
                    condition_kinds=tuple(v.get("condition_kinds", ["none"])),
                )
                for v in payload.get("verifiers", [])
            )
            return BridgeCapabilities(
                noise_dim=int(payload["noise_dim"]),
                sample_rate_hz=int(payload["sample_rate_hz"]),
                verifiers=verifiers,
            )
        except (KeyError, TypeError, ValueError) as exc:
            self.close()
            raise BridgeUnavailableError(f"bad handshake payload: {payload!r}") from exc

    def generate(self, lr_path: str, noise: LatentNoise) -> str:
        with self._lock:
            msg_id = self._send(
                "generate", {"lr_path": str(lr_path), "noise": [float(v) for v in noise.values]}
            )
            reply = self._await_response(msg_id, self.request_timeout_s)
        if reply["op"] == "error":
            raise BridgeProtocolError(
                f"bridge generate failed: {reply.get('payload', {}).get('message')}"
            )
        if reply["op"] != "generate" or "hr_path" not in reply.get("payload", {}):
            raise BridgeProtocolError(f"unexpected generate reply: {reply!r}")
        return reply["payload"]["hr_path"]

    def score(self, verifier_name: str, wav_path: str, condition: Condition) -> float:
        with self._lock:
            msg_id = self._send(
                "score",
                {
                    "verifier": verifier_name,
                    "wav_path": str(wav_path),
                    "condition": {"kind": condition.kind.value, "payload": condition.payload},
                },
            )
            reply = self._await_response(msg_id, self.request_timeout_s)
        if reply["op"] == "error":
            raise BridgeProtocolError(
                f"bridge score failed: {reply.get('payload', {}).get('message')}"
            )
        if reply["op"] != "score" or "value" not in reply.get("payload", {}):
            raise BridgeProtocolError(f"unexpected score reply: {reply!r}")
        return float(reply["payload"]["value"])

    def close(self) -> None:
        if self._proc.poll() is None:
            try:
                self._send("bye", {})
            except BridgeProtocolError:
                pass
            try:
                self._proc.stdin.close()
            except OSError:
                pass
            try:
                self._proc.wait(timeout=1)
            except subprocess.TimeoutExpired:
                self._proc.kill()
                self._proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc_info):
        self.close()


class BridgeGenerator(Generator):
    """Generator backed by a bridge connection.

    The LR buffer is written once per distinct input and its path reused;
    returned candidate files are read then deleted (unless the bridge
    echoed the input path back).
    """

    def __init__(self, connection: BridgeConnection, workdir: str | None = None):
        self.connection = connection
        self.workdir = Path(workdir) if workdir else Path(tempfile.mkdtemp(prefix="srsearch-bridge-"))
        self.workdir.mkdir(parents=True, exist_ok=True)
        self._lr_cache: tuple[str, str] | None = None  # (digest, path)

    def info(self) -> GeneratorInfo:
        caps = self.connection.capabilities
        return GeneratorInfo(
            noise_dim=caps.noise_dim,
            output_sample_rate_hz=caps.sample_rate_hz,
            deterministic=True,
        )

    def _lr_path(self, lr: AudioBuffer) -> str:
        digest = digest_hex(lr.samples)
        if self._lr_cache is None or self._lr_cache[0] != digest:
            path = self.workdir / f"lr_{digest}.wav"
            save_wav(lr, path, codec="float32")
            self._lr_cache = (digest, str(path))
        return self._lr_cache[1]

    def generate(self, lr: AudioBuffer, noise: LatentNoise) -> AudioBuffer:
        lr_path = self._lr_path(lr)
        hr_path = self.connection.generate(lr_path, noise)
        audio = load_wav(hr_path)
        if os.path.abspath(hr_path) != os.path.abspath(lr_path):
            try:
                os.unlink(hr_path)
            except OSError:
                pass
        return audio


class ExternalVerifier(Verifier):
    """Single bridge-hosted verifier column."""

    def __init__(self, connection: BridgeConnection, verifier_name: str,
                 condition: Condition | None = None, workdir: str | None = None):
        condition = condition or Condition()
        caps = {v.name: v for v in connection.capabilities.verifiers}
        if verifier_name not in caps:
            raise BridgeUnavailableError(
                f"bridge does not offer verifier {verifier_name!r}; has {sorted(caps)}"
            )
        info = caps[verifier_name]
        if condition.kind.value not in info.condition_kinds:
            raise BridgeUnavailableError(
                f"verifier {verifier_name!r} does not accept condition kind {condition.kind.value!r}"
            )
        self.connection = connection
        self.name = verifier_name
        self.direction = info.direction
        self.condition = condition
        self.workdir = Path(workdir) if workdir else Path(tempfile.mkdtemp(prefix="srsearch-score-"))
        self.workdir.mkdir(parents=True, exist_ok=True)
        self.spec = VerifierSpec(
            name=verifier_name, backend="external", condition=condition, bridge_id=verifier_name
        )

    def score_one(self, candidate: AudioBuffer) -> dict[str, Score]:
        path = self.workdir / f"cand_{digest_hex(candidate.samples)}.wav"
        save_wav(candidate, path, codec="float32")
        try:
            value = self.connection.score(self.name, str(path), self.condition)
        finally:
            try:
                os.unlink(path)
            except OSError:
                pass
        return {self.name: Score(value, self.direction)}

    def finalize(self, raw_rows):
        return [row[self.name] for row in raw_rows]
