"""Stdio server loop: one JSON object per line, requests answered by id.

The engine is the client. Messages look like
``{"op": ..., "id": n, "payload": {...}}`` with ops hello / generate /
score / bye / error. Ids must be strictly increasing per connection; every
request is answered exactly once. A malformed line is answered with an
error message (when possible) and terminates the connection.
"""

from __future__ import annotations

import argparse
import json
import sys
from typing import Protocol, TextIO

PROTOCOL_VERSION = 1


class PluginError(Exception):
    """A plugin-level failure that should be reported, not crash the server."""


class BridgePlugin(Protocol):
    """The one signature real-model wrappers implement.

    Plugins must be stateless across requests apart from loaded weights,
    and deterministic in (input, noise).
    """

    def capabilities(self) -> dict:
        """Handshake payload: noise_dim, sample_rate_hz, verifiers."""
        ...

    def generate(self, lr_path: str, noise: list[float]) -> str:
        """Write a candidate WAV for the given latent; return its path."""
        ...

    def score(self, verifier_name: str, wav_path: str, condition: dict) -> float:
        """Score one candidate file under a named verifier."""
        ...


def _write(out: TextIO, op: str, msg_id, payload: dict) -> None:
    out.write(json.dumps({"op": op, "id": msg_id, "payload": payload}) + "\n")
    out.flush()


def _error(out: TextIO, msg_id, message: str) -> None:
    _write(out, "error", msg_id, {"message": message})


def serve(plugin: BridgePlugin, stdin: TextIO | None = None, stdout: TextIO | None = None) -> int:
    """Run one connection until bye, EOF, or a protocol violation."""
    stdin = stdin if stdin is not None else sys.stdin
    stdout = stdout if stdout is not None else sys.stdout

    hello_done = False
    last_id = None
    for line in stdin:
        line = line.strip()
        if not line:
            continue
        try:
            msg = json.loads(line)
            op = msg["op"]
            msg_id = msg["id"]
            payload = msg.get("payload", {})
        except (json.JSONDecodeError, KeyError, TypeError):
            _error(stdout, None, f"malformed line: {line[:200]}")
            return 1
        if not isinstance(msg_id, int) or (last_id is not None and msg_id <= last_id):
            _error(stdout, msg_id if isinstance(msg_id, int) else None,
                   "ids must be strictly increasing integers")
            return 1
        last_id = msg_id

        if op == "hello":
            version = payload.get("protocol_version")
            if version != PROTOCOL_VERSION:
                _error(stdout, msg_id, f"unsupported protocol_version {version!r}; this bridge speaks {PROTOCOL_VERSION}")
                _write(stdout, "bye", msg_id, {})
                return 1
            _write(stdout, "hello", msg_id, plugin.capabilities())
            hello_done = True
        elif op == "bye":
            _write(stdout, "bye", msg_id, {})
            return 0
        elif not hello_done:
            _error(stdout, msg_id, f"{op} before hello")
        elif op == "generate":
            try:
                hr_path = plugin.generate(payload["lr_path"], payload["noise"])
                _write(stdout, "generate", msg_id, {"hr_path": hr_path})
            except (PluginError, KeyError) as exc:
                _error(stdout, msg_id, f"generate failed: {exc}")
        elif op == "score":
            try:
                value = plugin.score(
                    payload["verifier"], payload["wav_path"], payload.get("condition", {})
                )
                _write(stdout, "score", msg_id, {"value": float(value)})
            except (PluginError, KeyError) as exc:
                _error(stdout, msg_id, f"score failed: {exc}")
        else:
            _error(stdout, msg_id, f"unknown op {op!r}")
    return 0


def _load_plugin(name: str) -> BridgePlugin:
    from importlib.metadata import entry_points

    matches = [ep for ep in entry_points(group="srsearch_bridge.plugins") if ep.name == name]
    if not matches:
        available = sorted(ep.name for ep in entry_points(group="srsearch_bridge.plugins"))
        raise SystemExit(f"no bridge plugin named {name!r}; installed: {available}")
    return matches[0].load()()


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="srsearch-bridge", description="Serve a bridge plugin on stdin/stdout."
    )
    parser.add_argument("--plugin", default="stub", help="entry-point name (default: stub)")
    args = parser.parse_args(argv)
    return serve(_load_plugin(args.plugin))


if __name__ == "__main__":
    sys.exit(main())
