"""Acceptance for the adapter component (criterion 9): full protocol
conformance plus engine-side search through the public CLI.

Run with:  pytest tests/test_acceptance.py -v -s
"""

import json
import subprocess
import sys
from contextlib import contextmanager


@contextmanager
def criterion(number, name):
    try:
        yield
    except BaseException:
        print(f"ACCEPTANCE {number} ({name}): FAIL")
        raise
    print(f"ACCEPTANCE {number} ({name}): PASS")


def _stub():
    return subprocess.Popen(
        [sys.executable, "-m", "srsearch_bridge.stub"],
        stdin=subprocess.PIPE, stdout=subprocess.PIPE, stderr=subprocess.DEVNULL, text=True,
    )


def _rpc(proc, op, msg_id, payload):
    proc.stdin.write(json.dumps({"op": op, "id": msg_id, "payload": payload}) + "\n")
    proc.stdin.flush()
    return json.loads(proc.stdout.readline())


def test_criterion_9_bridge_protocol_conformance(tmp_path):
    with criterion(9, "bridge protocol conformance"):
        # full handshake / generate / score / bye round trip
        lr = tmp_path / "lr.wav"
        lr.write_bytes(b"RIFF....WAVEdata")
        proc = _stub()
        hello = _rpc(proc, "hello", 0, {"protocol_version": 1})
        assert hello["op"] == "hello"
        assert hello["payload"]["noise_dim"] == 128
        generated = _rpc(proc, "generate", 1, {"lr_path": str(lr), "noise": [0.0] * 128})
        assert generated["op"] == "generate"
        assert generated["payload"]["hr_path"] == str(lr)
        scored = _rpc(proc, "score", 2, {
            "verifier": "stub", "wav_path": str(lr),
            "condition": {"kind": "none", "payload": None},
        })
        assert scored["op"] == "score"
        assert scored["payload"]["value"] == -float(lr.stat().st_size)
        bye = _rpc(proc, "bye", 3, {})
        assert bye["op"] == "bye"
        assert proc.wait(timeout=5) == 0

        # version mismatch: error then bye, then terminate
        proc = _stub()
        reply = _rpc(proc, "hello", 0, {"protocol_version": 2})
        assert reply["op"] == "error"
        assert json.loads(proc.stdout.readline())["op"] == "bye"
        assert proc.wait(timeout=5) != 0

        # malformed line: error then terminate
        proc = _stub()
        _rpc(proc, "hello", 0, {"protocol_version": 1})
        proc.stdin.write("{not json}\n")
        proc.stdin.flush()
        assert json.loads(proc.stdout.readline())["op"] == "error"
        assert proc.wait(timeout=5) != 0

        # engine-side search over the stub generator + stub verifier
        corpus_dir = tmp_path / "corpus"
        run = subprocess.run(
            [sys.executable, "-m", "srsearch", "corpus", "--count", "1", "--seed", "7",
             "--rate", "24000", "--duration", "0.5", "--cutoff", "4000",
             "--out", str(corpus_dir)],
            capture_output=True, text=True,
        )
        assert run.returncode == 0, run.stderr
        out = tmp_path / "run"
        run = subprocess.run(
            [sys.executable, "-m", "srsearch", "search", str(corpus_dir / "lr_0000.wav"),
             "--generator", "bridge",
             "--bridge-cmd", f"{sys.executable} -m srsearch_bridge.stub",
             "--verifier", "extern:stub", "--budget", "4", "--seed", "3",
             "--out", str(out)],
            capture_output=True, text=True,
        )
        assert run.returncode == 0, run.stderr
        doc = json.loads((out / "manifest.json").read_text())
        assert doc["schema_version"] == 1
        assert len(doc["candidates"]) == 4
        assert doc["candidates"][doc["selected_index"]]["selected"]
        assert (out / "selected.wav").exists()
