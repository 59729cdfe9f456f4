"""Wire-protocol conformance of the loopback stub, driven as a black box."""

import json
import subprocess
import sys

import pytest


class StubProcess:
    """Raw line-level client for poking the protocol directly."""

    def __init__(self):
        self.proc = subprocess.Popen(
            [sys.executable, "-m", "srsearch_bridge.stub"],
            stdin=subprocess.PIPE,
            stdout=subprocess.PIPE,
            stderr=subprocess.DEVNULL,
            text=True,
        )

    def send_raw(self, line: str) -> None:
        self.proc.stdin.write(line + "\n")
        self.proc.stdin.flush()

    def send(self, op: str, msg_id: int, payload: dict) -> None:
        self.send_raw(json.dumps({"op": op, "id": msg_id, "payload": payload}))

    def recv(self) -> dict:
        line = self.proc.stdout.readline()
        assert line, "bridge closed stdout unexpectedly"
        return json.loads(line)

    def close(self) -> None:
        if self.proc.poll() is None:
            self.proc.kill()
        self.proc.wait()

    def __enter__(self):
        return self

    def __exit__(self, *exc):
        self.close()


@pytest.fixture()
def stub():
    with StubProcess() as proc:
        yield proc


def _handshake(stub, msg_id=0):
    stub.send("hello", msg_id, {"protocol_version": 1})
    reply = stub.recv()
    assert reply["op"] == "hello" and reply["id"] == msg_id
    return reply["payload"]


def test_handshake_capabilities(stub):
    payload = _handshake(stub)
    assert payload["noise_dim"] == 128
    assert payload["sample_rate_hz"] == 24000
    assert payload["verifiers"] == [
        {"name": "stub", "direction": "higher_better", "condition_kinds": ["none"]}
    ]


def test_version_mismatch_errors_then_byes(stub):
    stub.send("hello", 0, {"protocol_version": 2})
    first = stub.recv()
    assert first["op"] == "error"
    second = stub.recv()
    assert second["op"] == "bye"
    assert stub.proc.wait(timeout=5) != 0


def test_generate_echoes_lr_path(stub, tmp_path):
    lr = tmp_path / "lr.wav"
    lr.write_bytes(b"RIFF0000WAVE")
    _handshake(stub)
    stub.send("generate", 1, {"lr_path": str(lr), "noise": [0.0] * 128})
    reply = stub.recv()
    assert reply["op"] == "generate" and reply["id"] == 1
    assert reply["payload"]["hr_path"] == str(lr)
    # determinism: the same request again yields the same artifact
    stub.send("generate", 2, {"lr_path": str(lr), "noise": [0.0] * 128})
    assert stub.recv()["payload"]["hr_path"] == str(lr)


def test_generate_wrong_noise_length_errors(stub, tmp_path):
    lr = tmp_path / "lr.wav"
    lr.write_bytes(b"x")
    _handshake(stub)
    stub.send("generate", 1, {"lr_path": str(lr), "noise": [0.0] * 3})
    reply = stub.recv()
    assert reply["op"] == "error" and reply["id"] == 1


def test_score_is_negative_file_size(stub, tmp_path):
    wav = tmp_path / "c.wav"
    wav.write_bytes(b"a" * 444)
    _handshake(stub)
    stub.send("score", 1, {"verifier": "stub", "wav_path": str(wav),
                           "condition": {"kind": "none", "payload": None}})
    reply = stub.recv()
    assert reply["op"] == "score"
    assert reply["payload"]["value"] == -444.0


def test_unknown_verifier_errors(stub, tmp_path):
    wav = tmp_path / "c.wav"
    wav.write_bytes(b"a")
    _handshake(stub)
    stub.send("score", 1, {"verifier": "wer2", "wav_path": str(wav),
                           "condition": {"kind": "none", "payload": None}})
    assert stub.recv()["op"] == "error"


def test_undeclared_condition_kind_errors(stub, tmp_path):
    wav = tmp_path / "c.wav"
    wav.write_bytes(b"a")
    _handshake(stub)
    stub.send("score", 1, {"verifier": "stub", "wav_path": str(wav),
                           "condition": {"kind": "transcript", "payload": "hello"}})
    assert stub.recv()["op"] == "error"


def test_bye_round_trip(stub):
    _handshake(stub)
    stub.send("bye", 1, {})
    assert stub.recv()["op"] == "bye"
    assert stub.proc.wait(timeout=5) == 0


def test_malformed_line_errors_then_terminates(stub):
    _handshake(stub)
    stub.send_raw("this is not json")
    reply = stub.recv()
    assert reply["op"] == "error"
    assert stub.proc.wait(timeout=5) != 0


def test_non_increasing_ids_rejected(stub):
    _handshake(stub, msg_id=5)
    stub.send("bye", 5, {})
    assert stub.recv()["op"] == "error"
    assert stub.proc.wait(timeout=5) != 0


def test_request_before_hello_errors(stub, tmp_path):
    wav = tmp_path / "c.wav"
    wav.write_bytes(b"a")
    stub.send("score", 0, {"verifier": "stub", "wav_path": str(wav),
                           "condition": {"kind": "none", "payload": None}})
    reply = stub.recv()
    assert reply["op"] == "error" and "before hello" in reply["payload"]["message"]
