"""Engine-side conformance: the search engine drives the loopback stub
through its public CLI and produces a valid manifest."""

import json
import subprocess
import sys

import pytest

STUB_CMD = f"{sys.executable} -m srsearch_bridge.stub"


def _run(args, **kwargs):
    return subprocess.run(
        [sys.executable, "-m", "srsearch", *args], capture_output=True, text=True, **kwargs
    )


@pytest.fixture(scope="module")
def corpus_dir(tmp_path_factory):
    out = tmp_path_factory.mktemp("corpus")
    proc = _run([
        "corpus", "--count", "1", "--seed", "7", "--rate", "24000",
        "--duration", "0.5", "--cutoff", "4000", "--out", str(out),
    ])
    assert proc.returncode == 0, proc.stderr
    return out


def test_search_over_stub_generator_and_verifier(corpus_dir, tmp_path):
    out = tmp_path / "run"
    lr_path = corpus_dir / "lr_0000.wav"
    proc = _run([
        "search", str(lr_path),
        "--generator", "bridge", "--bridge-cmd", STUB_CMD,
        "--verifier", "extern:stub",
        "--algorithm", "random", "--budget", "4", "--seed", "5",
        "--out", str(out),
    ])
    assert proc.returncode == 0, proc.stderr
    assert lr_path.exists()  # the echoed input is never deleted by the engine

    doc = json.loads((out / "manifest.json").read_text())
    assert doc["schema_version"] == 1
    assert doc["generator_info"]["noise_dim"] == 128
    assert doc["generator_info"]["output_sample_rate_hz"] == 24000
    assert len(doc["candidates"]) == 4
    assert doc["candidates"][doc["selected_index"]]["selected"]
    for record in doc["candidates"]:
        assert record["scores"]["stub"]["direction"] == "higher_better"
        assert len(record["noise_digest"]) == 16
    # identity generator makes every candidate equal: tie-break to index 0
    assert doc["selected_index"] == 0
    assert (out / "selected.wav").exists()
    assert proc.stdout.strip().startswith("selected index=0")


def test_zero_order_over_stub(corpus_dir, tmp_path):
    out = tmp_path / "zo"
    proc = _run([
        "search", str(corpus_dir / "lr_0000.wav"),
        "--generator", "bridge", "--bridge-cmd", STUB_CMD,
        "--verifier", "extern:stub",
        "--algorithm", "zero_order", "--budget", "6", "--k", "2",
        "--seed", "5", "--out", str(out),
    ])
    assert proc.returncode == 0, proc.stderr
    doc = json.loads((out / "manifest.json").read_text())
    assert len(doc["candidates"]) == 6
    assert [c["round"] for c in doc["candidates"]] == [0, 0, 1, 1, 2, 2]


def test_handshake_failure_exits_3(corpus_dir, tmp_path):
    proc = _run([
        "search", str(corpus_dir / "lr_0000.wav"),
        "--generator", "bridge",
        "--bridge-cmd", f"{sys.executable} -c \"print('not json')\"",
        "--verifier", "extern:stub",
        "--budget", "2", "--out", str(tmp_path / "x"),
    ])
    assert proc.returncode == 3


def test_nonexistent_bridge_command_exits_3(corpus_dir, tmp_path):
    proc = _run([
        "search", str(corpus_dir / "lr_0000.wav"),
        "--generator", "bridge",
        "--bridge-cmd", "/nonexistent/bridge-binary",
        "--verifier", "extern:stub",
        "--budget", "2", "--out", str(tmp_path / "y"),
    ])
    assert proc.returncode == 3


def test_env_var_supplies_bridge_command(corpus_dir, tmp_path, monkeypatch):
    out = tmp_path / "envrun"
    proc = subprocess.run(
        [
            sys.executable, "-m", "srsearch", "search", str(corpus_dir / "lr_0000.wav"),
            "--generator", "bridge", "--verifier", "extern:stub",
            "--budget", "2", "--out", str(out),
        ],
        capture_output=True, text=True,
        env={"SRSEARCH_BRIDGE_CMD": STUB_CMD, "PATH": "/usr/bin:/bin"},
    )
    assert proc.returncode == 0, proc.stderr
    assert (out / "manifest.json").exists()


def test_undeclared_condition_kind_exits_3(corpus_dir, tmp_path):
    proc = _run([
        "search", str(corpus_dir / "lr_0000.wav"),
        "--generator", "bridge", "--bridge-cmd", STUB_CMD,
        "--verifier", 'extern:stub?text="nope"',
        "--budget", "2", "--out", str(tmp_path / "z"),
    ])
    assert proc.returncode == 3


def test_mid_search_model_failure_exits_4(corpus_dir, tmp_path):
    script = tmp_path / "failing_bridge.py"
    script.write_text(
        "import sys\n"
        "from srsearch_bridge.server import PluginError, serve\n"
        "\n"
        "class FailingPlugin:\n"
        "    def capabilities(self):\n"
        "        return {'noise_dim': 8, 'sample_rate_hz': 24000, 'verifiers': [\n"
        "            {'name': 'stub', 'direction': 'higher_better', 'condition_kinds': ['none']}]}\n"
        "    def generate(self, lr_path, noise):\n"
        "        raise PluginError('weights exploded')\n"
        "    def score(self, verifier_name, wav_path, condition):\n"
        "        return 0.0\n"
        "\n"
        "sys.exit(serve(FailingPlugin()))\n"
    )
    proc = _run([
        "search", str(corpus_dir / "lr_0000.wav"),
        "--generator", "bridge", "--bridge-cmd", f"{sys.executable} {script}",
        "--verifier", "extern:stub",
        "--budget", "2", "--out", str(tmp_path / "f"),
    ])
    assert proc.returncode == 4
    assert "candidate 0" in proc.stderr
