"""Engine-side bridge client behavior that needs no real bridge: launch
failures, handshake timeouts, and garbage responses all map to the
bridge-unavailable contract."""

import sys

import pytest

from srsearch.bridge_client import BridgeConnection
from srsearch.errors import BridgeUnavailableError


def test_nonexistent_command_unavailable():
    with pytest.raises(BridgeUnavailableError):
        BridgeConnection("/nonexistent/bridge-binary")


def test_empty_command_unavailable():
    with pytest.raises(BridgeUnavailableError):
        BridgeConnection("")


def test_handshake_timeout_unavailable():
    # a process that never answers: tiny timeout keeps the test fast
    with pytest.raises(BridgeUnavailableError, match="handshake"):
        BridgeConnection([sys.executable, "-c", "import time; time.sleep(30)"],
                         handshake_timeout_s=0.3)


def test_garbage_handshake_unavailable():
    with pytest.raises(BridgeUnavailableError):
        BridgeConnection([sys.executable, "-c", "print('not json'); import time; time.sleep(5)"],
                         handshake_timeout_s=5.0)


def test_immediate_exit_unavailable():
    with pytest.raises(BridgeUnavailableError):
        BridgeConnection([sys.executable, "-c", "pass"], handshake_timeout_s=5.0)
