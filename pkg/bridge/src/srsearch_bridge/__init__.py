"""Reference adapter exposing model-backed generators and verifiers to the
search engine over a newline-delimited JSON stdio protocol.

Real-model wrappers plug in behind the ``BridgePlugin`` interface and are
registered under the ``srsearch_bridge.plugins`` entry-point group; the
bundled loopback stub exercises the full protocol without any weights.
"""

from .server import BridgePlugin, PluginError, serve
from .stub import LoopbackStub

__version__ = "0.1.0"

__all__ = ["BridgePlugin", "PluginError", "serve", "LoopbackStub", "__version__"]
