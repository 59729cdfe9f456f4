"""Exception types shared across the package."""


class ParameterError(ValueError):
    """An argument value violates an operation's contract."""


class DimensionError(ValueError):
    """Array shapes or lengths are inconsistent."""


class WavFormatError(ValueError):
    """The file is not a well-formed RIFF/WAVE container."""


class UnsupportedCodecError(ValueError):
    """The WAV container is valid but the codec is not PCM16 or float32."""


class BridgeUnavailableError(RuntimeError):
    """No bridge process is configured, or the handshake failed."""


class BridgeProtocolError(RuntimeError):
    """The bridge sent a malformed or unexpected message."""


class SearchRuntimeError(RuntimeError):
    """A generator or verifier failed mid-search.

    Carries the index of the candidate being processed so the run can be
    reported and aborted deterministically.
    """

    def __init__(self, message: str, candidate_index: int):
        super().__init__(f"{message} (candidate {candidate_index})")
        self.candidate_index = candidate_index
