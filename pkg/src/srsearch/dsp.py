"""Waveform I/O, STFT analysis/synthesis, low-pass filtering, and the
log-spectral distance metric.

Everything here is a pure function over its inputs; there is no shared
mutable state, so all operations are safe to call from multiple threads.
"""

from __future__ import annotations

import struct
from dataclasses import dataclass
from pathlib import Path

import numpy as np
from scipy import signal as sp_signal

from .errors import DimensionError, ParameterError, UnsupportedCodecError, WavFormatError

LSD_EPS = 1e-10

_WAVE_FORMAT_PCM = 0x0001
_WAVE_FORMAT_IEEE_FLOAT = 0x0003


@dataclass(frozen=True)
class AudioBuffer:
    """A mono waveform: finite samples in nominal [-1, 1] plus a sample rate."""

    samples: np.ndarray
    sample_rate_hz: int

    def __post_init__(self):
        samples = np.asarray(self.samples, dtype=np.float64)
        if samples.ndim != 1 or samples.size == 0:
            raise ParameterError("samples must be a non-empty 1-D array")
        if not np.all(np.isfinite(samples)):
            raise ParameterError("samples must be finite")
        if int(self.sample_rate_hz) <= 0:
            raise ParameterError("sample_rate_hz must be positive")
        object.__setattr__(self, "samples", samples)
        object.__setattr__(self, "sample_rate_hz", int(self.sample_rate_hz))

    def __len__(self) -> int:
        return self.samples.size

    @property
    def duration_s(self) -> float:
        return self.samples.size / self.sample_rate_hz


@dataclass(frozen=True)
class StftParams:
    """Analysis parameters: even window length, hop, periodic Hann window."""

    window_len: int = 2048
    hop_len: int = 512
    window_kind: str = "hann_periodic"

    def __post_init__(self):
        if self.window_len <= 0 or self.window_len % 2 != 0:
            raise ParameterError("window_len must be a positive even integer")
        if not 0 < self.hop_len <= self.window_len:
            raise ParameterError("hop_len must satisfy 0 < hop_len <= window_len")
        if self.window_kind != "hann_periodic":
            raise ParameterError(f"unsupported window kind: {self.window_kind!r}")

    @property
    def num_bins(self) -> int:
        return self.window_len // 2 + 1


@dataclass(frozen=True)
class Spectrogram:
    """T x F grid of non-negative linear STFT magnitudes."""

    mags: np.ndarray
    params: StftParams
    sample_rate_hz: int

    def __post_init__(self):
        mags = np.asarray(self.mags, dtype=np.float64)
        if mags.ndim != 2:
            raise DimensionError("mags must be a 2-D (frames x bins) array")
        if mags.shape[1] != self.params.num_bins:
            raise DimensionError(
                f"bin count {mags.shape[1]} != window_len/2+1 = {self.params.num_bins}"
            )
        if not np.all(np.isfinite(mags)) or np.any(mags < 0):
            raise ParameterError("magnitudes must be finite and non-negative")
        object.__setattr__(self, "mags", mags)

    @property
    def num_frames(self) -> int:
        return self.mags.shape[0]

    @property
    def num_bins(self) -> int:
        return self.mags.shape[1]

    def bin_frequencies_hz(self) -> np.ndarray:
        return np.arange(self.num_bins) * self.sample_rate_hz / self.params.window_len


def _periodic_hann(n: int) -> np.ndarray:
    return 0.5 - 0.5 * np.cos(2.0 * np.pi * np.arange(n) / n)


def _read_exact(fh, n: int, what: str) -> bytes:
    data = fh.read(n)
    if len(data) != n:
        raise WavFormatError(f"truncated file while reading {what}")
    return data


def load_wav(path) -> AudioBuffer:
    """Read a RIFF/WAVE file (PCM16 or IEEE float32) as a mono buffer.

    Multichannel content is averaged to mono per frame. PCM16 samples are
    scaled by 1/32768.
    """
    path = Path(path)
    with open(path, "rb") as fh:
        header = _read_exact(fh, 12, "RIFF header")
        if header[0:4] != b"RIFF" or header[8:12] != b"WAVE":
            raise WavFormatError(f"{path} is not a RIFF/WAVE file")

        fmt = None
        data = None
        while True:
            chunk_header = fh.read(8)
            if len(chunk_header) == 0:
                break
            if len(chunk_header) < 8:
                raise WavFormatError("truncated chunk header")
            chunk_id, chunk_size = struct.unpack("<4sI", chunk_header)
            if chunk_id == b"fmt ":
                if chunk_size < 16:
                    raise WavFormatError("fmt chunk too small")
                fmt = struct.unpack("<HHIIHH", _read_exact(fh, 16, "fmt chunk")[:16])
                fh.seek(chunk_size - 16, 1)
            elif chunk_id == b"data":
                data = _read_exact(fh, chunk_size, "data chunk")
            else:
                fh.seek(chunk_size + (chunk_size & 1), 1)
            if fmt is not None and data is not None:
                break

    if fmt is None or data is None:
        raise WavFormatError(f"{path} is missing fmt/data chunks")

    format_tag, channels, rate, _, _, bits = fmt
    if channels < 1 or rate <= 0:
        raise WavFormatError("invalid channel count or sample rate")

    if format_tag == _WAVE_FORMAT_PCM and bits == 16:
        raw = np.frombuffer(data[: len(data) - len(data) % (2 * channels)], dtype="<i2")
        samples = raw.astype(np.float64) / 32768.0
    elif format_tag == _WAVE_FORMAT_IEEE_FLOAT and bits == 32:
        raw = np.frombuffer(data[: len(data) - len(data) % (4 * channels)], dtype="<f4")
        samples = raw.astype(np.float64)
    else:
        raise UnsupportedCodecError(
            f"unsupported codec: format tag {format_tag}, {bits} bits per sample"
        )

    if channels > 1:
        frames = samples.size // channels
        samples = samples[: frames * channels].reshape(frames, channels).mean(axis=1)
    return AudioBuffer(samples=samples, sample_rate_hz=int(rate))


def save_wav(buffer: AudioBuffer, path, codec: str = "float32") -> None:
    """Write a mono WAV file as PCM16 or IEEE float32.

    PCM16 values are clamped to [-1, 1) before quantization, so a float32
    round trip is exact and a PCM16 round trip is within 1/32768 per sample.
    """
    if codec == "pcm16":
        quantized = np.round(buffer.samples * 32768.0)
        payload = np.clip(quantized, -32768, 32767).astype("<i2").tobytes()
        format_tag, bits = _WAVE_FORMAT_PCM, 16
    elif codec == "float32":
        payload = buffer.samples.astype("<f4").tobytes()
        format_tag, bits = _WAVE_FORMAT_IEEE_FLOAT, 32
    else:
        raise ParameterError(f"unknown codec {codec!r}; expected 'pcm16' or 'float32'")

    block_align = bits // 8
    byte_rate = buffer.sample_rate_hz * block_align
    header = struct.pack(
        "<4sI4s4sIHHIIHH4sI",
        b"RIFF",
        36 + len(payload),
        b"WAVE",
        b"fmt ",
        16,
        format_tag,
        1,
        buffer.sample_rate_hz,
        byte_rate,
        block_align,
        bits,
        b"data",
        len(payload),
    )
    with open(path, "wb") as fh:
        fh.write(header)
        fh.write(payload)


def _frame_signal(samples: np.ndarray, params: StftParams) -> np.ndarray:
    """Zero-pad by window_len/2 at both ends and slice overlapping frames.

    Frame count is floor(len/hop) + 1 (centered framing).
    """
    win, hop = params.window_len, params.hop_len
    num_frames = samples.size // hop + 1
    padded = np.concatenate([np.zeros(win // 2), samples, np.zeros(win // 2)])
    idx = np.arange(win)[None, :] + hop * np.arange(num_frames)[:, None]
    return padded[idx]


def stft_complex(buffer: AudioBuffer, params: StftParams) -> np.ndarray:
    """Complex STFT (frames x bins) with centered periodic-Hann framing."""
    frames = _frame_signal(buffer.samples, params)
    window = _periodic_hann(params.window_len)
    return np.fft.rfft(frames * window, axis=1)


def stft(buffer: AudioBuffer, params: StftParams) -> Spectrogram:
    """Magnitude STFT of a buffer."""
    mags = np.abs(stft_complex(buffer, params))
    return Spectrogram(mags=mags, params=params, sample_rate_hz=buffer.sample_rate_hz)


def istft_complex(
    spectrum: np.ndarray,
    params: StftParams,
    sample_rate_hz: int,
    length: int | None = None,
) -> AudioBuffer:
    """Overlap-add inverse STFT of a complex (frames x bins) grid.

    Uses window-squared normalization, which reconstructs the analysis
    input exactly on the interior when hop_len <= window_len/2.
    """
    if params.hop_len > params.window_len // 2:
        raise ParameterError("istft requires hop_len <= window_len/2")
    spectrum = np.asarray(spectrum)
    if spectrum.ndim != 2 or spectrum.shape[1] != params.num_bins:
        raise DimensionError("spectrum must be (frames x window_len/2+1)")

    win, hop = params.window_len, params.hop_len
    num_frames = spectrum.shape[0]
    window = _periodic_hann(win)
    frames = np.fft.irfft(spectrum, n=win, axis=1) * window

    padded_len = (num_frames - 1) * hop + win
    out = np.zeros(padded_len)
    norm = np.zeros(padded_len)
    win_sq = window * window
    for t in range(num_frames):
        start = t * hop
        out[start : start + win] += frames[t]
        norm[start : start + win] += win_sq
    nonzero = norm > 1e-12
    out[nonzero] /= norm[nonzero]

    out = out[win // 2 :]
    if length is None:
        length = (num_frames - 1) * hop
    if length > out.size:
        raise ParameterError(f"requested length {length} exceeds reconstructable {out.size}")
    return AudioBuffer(samples=out[:length].copy(), sample_rate_hz=sample_rate_hz)


def istft(spec: Spectrogram, phases: np.ndarray, length: int | None = None) -> AudioBuffer:
    """Overlap-add reconstruction from magnitudes and a matching phase grid."""
    phases = np.asarray(phases, dtype=np.float64)
    if phases.shape != spec.mags.shape:
        raise DimensionError(
            f"phase grid shape {phases.shape} != magnitude shape {spec.mags.shape}"
        )
    spectrum = spec.mags * np.exp(1j * phases)
    return istft_complex(spectrum, spec.params, spec.sample_rate_hz, length=length)


def make_lowres(hr: AudioBuffer, cutoff_hz: float) -> AudioBuffer:
    """Low-pass a buffer with a zero-phase windowed-sinc FIR filter.

    The Kaiser-designed filter places its transition band (10% of the
    cutoff) below the cutoff, so everything above cutoff_hz sits in the
    stopband; forward-backward application doubles the attenuation and
    cancels phase. Output keeps the input's rate and length.
    """
    nyquist = hr.sample_rate_hz / 2.0
    if not 0 < cutoff_hz < nyquist:
        raise ParameterError(f"cutoff {cutoff_hz} Hz must lie in (0, {nyquist}) Hz")

    width_hz = 0.1 * cutoff_hz
    numtaps, beta = sp_signal.kaiserord(80.0, width_hz / nyquist)
    numtaps |= 1  # force odd length (type-I linear phase)
    taps = sp_signal.firwin(
        numtaps, cutoff_hz - width_hz / 2.0, window=("kaiser", beta), fs=hr.sample_rate_hz
    )
    # Gustafsson edge handling avoids the reflection transients that
    # default padding injects at hard signal boundaries.
    irlen = min(4 * numtaps, len(hr) - 1)
    filtered = sp_signal.filtfilt(taps, [1.0], hr.samples, method="gust", irlen=irlen)
    return AudioBuffer(samples=filtered, sample_rate_hz=hr.sample_rate_hz)


def lsd_mags(a: np.ndarray, b: np.ndarray, eps: float = LSD_EPS) -> float:
    """Log-spectral distance between two magnitude grids of one shape.

    Frame-wise RMS over frequency of log10-power differences, averaged
    over frames.
    """
    a = np.asarray(a, dtype=np.float64)
    b = np.asarray(b, dtype=np.float64)
    if a.shape != b.shape:
        raise DimensionError(f"magnitude grids differ in shape: {a.shape} vs {b.shape}")
    diff = np.log10(a * a + eps) - np.log10(b * b + eps)
    return float(np.mean(np.sqrt(np.mean(diff * diff, axis=1))))


def lsd(gen: AudioBuffer, ref: AudioBuffer, params: StftParams | None = None) -> float:
    """Log-spectral distance between two waveforms (lower is better).

    Both buffers are truncated to the shorter length before analysis.
    Symmetric in its arguments; zero iff the magnitude grids coincide.
    """
    if params is None:
        params = StftParams()
    if gen.sample_rate_hz != ref.sample_rate_hz:
        raise ParameterError(
            f"sample rates differ: {gen.sample_rate_hz} vs {ref.sample_rate_hz}"
        )
    n = min(len(gen), len(ref))
    gen_cut = AudioBuffer(gen.samples[:n], gen.sample_rate_hz)
    ref_cut = AudioBuffer(ref.samples[:n], ref.sample_rate_hz)
    return lsd_mags(stft(ref_cut, params).mags, stft(gen_cut, params).mags)
