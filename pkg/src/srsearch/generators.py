"""Candidate generation: the generator interface searched at inference
time, a seeded standard-normal noise source, and a fully synthetic
spectral-band-replication generator for desk-scale experiments.

The synthetic generator is deterministic in (input, noise, params): the
first half of the latent modulates the replicated band's log-envelope on a
coarse time-frequency grid, the second half keys the replicated phases.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field

import numpy as np
from scipy import signal as sp_signal

from .dsp import AudioBuffer, StftParams, istft_complex, make_lowres, stft_complex
from .errors import DimensionError, ParameterError
from .hashing import vector_digest


@dataclass(frozen=True)
class LatentNoise:
    """The latent vector a search algorithm explores."""

    values: np.ndarray
    dim: int

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 1 or values.size != self.dim or self.dim < 1:
            raise DimensionError(f"expected a 1-D vector of length {self.dim}")
        if not np.all(np.isfinite(values)):
            raise ParameterError("noise values must be finite")
        object.__setattr__(self, "values", values)

    @classmethod
    def from_values(cls, values: np.ndarray) -> "LatentNoise":
        values = np.asarray(values, dtype=np.float64)
        return cls(values=values, dim=values.size)


@dataclass(frozen=True)
class GeneratorInfo:
    """What a generator declares about the space it is searched over."""

    noise_dim: int
    output_sample_rate_hz: int
    deterministic: bool = True

    def __post_init__(self):
        if self.noise_dim < 1:
            raise ParameterError("noise_dim must be >= 1")

    def to_json_dict(self) -> dict:
        return {
            "noise_dim": self.noise_dim,
            "output_sample_rate_hz": self.output_sample_rate_hz,
            "deterministic": self.deterministic,
        }


@dataclass(frozen=True)
class SyntheticGenParams:
    """Controls for the synthetic band-replication generator.

    The latent has one envelope value and one phase-key value per grid
    cell, so noise_dim = time_cells * freq_cells * 2. Replication starts
    one transition-width above the cutoff (guard_frac of the cutoff, the
    same width the low-pass construction uses), which keeps synthesis
    leakage out of the preserved band.
    """

    cutoff_hz: float = 4000.0
    envelope_grid: tuple[int, int] = (8, 8)
    sigma: float = 0.5
    base_rolloff_db_per_octave: float = -3.0
    stft: StftParams = field(default_factory=StftParams)
    guard_frac: float = 0.2

    def __post_init__(self):
        tc, fc = self.envelope_grid
        if tc < 1 or fc < 1:
            raise ParameterError("envelope grid cells must be >= 1")
        if self.cutoff_hz <= 0:
            raise ParameterError("cutoff_hz must be positive")
        if self.sigma < 0:
            raise ParameterError("sigma must be non-negative")
        if not 0.0 <= self.guard_frac < 0.5:
            raise ParameterError("guard_frac must lie in [0, 0.5)")

    @property
    def noise_dim(self) -> int:
        tc, fc = self.envelope_grid
        return tc * fc * 2


def sample_standard_noise(dim: int, seed: int) -> LatentNoise:
    """i.i.d. standard normal draws from a counter-based RNG.

    Identical (seed, dim) gives an identical vector; distinct seeds give
    independent streams (Philox keyed by the seed).
    """
    if dim < 1:
        raise ParameterError("dim must be >= 1")
    rng = np.random.Generator(np.random.Philox(key=seed & 0xFFFFFFFFFFFFFFFF))
    return LatentNoise.from_values(rng.standard_normal(dim))


def _bilinear_upsample(grid: np.ndarray, out_rows: int, out_cols: int) -> np.ndarray:
    """Bilinear interpolation of a coarse grid onto an out_rows x out_cols lattice.

    Endpoints of each axis are aligned; degenerate axes are held constant.
    """
    rows, cols = grid.shape
    if rows > 1 and out_rows > 1:
        u = np.linspace(0.0, rows - 1.0, out_rows)
    else:
        u = np.zeros(out_rows)
    if cols > 1 and out_cols > 1:
        v = np.linspace(0.0, cols - 1.0, out_cols)
    else:
        v = np.zeros(out_cols)
    u0 = np.floor(u).astype(int)
    v0 = np.floor(v).astype(int)
    u1 = np.minimum(u0 + 1, rows - 1)
    v1 = np.minimum(v0 + 1, cols - 1)
    fu = (u - u0)[:, None]
    fv = (v - v0)[None, :]
    top = grid[u0][:, v0] * (1 - fv) + grid[u0][:, v1] * fv
    bottom = grid[u1][:, v0] * (1 - fv) + grid[u1][:, v1] * fv
    return top * (1 - fu) + bottom * fu


def _guard_highpass(samples: np.ndarray, cutoff_hz: float, guard_frac: float,
                    sample_rate_hz: int) -> np.ndarray:
    """Zero-phase FIR high-pass with stopband at the cutoff, passband at
    the guard edge."""
    if guard_frac == 0.0:
        return samples
    nyquist = sample_rate_hz / 2.0
    width_hz = guard_frac * cutoff_hz
    numtaps, beta = sp_signal.kaiserord(80.0, width_hz / nyquist)
    numtaps |= 1
    taps = sp_signal.firwin(
        numtaps,
        cutoff_hz + width_hz / 2.0,
        window=("kaiser", beta),
        pass_zero=False,
        fs=sample_rate_hz,
    )
    padlen = min(3 * numtaps, samples.size - 1)
    return sp_signal.filtfilt(taps, [1.0], samples, padlen=padlen)


def synthetic_generate(lr: AudioBuffer, noise: LatentNoise, params: SyntheticGenParams) -> AudioBuffer:
    """Synthesize a wide-band candidate from a band-limited input.

    Magnitudes above the guard edge are octave-folded copies of lower
    bins, shaped by a rolloff plus a noise-driven log-envelope; their
    phases come from an RNG keyed by the second half of the latent.
    Everything at and below the guard edge passes through untouched.
    """
    if noise.dim != params.noise_dim:
        raise DimensionError(
            f"noise dim {noise.dim} != generator dim {params.noise_dim}"
        )
    nyquist = lr.sample_rate_hz / 2.0
    if params.cutoff_hz >= nyquist:
        raise ParameterError("cutoff must be below the Nyquist frequency")

    spectrum = stft_complex(lr, params.stft)
    num_frames, num_bins = spectrum.shape
    bin_hz = lr.sample_rate_hz / params.stft.window_len
    cut_bin = int(np.floor(params.cutoff_hz / bin_hz))
    first_rep = int(np.floor((1.0 + params.guard_frac) * params.cutoff_hz / bin_hz)) + 1
    num_rep = num_bins - first_rep
    if cut_bin < 1 or num_rep < 1:
        raise ParameterError("cutoff leaves no band to replicate")

    # Octave folding: each replicated bin mirrors the bin one octave down,
    # which may itself be a folded copy.
    folded = np.abs(spectrum)
    for k in range(first_rep, num_bins):
        folded[:, k] = folded[:, k // 2]

    tc, fc = params.envelope_grid
    half = noise.dim // 2
    env_cells = noise.values[:half].reshape(tc, fc)
    env_noise = _bilinear_upsample(env_cells, num_frames, num_rep)

    rep_freqs = np.arange(first_rep, num_bins) * bin_hz
    rolloff_db = params.base_rolloff_db_per_octave * np.log2(rep_freqs / params.cutoff_hz)
    gain = 10.0 ** (rolloff_db / 20.0) * np.exp(params.sigma * env_noise)

    phase_key = vector_digest(noise.values[half:])
    phase_rng = np.random.Generator(np.random.Philox(key=phase_key))
    phases = phase_rng.uniform(0.0, 2.0 * np.pi, size=(num_frames, num_rep))

    base_spectrum = spectrum.copy()
    base_spectrum[:, first_rep:] = 0.0
    rep_spectrum = np.zeros_like(spectrum)
    rep_spectrum[:, first_rep:] = folded[:, first_rep:] * gain * np.exp(1j * phases)

    base_wave = istft_complex(base_spectrum, params.stft, lr.sample_rate_hz, length=len(lr))
    rep_wave = istft_complex(rep_spectrum, params.stft, lr.sample_rate_hz, length=len(lr))

    # Random per-frame phases leave the replicated band with broadband
    # overlap-add skirts; a zero-phase high-pass over the guard region
    # confines it above the cutoff so the preserved band stays intact.
    samples = base_wave.samples + _guard_highpass(
        rep_wave.samples, params.cutoff_hz, params.guard_frac, lr.sample_rate_hz
    )
    peak = np.max(np.abs(samples))
    if peak > 1.0:
        samples = samples / peak
    return AudioBuffer(samples, lr.sample_rate_hz)


def make_test_corpus(
    count: int,
    seed: int,
    sample_rate_hz: int = 24000,
    duration_s: float = 1.0,
    cutoff_hz: float = 4000.0,
) -> list[tuple[AudioBuffer, AudioBuffer]]:
    """Deterministic (HR, LR) pairs for desk-scale experiments.

    Each HR item is a harmonic series (random fundamental, 8-16 harmonics
    with 1/k amplitude decay) plus high-band noise at -20 dB relative, so
    the band above the cutoff always carries recoverable content. LR items
    are low-passed HR.
    """
    if count < 1:
        raise ParameterError("count must be >= 1")
    nyquist = sample_rate_hz / 2.0
    if not 0 < cutoff_hz < nyquist:
        raise ParameterError("cutoff must lie in (0, Nyquist)")

    rng = np.random.Generator(np.random.Philox(key=seed & 0xFFFFFFFFFFFFFFFF))
    n = int(round(duration_s * sample_rate_hz))
    t = np.arange(n) / sample_rate_hz

    # High-pass FIR for the noise bed; symmetric taps + 'same' convolution
    # keep it zero phase. The bed starts just above the band-replication
    # guard so generated candidates can plausibly cover it.
    numtaps = 513
    hp_taps = sp_signal.firwin(numtaps, 1.25 * cutoff_hz, pass_zero=False, fs=sample_rate_hz)

    items = []
    for _ in range(count):
        f0 = rng.uniform(110.0, 440.0)
        n_harm = int(rng.integers(8, 17))
        phases = rng.uniform(0.0, 2.0 * np.pi, n_harm)
        harm = np.zeros(n)
        for k in range(1, n_harm + 1):
            harm += np.sin(2.0 * np.pi * k * f0 * t + phases[k - 1]) / k

        white = rng.standard_normal(n)
        noise_hp = np.convolve(white, hp_taps, mode="same")
        harm_rms = np.sqrt(np.mean(harm * harm))
        noise_rms = np.sqrt(np.mean(noise_hp * noise_hp))
        noise_hp *= 0.1 * harm_rms / noise_rms

        hr = harm + noise_hp
        hr *= 0.7 / np.max(np.abs(hr))
        hr_buf = AudioBuffer(hr, sample_rate_hz)
        items.append((hr_buf, make_lowres(hr_buf, cutoff_hz)))
    return items


class Generator(ABC):
    """A stochastic candidate generator driven by latent noise."""

    @abstractmethod
    def info(self) -> GeneratorInfo:
        """Declare the searched noise dimension and output rate."""

    @abstractmethod
    def generate(self, lr: AudioBuffer, noise: LatentNoise) -> AudioBuffer:
        """Produce one candidate; must be deterministic in (lr, noise)."""


class SyntheticGenerator(Generator):
    """Generator interface over synthetic_generate."""

    def __init__(self, params: SyntheticGenParams | None = None, sample_rate_hz: int = 24000):
        self.params = params or SyntheticGenParams()
        self.sample_rate_hz = sample_rate_hz
        if self.params.cutoff_hz >= sample_rate_hz / 2.0:
            raise ParameterError("cutoff must be below the output Nyquist frequency")

    def info(self) -> GeneratorInfo:
        return GeneratorInfo(
            noise_dim=self.params.noise_dim,
            output_sample_rate_hz=self.sample_rate_hz,
            deterministic=True,
        )

    def generate(self, lr: AudioBuffer, noise: LatentNoise) -> AudioBuffer:
        return synthetic_generate(lr, noise, self.params)
