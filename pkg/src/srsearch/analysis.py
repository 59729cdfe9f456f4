"""Candidate-set analysis: search-space range and per-bin uncertainty maps.

Both statistics work on linear-magnitude spectrograms. The range (LSD
variance) is the mean log-spectral distance between each candidate and the
element-wise mean spectrogram; the uncertainty map is the min-max
normalized per-bin magnitude variance.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass

import numpy as np

from .dsp import LSD_EPS, lsd_mags
from .errors import DimensionError, ParameterError


@dataclass(frozen=True)
class CandidateSet:
    """N same-shape spectrograms generated from one input."""

    spectrograms: tuple

    def __post_init__(self):
        specs = tuple(self.spectrograms)
        if not specs:
            raise ParameterError("candidate set must not be empty")
        shape = specs[0].mags.shape
        params = specs[0].params
        for s in specs[1:]:
            if s.mags.shape != shape:
                raise DimensionError(
                    f"spectrogram shapes differ: {s.mags.shape} vs {shape}"
                )
            if s.params != params:
                raise ParameterError("spectrograms must share STFT parameters")
        object.__setattr__(self, "spectrograms", specs)

    def __len__(self) -> int:
        return len(self.spectrograms)

    def stacked_mags(self) -> np.ndarray:
        return np.stack([s.mags for s in self.spectrograms], axis=0)


@dataclass(frozen=True)
class UncertaintyMap:
    """T x F grid of normalized per-bin generative variance in [0, 1]."""

    values: np.ndarray
    epsilon: float
    clip_percentile: float = 100.0

    def __post_init__(self):
        values = np.asarray(self.values, dtype=np.float64)
        if values.ndim != 2:
            raise DimensionError("uncertainty values must be a 2-D grid")
        if np.any(values < 0) or np.any(values > 1) or not np.all(np.isfinite(values)):
            raise ParameterError("uncertainty values must lie in [0, 1]")
        if not 0.0 < self.clip_percentile <= 100.0:
            raise ParameterError("clip_percentile must lie in (0, 100]")
        object.__setattr__(self, "values", values)


def search_space_variance(candidate_set: CandidateSet) -> float:
    """Mean LSD between each candidate and the set's mean spectrogram.

    A spread measure of the solution space a search explored; permutation
    invariant, and exactly zero for a set of identical spectrograms.
    """
    if len(candidate_set) < 2:
        raise ParameterError("variance needs at least 2 candidates")
    mags = candidate_set.stacked_mags()
    # Anchored mean keeps a set of identical grids bitwise equal to its
    # mean, so duplicate sets measure exactly zero.
    mean_mags = mags[0] + (mags - mags[0]).mean(axis=0)
    distances = [lsd_mags(m, mean_mags) for m in mags]
    return float(np.mean(distances))


def uncertainty_map(
    candidate_set: CandidateSet,
    epsilon: float = 1e-12,
    log_magnitudes: bool = False,
) -> UncertaintyMap:
    """Min-max normalized per-bin population variance across candidates.

    ``log_magnitudes`` switches the variance to the log10-power domain;
    the default follows the linear-magnitude convention used by
    search_space_variance.
    """
    if len(candidate_set) < 2:
        raise ParameterError("uncertainty needs at least 2 candidates")
    if epsilon <= 0:
        raise ParameterError("epsilon must be positive")
    mags = candidate_set.stacked_mags()
    if log_magnitudes:
        mags = np.log10(mags * mags + LSD_EPS)
    # Shifted population (1/N) variance: exact zero for identical
    # candidates, which keeps renormalization from amplifying float dust.
    deltas = mags - mags[0]
    variance = np.maximum((deltas * deltas).mean(axis=0) - deltas.mean(axis=0) ** 2, 0.0)
    vmin = variance.min()
    vmax = variance.max()
    values = (variance - vmin) / (vmax - vmin + epsilon)
    return UncertaintyMap(values=values, epsilon=epsilon)


def clip_for_render(umap: UncertaintyMap, percentile: float = 90.0) -> UncertaintyMap:
    """Clip values above a nearest-rank percentile, then rescale to [0, 1].

    Emphasizes salient structure when a few bins dominate the variance.
    An all-zero grid stays all-zero.
    """
    if not 0.0 < percentile <= 100.0:
        raise ParameterError("percentile must lie in (0, 100]")
    flat = np.sort(umap.values, axis=None)
    rank = int(np.ceil(percentile / 100.0 * flat.size))  # nearest-rank method
    threshold = flat[max(rank - 1, 0)]
    clipped = np.minimum(umap.values, threshold)
    peak = clipped.max()
    if peak > 0:
        clipped = clipped / peak
    return UncertaintyMap(values=clipped, epsilon=umap.epsilon, clip_percentile=percentile)


def export_map(umap: UncertaintyMap, path, fmt: str = "pgm") -> None:
    """Write a map as a binary PGM image or a CSV table.

    PGM: P5, 8 bits, one row per frequency bin with the top row at
    Nyquist, columns are frames; pixel = round(255 * value).
    CSV: a comment line with render metadata, a "t,f,u" header, then one
    row per bin with 6-decimal values.
    """
    if fmt == "pgm":
        grid = np.round(255.0 * umap.values.T[::-1]).astype(np.uint8)
        height, width = grid.shape
        with open(path, "wb") as fh:
            fh.write(f"P5\n{width} {height}\n255\n".encode("ascii"))
            fh.write(grid.tobytes())
    elif fmt == "csv":
        num_frames, num_bins = umap.values.shape
        with open(path, "w", newline="") as fh:
            fh.write(
                f"# clip_percentile={umap.clip_percentile:g} epsilon={umap.epsilon:g}\n"
            )
            writer = csv.writer(fh)
            writer.writerow(["t", "f", "u"])
            for t in range(num_frames):
                for f in range(num_bins):
                    writer.writerow([t, f, f"{umap.values[t, f]:.6f}"])
    else:
        raise ParameterError(f"unknown export format {fmt!r}; expected 'pgm' or 'csv'")
