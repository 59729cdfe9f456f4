"""Stable 64-bit hashing for noise digests and deterministic keying.

Python's built-in hash is salted per process, so digests that must be
stable across runs and platforms use FNV-1a over explicit little-endian
bytes.
"""

from __future__ import annotations

import numpy as np

_FNV_OFFSET64 = 0xCBF29CE484222325
_FNV_PRIME64 = 0x100000001B3
_MASK64 = 0xFFFFFFFFFFFFFFFF


def fnv1a64(data: bytes) -> int:
    h = _FNV_OFFSET64
    for b in data:
        h ^= b
        h = (h * _FNV_PRIME64) & _MASK64
    return h


def vector_digest(values: np.ndarray) -> int:
    """FNV-1a of the little-endian IEEE-754 float64 bytes of a vector."""
    return fnv1a64(np.asarray(values, dtype="<f8").tobytes())


def digest_hex(values: np.ndarray) -> str:
    """16-hex-digit rendering of vector_digest."""
    return f"{vector_digest(values):016x}"
