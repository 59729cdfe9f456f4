"""Loopback stub: exercises the full wire protocol with no model weights.

The generator echoes the LR path back (identity mapping, trivially
deterministic); the scorer returns the negative file size in bytes, which
gives a deterministic candidate ordering.
"""

from __future__ import annotations

import os
import sys

from .server import PluginError, serve

NOISE_DIM = 128
SAMPLE_RATE_HZ = 24000


class LoopbackStub:
    def capabilities(self) -> dict:
        return {
            "noise_dim": NOISE_DIM,
            "sample_rate_hz": SAMPLE_RATE_HZ,
            "verifiers": [
                {"name": "stub", "direction": "higher_better", "condition_kinds": ["none"]}
            ],
        }

    def generate(self, lr_path: str, noise: list[float]) -> str:
        if len(noise) != NOISE_DIM:
            raise PluginError(f"noise length {len(noise)} != noise_dim {NOISE_DIM}")
        if not os.path.isfile(lr_path):
            raise PluginError(f"no such input file: {lr_path}")
        return lr_path

    def score(self, verifier_name: str, wav_path: str, condition: dict) -> float:
        if verifier_name != "stub":
            raise PluginError(f"unknown verifier {verifier_name!r}")
        if condition.get("kind", "none") != "none":
            raise PluginError(f"condition kind {condition.get('kind')!r} not declared")
        if not os.path.isfile(wav_path):
            raise PluginError(f"no such candidate file: {wav_path}")
        return -float(os.path.getsize(wav_path))


def main() -> int:
    return serve(LoopbackStub())


if __name__ == "__main__":
    sys.exit(main())
