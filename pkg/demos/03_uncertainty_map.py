"""Per-bin generative uncertainty from repeated stochastic generation.

Generates several candidates from one input, maps the per-bin magnitude
variance to [0, 1], clips at the 90th percentile for contrast, and writes
PGM + CSV renderings next to this script.
"""

from pathlib import Path

import numpy as np

import srsearch as ss
from srsearch.analysis import CandidateSet, clip_for_render, export_map, uncertainty_map

RATE = 24000
CUTOFF = 4000.0
DRAWS = 12

hr, lr = ss.make_test_corpus(1, seed=33, sample_rate_hz=RATE, cutoff_hz=CUTOFF)[0]
gen_params = ss.SyntheticGenParams(cutoff_hz=CUTOFF)
params = ss.StftParams()

outputs = [
    ss.synthetic_generate(lr, ss.sample_standard_noise(gen_params.noise_dim, ss.derive_seed(1, i)), gen_params)
    for i in range(DRAWS)
]
candidate_set = CandidateSet(tuple(ss.stft(a, params) for a in outputs))

umap = uncertainty_map(candidate_set)
freqs = candidate_set.spectrograms[0].bin_frequencies_hz()
above = umap.values[:, freqs > CUTOFF].mean()
below = umap.values[:, freqs <= CUTOFF].mean()
print(f"mean uncertainty above cutoff: {above:.5f}")
print(f"mean uncertainty below cutoff: {below:.5f}")
print("stochasticity lives where content had to be generated.")

out_dir = Path(__file__).parent / "out"
out_dir.mkdir(exist_ok=True)
rendered = clip_for_render(umap, percentile=90.0)
export_map(rendered, out_dir / "uncertainty.pgm", fmt="pgm")
export_map(rendered, out_dir / "uncertainty.csv", fmt="csv")
print(f"wrote {out_dir / 'uncertainty.pgm'} and {out_dir / 'uncertainty.csv'}")
print("image rows run from Nyquist (top) down to DC; columns are frames.")
