"""Verifier-guided inference-time search for stochastic audio super-resolution.

The package pairs a latent-noise candidate generator with pluggable
verifiers and budgeted search algorithms, then quantifies the explored
search-space range and per-bin generative uncertainty.
"""

from .analysis import (
    CandidateSet,
    UncertaintyMap,
    clip_for_render,
    export_map,
    search_space_variance,
    uncertainty_map,
)
from .dsp import (
    AudioBuffer,
    Spectrogram,
    StftParams,
    istft,
    load_wav,
    lsd,
    lsd_mags,
    make_lowres,
    save_wav,
    stft,
)
from .generators import (
    Generator,
    GeneratorInfo,
    LatentNoise,
    SyntheticGenerator,
    SyntheticGenParams,
    make_test_corpus,
    sample_standard_noise,
    synthetic_generate,
)
from .search import (
    CandidateRecord,
    RunManifest,
    SearchConfig,
    SearchResult,
    derive_seed,
    perturb_noise,
    random_search,
    run_search,
    zero_order_search,
)
from .verifiers import (
    AestheticsAggregateVerifier,
    CallableVerifier,
    Condition,
    ConditionKind,
    Direction,
    EnsembleVerifier,
    OracleLsdVerifier,
    Score,
    ScoreTable,
    Verifier,
    VerifierSpec,
    aggregate_aesthetics,
    ensemble_scores,
    fractional_ranks,
    oracle_lsd_score,
    select_best,
)

__version__ = "0.1.0"

__all__ = [
    "AudioBuffer",
    "Spectrogram",
    "StftParams",
    "load_wav",
    "save_wav",
    "stft",
    "istft",
    "make_lowres",
    "lsd",
    "lsd_mags",
    "Score",
    "Direction",
    "Condition",
    "ConditionKind",
    "VerifierSpec",
    "ScoreTable",
    "Verifier",
    "OracleLsdVerifier",
    "CallableVerifier",
    "EnsembleVerifier",
    "AestheticsAggregateVerifier",
    "fractional_ranks",
    "ensemble_scores",
    "aggregate_aesthetics",
    "select_best",
    "oracle_lsd_score",
    "LatentNoise",
    "GeneratorInfo",
    "SyntheticGenParams",
    "SyntheticGenerator",
    "Generator",
    "sample_standard_noise",
    "synthetic_generate",
    "make_test_corpus",
    "SearchConfig",
    "CandidateRecord",
    "RunManifest",
    "SearchResult",
    "derive_seed",
    "perturb_noise",
    "random_search",
    "zero_order_search",
    "run_search",
    "CandidateSet",
    "UncertaintyMap",
    "search_space_variance",
    "uncertainty_map",
    "clip_for_render",
    "export_map",
    "__version__",
]
