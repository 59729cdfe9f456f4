"""Budgeted inference-time search over latent noise.

Two strategies: independent best-of-N sampling, and iterative neighborhood
refinement around an elitist pivot. Both produce a replayable manifest
recording every candidate's seed, digest, scores, and ranks. Runs are
deterministic for a fixed config regardless of the parallelism setting;
results are always reduced in candidate-index order.
"""

from __future__ import annotations

import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .dsp import AudioBuffer
from .errors import ParameterError, SearchRuntimeError
from .generators import Generator, GeneratorInfo, LatentNoise, sample_standard_noise
from .hashing import digest_hex
from .verifiers import Score, Verifier, VerifierSpec, select_best

_MASK64 = 0xFFFFFFFFFFFFFFFF
_GOLDEN64 = 0x9E3779B97F4A7C15

MANIFEST_SCHEMA_VERSION = 1


def _splitmix64(x: int) -> int:
    x = (x + _GOLDEN64) & _MASK64
    z = x
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & _MASK64
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & _MASK64
    return z ^ (z >> 31)


def derive_seed(master_seed: int, index: int) -> int:
    """Stable per-candidate seed: splitmix64 of master XOR index * golden ratio."""
    if index < 0:
        raise ParameterError("index must be >= 0")
    mixed = (master_seed & _MASK64) ^ ((index * _GOLDEN64) & _MASK64)
    return _splitmix64(mixed)


def perturb_noise(pivot: LatentNoise, lambda_param: float, seed: int) -> LatentNoise:
    """Spherical mix y = lambda*pivot + sqrt(1-lambda^2)*eps.

    Preserves the standard-normal marginal when the pivot is standard
    normal; lambda=1 returns the pivot, lambda=0 a fresh draw.
    """
    if not 0.0 <= lambda_param <= 1.0:
        raise ParameterError(f"lambda must lie in [0, 1], got {lambda_param}")
    eps = sample_standard_noise(pivot.dim, seed)
    mixed = lambda_param * pivot.values + np.sqrt(1.0 - lambda_param**2) * eps.values
    return LatentNoise.from_values(mixed)


def perturb_noise_euclidean(pivot: LatentNoise, lambda_param: float, seed: int) -> LatentNoise:
    """Alternative neighborhood: a step of Euclidean length lambda*sqrt(dim)."""
    if lambda_param < 0.0:
        raise ParameterError("lambda must be non-negative")
    eps = sample_standard_noise(pivot.dim, seed)
    direction = eps.values / np.linalg.norm(eps.values)
    return LatentNoise.from_values(pivot.values + lambda_param * np.sqrt(pivot.dim) * direction)


@dataclass(frozen=True)
class SearchConfig:
    algorithm: str = "random"  # random | zero_order
    budget_n: int = 120
    neighbors_k: int = 2
    lambda_param: float = 0.99
    master_seed: int = 0
    pivot_policy: str = "elitist"
    parallelism: int = 1
    perturb_mode: str = "spherical"  # spherical | euclidean

    def __post_init__(self):
        if self.algorithm not in ("random", "zero_order"):
            raise ParameterError(f"unknown algorithm {self.algorithm!r}")
        if self.budget_n < 1:
            raise ParameterError("budget_n must be >= 1")
        if not 0.0 <= self.lambda_param <= 1.0:
            raise ParameterError("lambda must lie in [0, 1]")
        if self.algorithm == "zero_order":
            if self.neighbors_k < 1:
                raise ParameterError("neighbors_k must be >= 1")
            if self.budget_n < self.neighbors_k:
                raise ParameterError("budget_n must be >= neighbors_k")
        if self.pivot_policy != "elitist":
            raise ParameterError(f"unknown pivot policy {self.pivot_policy!r}")
        if self.parallelism < 1:
            raise ParameterError("parallelism must be >= 1")
        if self.perturb_mode not in ("spherical", "euclidean"):
            raise ParameterError(f"unknown perturb mode {self.perturb_mode!r}")

    @property
    def rounds(self) -> int:
        return self.budget_n // self.neighbors_k

    def to_json_dict(self) -> dict:
        return {
            "algorithm": self.algorithm,
            "budget_n": self.budget_n,
            "neighbors_k": self.neighbors_k,
            "lambda": self.lambda_param,
            "master_seed": self.master_seed,
            "pivot_policy": self.pivot_policy,
            "parallelism": self.parallelism,
            "perturb_mode": self.perturb_mode,
        }


@dataclass
class CandidateRecord:
    index: int
    round: int
    noise_seed: int
    noise_digest: str
    scores: dict = field(default_factory=dict)
    ranks: dict = field(default_factory=dict)
    selected: bool = False
    artifact_path: str | None = None

    def to_json_dict(self) -> dict:
        return {
            "index": self.index,
            "round": self.round,
            "noise_seed": self.noise_seed,
            "noise_digest": self.noise_digest,
            "scores": {
                name: {"value": s.value, "direction": s.direction.value}
                for name, s in sorted(self.scores.items())
            },
            "ranks": {name: rank for name, rank in sorted(self.ranks.items())},
            "selected": self.selected,
            "artifact_path": self.artifact_path,
        }


@dataclass
class RunManifest:
    config: SearchConfig
    generator_info: GeneratorInfo
    verifier_specs: list[VerifierSpec]
    candidates: list[CandidateRecord]
    selected_index: int
    wall_times_ms: dict = field(default_factory=dict)
    schema_version: int = MANIFEST_SCHEMA_VERSION

    def to_json_dict(self) -> dict:
        return {
            "schema_version": self.schema_version,
            "config": self.config.to_json_dict(),
            "generator_info": self.generator_info.to_json_dict(),
            "verifier_specs": [v.to_json_dict() for v in self.verifier_specs],
            "candidates": [c.to_json_dict() for c in self.candidates],
            "selected_index": self.selected_index,
            "wall_times_ms": {k: int(v) for k, v in sorted(self.wall_times_ms.items())},
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True, indent=2, ensure_ascii=False)


@dataclass
class SearchResult:
    """A finished run: the manifest plus the waveforms it selected."""

    manifest: RunManifest
    selected_audio: AudioBuffer
    candidate_audio: list[AudioBuffer] | None = None


def _parallel_indexed(fn, items, parallelism: int, stage: str):
    """Map fn over items on a pool, reducing results in index order.

    A failure raises SearchRuntimeError carrying the smallest failing index.
    """
    if parallelism == 1 or len(items) <= 1:
        results = []
        for i, item in enumerate(items):
            try:
                results.append(fn(item))
            except Exception as exc:
                raise SearchRuntimeError(f"{stage} failed: {exc}", i) from exc
        return results
    with ThreadPoolExecutor(max_workers=parallelism) as pool:
        futures = [pool.submit(fn, item) for item in items]
        results = []
        for i, fut in enumerate(futures):
            try:
                results.append(fut.result())
            except Exception as exc:
                raise SearchRuntimeError(f"{stage} failed: {exc}", i) from exc
        return results


def _score_rows(verifier: Verifier, audios, parallelism: int):
    return _parallel_indexed(verifier.score_one, audios, parallelism, "verifier")


def _record_scores(record: CandidateRecord, row: dict, final: Score, verifier: Verifier,
                   ranks: dict, i: int) -> None:
    scores = dict(row)
    scores[verifier.name] = final
    record.scores = scores
    record.ranks = {name: float(col[i]) for name, col in sorted(ranks.items())}


def random_search(
    lr: AudioBuffer,
    generator: Generator,
    verifier: Verifier,
    config: SearchConfig,
    keep_candidates: bool = False,
) -> SearchResult:
    """Best-of-N over independent standard-normal noises.

    Rank-based verifiers rank over the full N-candidate set. The selected
    candidate is the verifier-best, ties to the lowest index.
    """
    if config.algorithm != "random":
        raise ParameterError("config.algorithm must be 'random'")
    t_start = time.perf_counter()
    info = generator.info()

    seeds = [derive_seed(config.master_seed, i) for i in range(config.budget_n)]
    noises = [sample_standard_noise(info.noise_dim, s) for s in seeds]

    t_gen = time.perf_counter()
    audios = _parallel_indexed(
        lambda noise: generator.generate(lr, noise), noises, config.parallelism, "generator"
    )
    t_score = time.perf_counter()
    rows = _score_rows(verifier, audios, config.parallelism)
    finals = verifier.finalize(rows)
    ranks = verifier.ranks(rows)
    selected = select_best(finals)
    t_end = time.perf_counter()

    records = []
    for i in range(config.budget_n):
        record = CandidateRecord(
            index=i, round=0, noise_seed=seeds[i], noise_digest=digest_hex(noises[i].values)
        )
        _record_scores(record, rows[i], finals[i], verifier, ranks, i)
        record.selected = i == selected
        records.append(record)

    manifest = RunManifest(
        config=config,
        generator_info=info,
        verifier_specs=[verifier.spec],
        candidates=records,
        selected_index=selected,
        wall_times_ms={
            "generate": (t_score - t_gen) * 1000,
            "score": (t_end - t_score) * 1000,
            "total": (t_end - t_start) * 1000,
        },
    )
    return SearchResult(
        manifest=manifest,
        selected_audio=audios[selected],
        candidate_audio=list(audios) if keep_candidates else None,
    )


def zero_order_search(
    lr: AudioBuffer,
    generator: Generator,
    verifier: Verifier,
    config: SearchConfig,
    keep_candidates: bool = False,
) -> SearchResult:
    """Iterative neighborhood refinement with an elitist pivot.

    Each round evaluates the pivot's cached candidate plus K-1 fresh
    perturbations at mixing coefficient lambda; the round's best becomes
    the next pivot, so the final pivot is the best candidate seen.
    Rank-based verifiers rank within each round's K-candidate set.
    """
    if config.algorithm != "zero_order":
        raise ParameterError("config.algorithm must be 'zero_order'")
    t_start = time.perf_counter()
    info = generator.info()
    perturb = perturb_noise if config.perturb_mode == "spherical" else perturb_noise_euclidean

    gen_ms = 0.0
    score_ms = 0.0

    pivot_seed = derive_seed(config.master_seed, 0)
    pivot_noise = sample_standard_noise(info.noise_dim, pivot_seed)
    t0 = time.perf_counter()
    pivot_audio = _parallel_indexed(
        lambda noise: generator.generate(lr, noise), [pivot_noise], 1, "generator"
    )[0]
    t1 = time.perf_counter()
    pivot_row = _score_rows(verifier, [pivot_audio], 1)[0]
    gen_ms += (t1 - t0) * 1000
    score_ms += (time.perf_counter() - t1) * 1000

    records: list[CandidateRecord] = []
    kept: list[AudioBuffer] = []
    selected_global = 0
    selected_audio = pivot_audio

    for r in range(config.rounds):
        fresh_seeds = [
            derive_seed(config.master_seed, r * config.neighbors_k + k)
            for k in range(1, config.neighbors_k)
        ]
        fresh_noises = [perturb(pivot_noise, config.lambda_param, s) for s in fresh_seeds]

        t0 = time.perf_counter()
        try:
            fresh_audios = _parallel_indexed(
                lambda noise: generator.generate(lr, noise),
                fresh_noises,
                config.parallelism,
                "generator",
            )
            t1 = time.perf_counter()
            fresh_rows = _score_rows(verifier, fresh_audios, config.parallelism)
        except SearchRuntimeError as exc:
            # Report the failing slot as its global record index (slot 0 of
            # each round is the cached pivot).
            raise SearchRuntimeError(
                str(exc).rsplit(" (candidate", 1)[0],
                len(records) + 1 + exc.candidate_index,
            ) from exc
        gen_ms += (t1 - t0) * 1000
        score_ms += (time.perf_counter() - t1) * 1000

        round_rows = [pivot_row] + fresh_rows
        round_seeds = [pivot_seed] + fresh_seeds
        round_noises = [pivot_noise] + fresh_noises
        round_audios = [pivot_audio] + fresh_audios
        finals = verifier.finalize(round_rows)
        ranks = verifier.ranks(round_rows)
        best_local = select_best(finals)

        base_index = len(records)
        for j in range(config.neighbors_k):
            record = CandidateRecord(
                index=base_index + j,
                round=r,
                noise_seed=round_seeds[j],
                noise_digest=digest_hex(round_noises[j].values),
            )
            _record_scores(record, round_rows[j], finals[j], verifier, ranks, j)
            records.append(record)
        if keep_candidates:
            kept.extend(round_audios)

        pivot_seed = round_seeds[best_local]
        pivot_noise = round_noises[best_local]
        pivot_audio = round_audios[best_local]
        pivot_row = round_rows[best_local]
        selected_global = base_index + best_local
        selected_audio = pivot_audio

    records[selected_global].selected = True
    t_end = time.perf_counter()

    manifest = RunManifest(
        config=config,
        generator_info=info,
        verifier_specs=[verifier.spec],
        candidates=records,
        selected_index=selected_global,
        wall_times_ms={
            "generate": gen_ms,
            "score": score_ms,
            "total": (t_end - t_start) * 1000,
        },
    )
    return SearchResult(
        manifest=manifest,
        selected_audio=selected_audio,
        candidate_audio=kept if keep_candidates else None,
    )


def run_search(
    lr: AudioBuffer,
    generator: Generator,
    verifier: Verifier,
    config: SearchConfig,
    keep_candidates: bool = False,
) -> SearchResult:
    """Dispatch to the configured algorithm."""
    if config.algorithm == "random":
        return random_search(lr, generator, verifier, config, keep_candidates)
    return zero_order_search(lr, generator, verifier, config, keep_candidates)
