"""Scoring abstractions: scalar scores with direction metadata, fractional
ranking, rank-averaging ensembles, and the native LSD oracle verifier.

Raw verifier outputs are kept as-is and paired with an explicit direction
instead of being negated, so manifests stay inspectable.
"""

from __future__ import annotations

from abc import ABC, abstractmethod
from dataclasses import dataclass, field
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.stats import rankdata

from .dsp import AudioBuffer, StftParams, lsd
from .errors import DimensionError, ParameterError


class Direction(str, Enum):
    HIGHER_BETTER = "higher_better"
    LOWER_BETTER = "lower_better"


class ConditionKind(str, Enum):
    NONE = "none"
    REFERENCE_AUDIO = "reference_audio"
    REFERENCE_TEXT = "reference_text"
    TRANSCRIPT = "transcript"
    SPEAKER_PROMPT = "speaker_prompt"


@dataclass(frozen=True)
class Score:
    value: float
    direction: Direction

    def __post_init__(self):
        if not np.isfinite(self.value):
            raise ParameterError(f"score value must be finite, got {self.value}")
        object.__setattr__(self, "value", float(self.value))
        object.__setattr__(self, "direction", Direction(self.direction))


@dataclass(frozen=True)
class Condition:
    """Optional conditioning input: a file path or text, typed by kind."""

    kind: ConditionKind = ConditionKind.NONE
    payload: str | None = None

    def __post_init__(self):
        object.__setattr__(self, "kind", ConditionKind(self.kind))
        if (self.payload is not None) != (self.kind != ConditionKind.NONE):
            raise ParameterError("payload must be present iff kind is not 'none'")


@dataclass(frozen=True)
class VerifierSpec:
    """Declarative description of a verifier tree (at most one ensemble level)."""

    name: str
    backend: str  # oracle_lsd | external | ensemble
    condition: Condition = field(default_factory=Condition)
    members: tuple = ()
    bridge_id: str | None = None

    def __post_init__(self):
        if self.backend not in ("oracle_lsd", "external", "ensemble", "callable"):
            raise ParameterError(f"unknown verifier backend {self.backend!r}")
        if self.backend == "ensemble":
            if len(self.members) < 2:
                raise ParameterError("an ensemble needs at least 2 member verifiers")
            if any(m.backend == "ensemble" for m in self.members):
                raise ParameterError("ensembles may not nest ensembles")
        if self.backend == "oracle_lsd" and self.condition.kind != ConditionKind.REFERENCE_AUDIO:
            raise ParameterError("oracle_lsd requires a reference_audio condition")
        object.__setattr__(self, "members", tuple(self.members))

    def to_json_dict(self) -> dict:
        return {
            "name": self.name,
            "backend": self.backend,
            "condition": {"kind": self.condition.kind.value, "payload": self.condition.payload},
            "members": [m.to_json_dict() for m in self.members],
            "bridge_id": self.bridge_id,
        }


@dataclass(frozen=True)
class ScoreTable:
    """Rectangular candidates x verifiers grid of scores.

    Each column holds one verifier's scores and must carry one direction.
    """

    rows: tuple
    verifier_names: tuple

    def __post_init__(self):
        rows = tuple(tuple(r) for r in self.rows)
        names = tuple(self.verifier_names)
        if not rows or not names:
            raise ParameterError("score table must have at least one row and one column")
        if any(len(r) != len(names) for r in rows):
            raise DimensionError("score table rows must all match the verifier name count")
        for j in range(len(names)):
            directions = {r[j].direction for r in rows}
            if len(directions) != 1:
                raise ParameterError(f"column {names[j]!r} mixes score directions")
        object.__setattr__(self, "rows", rows)
        object.__setattr__(self, "verifier_names", names)

    @property
    def num_candidates(self) -> int:
        return len(self.rows)

    def column(self, j: int) -> list[Score]:
        return [r[j] for r in self.rows]


def fractional_ranks(scores: Sequence[Score]) -> np.ndarray:
    """Rank scores with the best at 1; ties get the mean of spanned ranks.

    The rank sum is always N(N+1)/2, and ranks are invariant under any
    strictly monotone transform of the values.
    """
    if len(scores) == 0:
        raise ParameterError("cannot rank an empty score list")
    directions = {s.direction for s in scores}
    if len(directions) != 1:
        raise ParameterError("fractional_ranks requires a uniform score direction")
    values = np.array([s.value for s in scores], dtype=np.float64)
    if directions.pop() == Direction.HIGHER_BETTER:
        values = -values
    return rankdata(values, method="average")


def ensemble_scores(table: ScoreTable) -> list[Score]:
    """Mean fractional rank per candidate across all verifier columns.

    Lower mean rank is better, so the result is direction lower_better.
    """
    rank_columns = [
        fractional_ranks(table.column(j)) for j in range(len(table.verifier_names))
    ]
    mean_ranks = np.mean(np.stack(rank_columns, axis=1), axis=1)
    return [Score(v, Direction.LOWER_BETTER) for v in mean_ranks]


def aggregate_aesthetics(
    ce: Sequence[float], cu: Sequence[float], pc: Sequence[float], pq: Sequence[float]
) -> list[Score]:
    """Fold the four aesthetics axes into one score by mean fractional rank."""
    lengths = {len(ce), len(cu), len(pc), len(pq)}
    if len(lengths) != 1:
        raise DimensionError("aesthetics axis lists must have equal length")
    rows = [
        tuple(Score(axis[i], Direction.HIGHER_BETTER) for axis in (ce, cu, pc, pq))
        for i in range(len(ce))
    ]
    return ensemble_scores(ScoreTable(rows=rows, verifier_names=("ce", "cu", "pc", "pq")))


def select_best(scores: Sequence[Score], tie_break: str = "lowest_index") -> int:
    """Index of the best score; ties go to the lowest candidate index."""
    if tie_break != "lowest_index":
        raise ParameterError(f"unknown tie_break policy {tie_break!r}")
    if len(scores) == 0:
        raise ParameterError("cannot select from an empty score list")
    directions = {s.direction for s in scores}
    if len(directions) != 1:
        raise ParameterError("select_best requires a uniform score direction")
    values = np.array([s.value for s in scores], dtype=np.float64)
    if directions.pop() == Direction.HIGHER_BETTER:
        return int(np.argmax(values))
    return int(np.argmin(values))


def oracle_lsd_score(
    candidate: AudioBuffer, reference: AudioBuffer, params: StftParams | None = None
) -> Score:
    """LSD against the ground-truth reference; lower is better."""
    return Score(lsd(candidate, reference, params), Direction.LOWER_BETTER)


class Verifier(ABC):
    """Batch-aware scoring interface.

    ``score_one`` produces the raw per-candidate scores for every column the
    verifier contributes (an ensemble contributes its members' columns).
    ``finalize`` turns a batch of raw rows into one final score per
    candidate; rank-based verifiers rank within exactly the rows they are
    given, so the caller controls the ranking scope.
    """

    name: str
    spec: VerifierSpec

    @abstractmethod
    def score_one(self, candidate: AudioBuffer) -> dict[str, Score]:
        """Raw scores for one candidate, keyed by column name."""

    @abstractmethod
    def finalize(self, raw_rows: Sequence[dict[str, Score]]) -> list[Score]:
        """Final per-candidate scores for a batch of raw rows."""

    def ranks(self, raw_rows: Sequence[dict[str, Score]]) -> dict[str, np.ndarray]:
        """Fractional ranks per column plus the finalized column."""
        out = {}
        for column in raw_rows[0]:
            out[column] = fractional_ranks([row[column] for row in raw_rows])
        finals = self.finalize(raw_rows)
        out[self.name] = fractional_ranks(finals)
        return out


class OracleLsdVerifier(Verifier):
    """Full-reference oracle: LSD against a known high-resolution signal."""

    def __init__(self, reference: AudioBuffer, stft_params: StftParams | None = None,
                 name: str = "lsd", reference_path: str | None = None):
        self.name = name
        self.reference = reference
        self.stft_params = stft_params or StftParams()
        self.spec = VerifierSpec(
            name=name,
            backend="oracle_lsd",
            condition=Condition(ConditionKind.REFERENCE_AUDIO, reference_path or "<in-memory>"),
        )

    def score_one(self, candidate: AudioBuffer) -> dict[str, Score]:
        return {self.name: oracle_lsd_score(candidate, self.reference, self.stft_params)}

    def finalize(self, raw_rows: Sequence[dict[str, Score]]) -> list[Score]:
        return [row[self.name] for row in raw_rows]


class CallableVerifier(Verifier):
    """Wraps a plain function of the waveform; useful for scripted scoring."""

    def __init__(self, name: str, fn: Callable[[AudioBuffer], float],
                 direction: Direction = Direction.HIGHER_BETTER):
        self.name = name
        self.fn = fn
        self.direction = Direction(direction)
        self.spec = VerifierSpec(name=name, backend="callable")

    def score_one(self, candidate: AudioBuffer) -> dict[str, Score]:
        return {self.name: Score(self.fn(candidate), self.direction)}

    def finalize(self, raw_rows: Sequence[dict[str, Score]]) -> list[Score]:
        return [row[self.name] for row in raw_rows]


class EnsembleVerifier(Verifier):
    """Rank-averaging ensemble over two or more member verifiers.

    Members are scored on the same batch; each member's finalized column is
    converted to fractional ranks and the per-candidate mean rank becomes
    the ensemble score (lower is better). Weights default to equal.
    """

    def __init__(self, members: Sequence[Verifier], name: str = "ensemble",
                 weights: Sequence[float] | None = None):
        if len(members) < 2:
            raise ParameterError("an ensemble needs at least 2 member verifiers")
        if any(isinstance(m, EnsembleVerifier) for m in members):
            raise ParameterError("ensembles may not nest ensembles")
        if weights is not None and len(weights) != len(members):
            raise DimensionError("one weight per member required")
        self.name = name
        self.members = list(members)
        self.weights = None if weights is None else np.asarray(weights, dtype=np.float64)
        self.spec = VerifierSpec(
            name=name, backend="ensemble", members=tuple(m.spec for m in self.members)
        )

    def score_one(self, candidate: AudioBuffer) -> dict[str, Score]:
        merged: dict[str, Score] = {}
        for member in self.members:
            for column, score in member.score_one(candidate).items():
                if column in merged:
                    raise ParameterError(f"duplicate verifier column {column!r}")
                merged[column] = score
        return merged

    def finalize(self, raw_rows: Sequence[dict[str, Score]]) -> list[Score]:
        rank_columns = []
        for member in self.members:
            member_finals = member.finalize(raw_rows)
            rank_columns.append(fractional_ranks(member_finals))
        stacked = np.stack(rank_columns, axis=1)
        mean_ranks = (
            stacked.mean(axis=1)
            if self.weights is None
            else stacked @ (self.weights / self.weights.sum())
        )
        return [Score(v, Direction.LOWER_BETTER) for v in mean_ranks]

    def ranks(self, raw_rows: Sequence[dict[str, Score]]) -> dict[str, np.ndarray]:
        out = super().ranks(raw_rows)
        for member in self.members:
            out[member.name] = fractional_ranks(member.finalize(raw_rows))
        return out


class AestheticsAggregateVerifier(Verifier):
    """Four aesthetics axes folded into one lower_better column.

    The fold is the same rank-averaging as an ensemble, but the result acts
    as a single member column, so it can sit inside an outer ensemble
    without nesting ensembles.
    """

    AXES = ("ce", "cu", "pc", "pq")

    def __init__(self, axis_verifiers: Sequence[Verifier], name: str = "aes"):
        if len(axis_verifiers) != 4:
            raise ParameterError("aesthetics aggregation takes exactly 4 axis verifiers")
        self.name = name
        self.axis_verifiers = list(axis_verifiers)
        self.spec = VerifierSpec(
            name=name,
            backend=axis_verifiers[0].spec.backend,
            condition=axis_verifiers[0].spec.condition,
            bridge_id=axis_verifiers[0].spec.bridge_id,
        )

    def score_one(self, candidate: AudioBuffer) -> dict[str, Score]:
        merged: dict[str, Score] = {}
        for verifier in self.axis_verifiers:
            merged.update(verifier.score_one(candidate))
        return merged

    def finalize(self, raw_rows: Sequence[dict[str, Score]]) -> list[Score]:
        axes = []
        for verifier in self.axis_verifiers:
            finals = verifier.finalize(raw_rows)
            if any(s.direction != Direction.HIGHER_BETTER for s in finals):
                raise ParameterError("aesthetics axes must be higher_better")
            axes.append([s.value for s in finals])
        return aggregate_aesthetics(*axes)
