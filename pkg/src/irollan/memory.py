"""Long-term memory: frame storage, recursive compression, mood-congruent
activation, and the consciousness channel with its protention predictor.

A store belongs to exactly one agent and is mutated only on that agent's
turn. Activation is read-only.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from random import Random
from typing import Callable, Sequence

from .fields import (
    TWO_PI,
    BlendConfig,
    FieldRow,
    PhenomenalField,
    Position,
    blend,
    field_similarity,
    greedy_pairs,
    row_similarity_matrix,
)


class MemoryStoreError(ValueError):
    """Base error for memory operations."""


@dataclass(frozen=True)
class MemoryFrame:
    """One remembered moment: a field plus its emotional encoding context."""

    field: PhenomenalField
    timestamp: int
    arousal_at_encoding: float
    pleasure_at_encoding: float
    compressed: bool = False
    source_span: tuple[int, int] | None = None

    def __post_init__(self) -> None:
        span = self.source_span if self.source_span is not None else (self.timestamp, self.timestamp)
        object.__setattr__(self, "source_span", span)
        if span[0] > span[1]:
            raise MemoryStoreError(f"source_span reversed: {span}")
        if not self.compressed and span[0] != span[1]:
            raise MemoryStoreError("uncompressed frames must cover a single step")
        for name in ("arousal_at_encoding", "pleasure_at_encoding"):
            v = getattr(self, name)
            if not (-1.0 < v < 1.0):
                raise MemoryStoreError(f"{name} out of (-1, 1): {v}")

    def to_record(self) -> dict:
        """Snapshot record: timestamp, span, affect, flag, row count."""
        return {
            "timestamp": self.timestamp,
            "span": list(self.source_span),
            "arousal": self.arousal_at_encoding,
            "pleasure": self.pleasure_at_encoding,
            "compressed": self.compressed,
            "rows": len(self.field),
        }


class MemoryStore:
    """Time-ordered frame storage with capacity-triggered compression."""

    def __init__(self, capacity: int = 200, compression_window: int = 10):
        if capacity < 1 or compression_window < 1:
            raise MemoryStoreError("capacity and compression_window must be positive")
        self.capacity = capacity
        self.compression_window = compression_window
        self.frames: list[MemoryFrame] = []

    def __len__(self) -> int:
        return len(self.frames)

    def store_frame(self, frame: MemoryFrame, cfg: BlendConfig, rng: Random) -> "MemoryStore":
        """Append a frame; compress the oldest window while over capacity."""
        if self.frames and frame.timestamp <= self.frames[-1].timestamp:
            raise MemoryStoreError(
                f"out-of-order timestamp {frame.timestamp} (last {self.frames[-1].timestamp})"
            )
        self.frames.append(frame)
        while len(self.frames) > self.capacity:
            if self.compression_window < 2:
                break  # a 1-frame window cannot shrink the store
            start = self._oldest_window_start()
            window = self.frames[start : start + self.compression_window]
            merged = compress_segment(window, cfg, rng)
            self.frames[start : start + self.compression_window] = [merged]
        return self

    def _oldest_window_start(self) -> int:
        """Prefer the oldest all-uncompressed window; fall back to the head."""
        w = self.compression_window
        for start in range(0, len(self.frames) - w + 1):
            if all(not f.compressed for f in self.frames[start : start + w]):
                return start
        return 0

    def snapshot(self) -> list[dict]:
        return [f.to_record() for f in self.frames]


def select_key_frame(segment: Sequence[MemoryFrame]) -> MemoryFrame:
    """The frame of strongest arousal; ties go to the earliest timestamp."""
    if not segment:
        raise MemoryStoreError("cannot select a key frame from an empty segment")
    return max(segment, key=lambda f: (f.arousal_at_encoding, -f.timestamp))


def compress_segment(segment: Sequence[MemoryFrame], cfg: BlendConfig, rng: Random) -> MemoryFrame:
    """Fold the segment into one compressed frame, seeded by the key frame.

    The fold blends the key frame's field with every segment frame in
    order (the key frame's own slot included).
    """
    if not segment:
        raise MemoryStoreError("cannot compress an empty segment")
    key = select_key_frame(segment)
    acc = key.field
    for frame in segment:
        acc = blend(acc, frame.field, cfg, rng)
    return MemoryFrame(
        field=acc,
        timestamp=key.timestamp,
        arousal_at_encoding=key.arousal_at_encoding,
        pleasure_at_encoding=key.pleasure_at_encoding,
        compressed=True,
        source_span=(segment[0].source_span[0], segment[-1].source_span[1]),
    )


def activation_scores(
    store: MemoryStore, pi: PhenomenalField, cfg: BlendConfig
) -> list[tuple[float, MemoryFrame]]:
    """Mood-congruent retrieval scores, best first.

    Similarity to the primal impression weighted by (1 + |arousal at
    encoding|); ties resolve to the earlier timestamp.
    """
    if not pi.rows:
        return []
    scored = [
        (field_similarity(frame.field, pi, cfg) * (1.0 + abs(frame.arousal_at_encoding)), frame)
        for frame in store.frames
    ]
    scored.sort(key=lambda pair: (-pair[0], pair[1].timestamp))
    return scored


def activate(
    store: MemoryStore,
    pi: PhenomenalField,
    retention: Sequence[PhenomenalField],
    k: int,
    cfg: BlendConfig,
    rng: Random,
) -> PhenomenalField:
    """Blend the fields of the top-k scoring frames into one activation."""
    del retention  # triggering context; scoring keys on the impression alone
    scored = activation_scores(store, pi, cfg)
    if not scored:
        return PhenomenalField()
    top = [frame for _, frame in scored[: max(k, 1)]]
    acc = top[0].field
    for frame in top[1:]:
        acc = blend(acc, frame.field, cfg, rng)
    return acc


def imagine(pi: PhenomenalField, activated: PhenomenalField, cfg: BlendConfig, rng: Random) -> PhenomenalField:
    """Blend observation with recollection."""
    return blend(pi, activated, cfg, rng)


@dataclass
class ConsciousnessChannel:
    """Working-memory contents of one step."""

    retention: tuple[PhenomenalField, ...]
    primal_impression: PhenomenalField
    activated_memory: PhenomenalField
    imagination: PhenomenalField
    protention: PhenomenalField | None = None

    def summary(self) -> str:
        return (
            f"retention {len(self.retention)} frames; impression {len(self.primal_impression)} rows; "
            f"recall {len(self.activated_memory)} rows; imagination {len(self.imagination)} rows"
        )


ProtentionPredictor = Callable[[ConsciousnessChannel, PhenomenalField, float], PhenomenalField]


def _shift_position(p: Position, dt: float, dp: float, dg: float) -> Position:
    theta = min(max(p.theta + dt, 0.0), math.pi)
    phi = math.fmod(p.phi + dp, TWO_PI)
    if phi < 0.0:
        phi += TWO_PI
    if phi >= TWO_PI:
        phi = 0.0
    return Position(theta=theta, phi=phi, gamma=max(p.gamma + dg, 0.0))


_DRIFT_CFG = BlendConfig()


def make_drift_predictor(channel: ConsciousnessChannel):
    """Build the persistence-with-drift forecaster for one channel.

    The drift map between the two most recent perceived fields is computed
    once and reused across every per-action forecast of the turn.
    """
    if not channel.retention or not channel.primal_impression.rows or not channel.retention[-1].rows:
        return lambda imagination, driver: imagination
    prev = channel.retention[-1]
    curr = channel.primal_impression
    drift_of_curr: dict[int, tuple[float, float, float]] = {}
    for ci, pi_ in greedy_pairs(row_similarity_matrix(curr, prev, _DRIFT_CFG)):
        cp, pp = curr.rows[ci].position, prev.rows[pi_].position
        dphi = math.fmod(cp.phi - pp.phi + math.pi, TWO_PI)
        if dphi < 0.0:
            dphi += TWO_PI
        dphi -= math.pi
        drift_of_curr[ci] = (cp.theta - pp.theta, dphi, cp.gamma - pp.gamma)

    def predict(imagination: PhenomenalField, driver: float) -> PhenomenalField:
        del driver  # carried through the interface; unused by this predictor
        if not imagination.rows:
            return imagination
        sim = row_similarity_matrix(imagination, curr, _DRIFT_CFG)
        best_of = sim.argmax(axis=1)
        out: list[FieldRow] = []
        for i, row in enumerate(imagination.rows):
            drift = drift_of_curr.get(int(best_of[i]))
            if drift is None:
                out.append(row)
            else:
                out.append(FieldRow(row.embedding, _shift_position(row.position, *drift)))
        return PhenomenalField(out)

    return predict


def persistence_with_drift(
    channel: ConsciousnessChannel, imagination: PhenomenalField, driver: float
) -> PhenomenalField:
    """Default forecaster: extrapolate position drift between the two most
    recent perceived fields onto matched imagination rows; embeddings are
    kept from the imagination. With no history the imagination persists.
    """
    return make_drift_predictor(channel)(imagination, driver)


def protend(channel: ConsciousnessChannel, driver: float, predictor: ProtentionPredictor) -> PhenomenalField:
    """Run the configured forecaster over the channel contents.

    Predictor failures propagate; the runtime substitutes the primal
    impression and logs the fault.
    """
    return predictor(channel, channel.imagination, driver)
